/*
 * Copyright 2026 The xlane Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "xlane/service/stack.hpp"

namespace xlane::service {

ServiceStack::ServiceStack(std::shared_ptr<const LnLstmParamsd> params, StackConfig cfg) {
  if (cfg.workers < 1) throw ValidationError("service: need at least one worker");
  std::vector<Endpoint> endpoints;
  for (int i = 0; i < cfg.workers; ++i) {
    workers_.push_back(std::make_unique<WorkerServer>(params));
    endpoints.push_back({"127.0.0.1", workers_.back()->port()});
  }
  pool_ = std::make_shared<WorkerPool>(std::move(endpoints), cfg.routing, 1, cfg.worker_timeout);
  broker_ = std::make_unique<SessionBroker>(cfg.broker, pool_);
  ws_ = std::make_unique<WsServer>(*broker_, cfg.port);
  adaptor_ = std::make_unique<LiveAdaptor>(cfg.adaptor);
  sub_ = adaptor_->subscribe();
  broker_thread_ = std::jthread([this](std::stop_token st) { broker_->run(*sub_, st); });
}

ServiceStack::~ServiceStack() {
  broker_thread_.request_stop();
  if (broker_thread_.joinable()) broker_thread_.join();
  adaptor_.reset();
  ws_->stop();
  broker_->drain();
  ws_.reset();
  broker_.reset();
  pool_.reset();
  for (auto& w : workers_) w->stop();
}

}  // namespace xlane::service
