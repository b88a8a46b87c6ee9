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

#pragma once

#include <memory>
#include <thread>
#include <vector>

#include "xlane/service/adaptor.hpp"
#include "xlane/service/broker.hpp"
#include "xlane/service/worker.hpp"
#include "xlane/service/worker_pool.hpp"
#include "xlane/service/ws.hpp"

namespace xlane::service {

struct StackConfig {
  int workers = 2;
  int port = 0;  // websocket port, 0 = ephemeral
  Routing routing = Routing::kRoundRobin;
  std::chrono::milliseconds worker_timeout{2000};
  AdaptorConfig adaptor;
  BrokerConfig broker;
};

/// In-process deployment: N HTTP workers, the worker pool, the broker and
/// its websocket front end, and the live adaptor feeding the broker. Frames
/// enter through adaptor().ingest().
class ServiceStack {
 public:
  ServiceStack(std::shared_ptr<const LnLstmParamsd> params, StackConfig cfg);
  ~ServiceStack();
  ServiceStack(const ServiceStack&) = delete;
  ServiceStack& operator=(const ServiceStack&) = delete;

  LiveAdaptor& adaptor() { return *adaptor_; }
  SessionBroker& broker() { return *broker_; }
  WorkerPool& pool() { return *pool_; }
  std::vector<std::unique_ptr<WorkerServer>>& workers() { return workers_; }
  int port() const { return ws_->port(); }

 private:
  std::vector<std::unique_ptr<WorkerServer>> workers_;
  std::shared_ptr<WorkerPool> pool_;
  std::unique_ptr<SessionBroker> broker_;
  std::unique_ptr<WsServer> ws_;
  std::unique_ptr<LiveAdaptor> adaptor_;
  std::shared_ptr<Subscription> sub_;
  std::jthread broker_thread_;
};

}  // namespace xlane::service
