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

// Stateless prediction workers. A request carries a window plus the
// attribution settings; the response carries the prediction, the 4x49
// relevance map and the super-feature explanation. Identical requests give
// byte-identical responses.
//
// POST /predict
//   {"window": <window.json>, "method": "lrp" | "ig",
//    "ln_rule": "omega" | "identity", "omega_variant": "literal" | "full",
//    "epsilon": 1e-3, "ig_steps": 50, "ig_baseline": "sentinel" | "zero",
//    "class": "left" | "keep" | "right"}            (all but window optional)
//   200 {"window_id", "prediction", "explained_class", "method",
//        "relevance", "explanation"}
//   400 {"error": "..."} for schema or validation failures
// GET /healthz -> 200 {"status": "ok"}

#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "xlane/model.hpp"

namespace httplib {
class Server;
}

namespace xlane::service {

struct PredictResult {
  int status = 200;
  std::string body;
};

/// The request handler, independent of transport.
class Predictor {
 public:
  explicit Predictor(std::shared_ptr<const LnLstmParamsd> params);

  PredictResult handle(const std::string& body) const;
  nlohmann::json predict(const nlohmann::json& request) const;

 private:
  std::shared_ptr<const LnLstmParamsd> params_;
};

/// HTTP front end for a Predictor on 127.0.0.1.
class WorkerServer {
 public:
  /// port 0 binds an ephemeral port.
  WorkerServer(std::shared_ptr<const LnLstmParamsd> params, int port = 0);
  ~WorkerServer();
  WorkerServer(const WorkerServer&) = delete;
  WorkerServer& operator=(const WorkerServer&) = delete;

  int port() const { return port_; }
  void stop();
  bool running() const;
  std::size_t served() const { return served_; }

  /// Test hook: every following /predict sleeps this long before answering.
  void set_delay(std::chrono::milliseconds d) { delay_ms_ = d.count(); }

 private:
  Predictor predictor_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> served_{0};
  std::atomic<long> delay_ms_{0};
};

}  // namespace xlane::service
