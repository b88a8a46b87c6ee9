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

#include "xlane/service/worker.hpp"

#include "xlane/explanation.hpp"
#include "xlane/ig.hpp"
#include "xlane/json_io.hpp"
#include "xlane/lrp.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen
// parameter names.
#include <httplib.h>

namespace xlane::service {

using nlohmann::json;

Predictor::Predictor(std::shared_ptr<const LnLstmParamsd> params) : params_(std::move(params)) {
  if (!params_) throw ValidationError("worker: no model loaded");
  params_->validate();
}

json Predictor::predict(const json& req) const {
  if (!req.is_object()) throw ValidationError("request must be a JSON object");
  if (!req.contains("window")) throw ValidationError("request lacks 'window'");
  const ObservationWindow w = window_from_json(req["window"]);
  const std::string method = req.value("method", "lrp");

  const auto [out, trace] = forward<double>(w.frames, *params_);
  LaneClass target = out.predicted_class;
  if (req.contains("class") && !req["class"].is_null()) {
    target = lane_class_from_string(req["class"].get<std::string>());
  }

  WindowMatrixd relevance;
  json method_json;
  json sinks = json::object();
  if (method == "lrp") {
    LrpConfig cfg;
    cfg.ln_rule = ln_rule_from_string(req.value("ln_rule", "omega"));
    cfg.omega_variant = omega_variant_from_string(req.value("omega_variant", "literal"));
    cfg.epsilon = req.value("epsilon", cfg.epsilon);
    const auto e = explain<double>(trace, *params_, target, cfg);
    relevance = e.relevance;
    sinks = e.ledger.sinks;
    method_json = {{"name", "lrp"},
                   {"ln_rule", to_string(cfg.ln_rule)},
                   {"omega_variant", to_string(cfg.omega_variant)},
                   {"epsilon", cfg.epsilon}};
  } else if (method == "ig") {
    IgConfig cfg;
    cfg.steps = req.value("ig_steps", cfg.steps);
    cfg.baseline = ig_baseline_from_string(req.value("ig_baseline", "sentinel"));
    relevance = integrated_gradients(w, *params_, target, cfg);
    method_json = {{"name", "ig"}, {"steps", cfg.steps}, {"baseline", to_string(cfg.baseline)}};
  } else {
    throw ValidationError("unknown method '" + method + "' (expected lrp or ig)");
  }
  const SuperFeatureExplanation sf = aggregate_super(aggregate_time(relevance));
  return {{"window_id", w.id},
          {"prediction", prediction_to_json(out)},
          {"explained_class", to_string(target)},
          {"method", std::move(method_json)},
          {"relevance", matrix_to_json(relevance)},
          {"sinks", std::move(sinks)},
          {"explanation", explanation_to_json(sf, w.slot_ids)}};
}

PredictResult Predictor::handle(const std::string& body) const {
  try {
    return {200, predict(json::parse(body)).dump()};
  } catch (const json::exception& e) {
    return {400, json{{"error", std::string("malformed request: ") + e.what()}}.dump()};
  } catch (const ValidationError& e) {
    return {400, json{{"error", e.what()}}.dump()};
  } catch (const NumericError& e) {
    return {422, json{{"error", e.what()}}.dump()};
  } catch (const std::exception& e) {
    return {500, json{{"error", e.what()}}.dump()};
  }
}

WorkerServer::WorkerServer(std::shared_ptr<const LnLstmParamsd> params, int port)
    : predictor_(std::move(params)), server_(std::make_unique<httplib::Server>()) {
  server_->set_tcp_nodelay(true);
  server_->Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
    if (const long d = delay_ms_.load(); d > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(d));
    }
    const PredictResult r = predictor_.handle(req.body);
    ++served_;
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  port_ = port == 0 ? server_->bind_to_any_port("127.0.0.1")
                    : (server_->bind_to_port("127.0.0.1", port) ? port : -1);
  if (port_ <= 0) throw Error("worker: cannot bind 127.0.0.1:" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

WorkerServer::~WorkerServer() { stop(); }

void WorkerServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

bool WorkerServer::running() const { return server_ && server_->is_running(); }

}  // namespace xlane::service
