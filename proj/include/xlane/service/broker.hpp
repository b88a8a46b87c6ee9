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

// Per-vehicle prediction sessions over the enriched frame stream.
//
// Client protocol (JSON text messages):
//   client -> broker  {"type": "open", "uuid": ...}
//                     {"type": "close", "uuid": ...}
//   broker -> client  {"type": "prediction", "uuid", "t", "seq", "probabilities",
//                      "predicted_class", "top3", "explanation", "latency_ms"}
//                     {"type": "session_opened", "uuid", "state"}
//                     {"type": "session_closed", "uuid", "reason"}
//                     {"type": "roster", "t", "vehicles": [...]}
//                     {"type": "gap", "missed"}
//                     {"type": "error", "uuid"?, "error"}
//
// A session warms up until its vehicle has 1.5 s of history, then emits one
// prediction per new frame. Predictions of one session are dispatched and
// delivered in frame order. Sessions close when the vehicle has been absent
// for longer than the ttl, or when they have had no subscriber for the grace
// period (both measured in stream time on the frame tick).

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>

#include <nlohmann/json.hpp>

#include "xlane/service/adaptor.hpp"
#include "xlane/service/worker_pool.hpp"

namespace xlane::service {

using ClientId = std::uint64_t;
/// Delivers one text message to a client. Called from broker threads; must
/// not block.
using ClientSink = std::function<void(const std::string&)>;

enum class SessionState { kWarming, kActive, kClosing };
std::string_view to_string(SessionState s);

struct BrokerConfig {
  double ttl = 5.0;
  double grace_s = 2.0;
  std::size_t ring_capacity = 8;
  int roster_every = 2;  // frames; 0 disables
  std::size_t dispatch_threads = 4;
  /// Attribution settings merged into every worker request.
  nlohmann::json method = {{"method", "lrp"}, {"ln_rule", "omega"}};
};

struct BrokerStats {
  std::uint64_t frames = 0;
  std::uint64_t predictions = 0;
  std::uint64_t errors = 0;
  std::uint64_t sessions_opened = 0;
  std::uint64_t sessions_closed = 0;
};

class SessionBroker {
 public:
  SessionBroker(BrokerConfig cfg, std::shared_ptr<WorkerPool> workers);
  ~SessionBroker();
  SessionBroker(const SessionBroker&) = delete;
  SessionBroker& operator=(const SessionBroker&) = delete;

  void attach_client(ClientId id, ClientSink sink);
  /// Drops the client from every session; orphaned sessions are collected
  /// after the grace period.
  void detach_client(ClientId id);
  /// Parses and applies one client message; protocol errors are answered
  /// with an error message.
  void handle_message(ClientId id, const std::string& text);

  /// Returns false (and answers not_found) when the vehicle is not live.
  bool open_session(ClientId id, const std::string& uuid);
  void close_session(ClientId id, const std::string& uuid);

  using Clock = std::chrono::steady_clock;
  void on_frame(FramePtr f, Clock::time_point ingest = Clock::now());
  void on_gap(std::size_t missed);
  /// Consumes a stream subscription until it closes or `stop` is requested.
  void run(Subscription& sub, std::stop_token stop);

  /// Blocks until every dispatched prediction has been delivered.
  void drain();

  std::size_t session_count() const;
  std::optional<SessionState> state(const std::string& uuid) const;
  std::size_t subscriber_count(const std::string& uuid) const;
  BrokerStats stats() const;

 private:
  struct Session;
  struct Dispatcher;

  void close_locked(const std::string& uuid, const std::string& reason,
                    std::vector<std::pair<ClientSink, std::string>>& out);
  void send(ClientId id, const std::string& msg);
  void deliver(const std::shared_ptr<Session>& s, std::uint64_t seq, double t,
               const DispatchResult& r, Clock::time_point ingest);

  BrokerConfig cfg_;
  std::shared_ptr<WorkerPool> workers_;
  std::unique_ptr<Dispatcher> dispatcher_;

  mutable std::mutex mu_;
  std::map<ClientId, ClientSink> clients_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::deque<FramePtr> recent_;
  BrokerStats stats_;

  std::mutex flight_mu_;
  std::condition_variable flight_cv_;
  std::size_t in_flight_ = 0;
};

}  // namespace xlane::service
