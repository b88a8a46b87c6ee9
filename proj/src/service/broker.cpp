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

#include "xlane/service/broker.hpp"

#include <set>

#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/asio/thread_pool.hpp>
#include <spdlog/spdlog.h>

#include "xlane/json_io.hpp"
#include "xlane/twin/windows.hpp"

namespace xlane::service {

using nlohmann::json;
namespace asio = boost::asio;

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::kWarming: return "warming";
    case SessionState::kActive: return "active";
    case SessionState::kClosing: return "closing";
  }
  return "?";
}

struct SessionBroker::Dispatcher {
  explicit Dispatcher(std::size_t threads) : pool(threads == 0 ? 1 : threads) {}
  asio::thread_pool pool;
};

struct SessionBroker::Session {
  Session(std::string id, asio::thread_pool& pool)
      : uuid(std::move(id)), strand(asio::make_strand(pool.get_executor())) {}

  std::string uuid;
  SessionState state = SessionState::kWarming;
  std::set<ClientId> subscribers;
  std::deque<FramePtr> ring;
  double last_seen = 0.0;
  std::optional<double> orphaned_since;
  std::uint64_t next_seq = 0;
  bool closed = false;
  asio::strand<asio::thread_pool::executor_type> strand;
};

namespace {

std::string message(const json& j) { return j.dump(); }

std::string closed_message(const std::string& uuid, const std::string& reason) {
  return message({{"type", "session_closed"}, {"uuid", uuid}, {"reason", reason}});
}

std::string error_message(const std::string& uuid, const std::string& error) {
  json j = {{"type", "error"}, {"error", error}};
  if (!uuid.empty()) j["uuid"] = uuid;
  return message(j);
}

}  // namespace

SessionBroker::SessionBroker(BrokerConfig cfg, std::shared_ptr<WorkerPool> workers)
    : cfg_(std::move(cfg)),
      workers_(std::move(workers)),
      dispatcher_(std::make_unique<Dispatcher>(cfg_.dispatch_threads)) {
  if (!workers_) throw ValidationError("broker: no worker pool");
  if (!(cfg_.ttl > 0.0) || cfg_.grace_s < 0.0) throw ValidationError("broker: bad ttl or grace");
  if (cfg_.ring_capacity < static_cast<std::size_t>(kFrames)) {
    throw ValidationError("broker: ring buffer must hold at least 4 frames");
  }
}

SessionBroker::~SessionBroker() {
  drain();
  dispatcher_->pool.join();
}

void SessionBroker::attach_client(ClientId id, ClientSink sink) {
  std::lock_guard lock(mu_);
  clients_[id] = std::move(sink);
}

void SessionBroker::detach_client(ClientId id) {
  std::lock_guard lock(mu_);
  clients_.erase(id);
  const double now = recent_.empty() ? 0.0 : recent_.back()->t;
  for (auto& [uuid, s] : sessions_) {
    if (s->subscribers.erase(id) > 0 && s->subscribers.empty()) s->orphaned_since = now;
  }
}

void SessionBroker::send(ClientId id, const std::string& msg) {
  ClientSink sink;
  {
    std::lock_guard lock(mu_);
    auto it = clients_.find(id);
    if (it == clients_.end()) return;
    sink = it->second;
  }
  sink(msg);
}

void SessionBroker::handle_message(ClientId id, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    send(id, error_message("", std::string("malformed message: ") + e.what()));
    return;
  }
  const std::string type = j.is_object() ? j.value("type", "") : "";
  if ((type != "open" && type != "close") || !j.contains("uuid") || !j["uuid"].is_string()) {
    send(id, error_message("", "expected {\"type\": \"open\"|\"close\", \"uuid\": <string>}"));
    return;
  }
  const std::string uuid = j["uuid"].get<std::string>();
  if (type == "open") {
    open_session(id, uuid);
  } else {
    close_session(id, uuid);
  }
}

bool SessionBroker::open_session(ClientId id, const std::string& uuid) {
  std::string reply;
  bool ok = false;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(uuid);
    if (it != sessions_.end()) {
      it->second->subscribers.insert(id);
      it->second->orphaned_since.reset();
      reply = message({{"type", "session_opened"}, {"uuid", uuid},
                       {"state", to_string(it->second->state)}});
      ok = true;
    } else if (!recent_.empty() && recent_.back()->find(uuid) != nullptr) {
      auto s = std::make_shared<Session>(uuid, dispatcher_->pool);
      s->subscribers.insert(id);
      s->ring = recent_;
      s->last_seen = recent_.back()->t;
      sessions_[uuid] = s;
      ++stats_.sessions_opened;
      reply = message({{"type", "session_opened"}, {"uuid", uuid}, {"state", "warming"}});
      ok = true;
    } else {
      reply = error_message(uuid, "not_found");
    }
  }
  send(id, reply);
  return ok;
}

void SessionBroker::close_session(ClientId id, const std::string& uuid) {
  std::vector<std::pair<ClientSink, std::string>> out;
  std::string reply;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(uuid);
    if (it == sessions_.end() || it->second->subscribers.erase(id) == 0) {
      reply = error_message(uuid, "not_subscribed");
    } else if (it->second->subscribers.empty()) {
      reply = closed_message(uuid, "closed_by_client");
      close_locked(uuid, "closed_by_client", out);
    } else {
      reply = closed_message(uuid, "unsubscribed");
    }
  }
  send(id, reply);
  for (auto& [sink, msg] : out) sink(msg);
}

void SessionBroker::close_locked(const std::string& uuid, const std::string& reason,
                                 std::vector<std::pair<ClientSink, std::string>>& out) {
  auto it = sessions_.find(uuid);
  if (it == sessions_.end()) return;
  auto& s = *it->second;
  s.state = SessionState::kClosing;
  s.closed = true;
  const std::string msg = closed_message(uuid, reason);
  for (ClientId c : s.subscribers) {
    if (auto sink = clients_.find(c); sink != clients_.end()) out.emplace_back(sink->second, msg);
  }
  s.ring.clear();
  s.subscribers.clear();
  sessions_.erase(it);
  ++stats_.sessions_closed;
}

void SessionBroker::on_frame(FramePtr f, Clock::time_point ingest) {
  struct Job {
    std::shared_ptr<Session> session;
    std::uint64_t seq;
    std::shared_ptr<ObservationWindow> window;
  };
  std::vector<Job> jobs;
  std::vector<std::pair<ClientSink, std::string>> out;
  {
    std::lock_guard lock(mu_);
    ++stats_.frames;
    recent_.push_back(f);
    while (recent_.size() > cfg_.ring_capacity) recent_.pop_front();

    std::vector<std::pair<std::string, std::string>> to_close;
    std::vector<const twin::Frame*> ptrs;
    for (auto& [uuid, sp] : sessions_) {
      Session& s = *sp;
      s.ring.push_back(f);
      while (s.ring.size() > cfg_.ring_capacity) s.ring.pop_front();
      if (s.subscribers.empty() && s.orphaned_since &&
          f->t - *s.orphaned_since >= cfg_.grace_s) {
        to_close.emplace_back(uuid, "no_subscribers");
        continue;
      }
      if (f->find(uuid) == nullptr) {
        if (f->t - s.last_seen > cfg_.ttl) to_close.emplace_back(uuid, "vehicle_left");
        continue;
      }
      s.last_seen = f->t;
      ptrs.clear();
      for (const auto& r : s.ring) ptrs.push_back(r.get());
      auto w = twin::build_window(std::span<const twin::Frame* const>(ptrs), uuid, f->t);
      if (!w) continue;
      s.state = SessionState::kActive;
      jobs.push_back({sp, s.next_seq++, std::make_shared<ObservationWindow>(std::move(*w))});
    }
    for (const auto& [uuid, reason] : to_close) close_locked(uuid, reason, out);

    if (cfg_.roster_every > 0 && stats_.frames % static_cast<std::uint64_t>(cfg_.roster_every) == 0 &&
        !clients_.empty()) {
      json vehicles = json::array();
      for (const auto& v : f->vehicles) {
        vehicles.push_back({{"uuid", v.key}, {"raw_id", v.raw_id}, {"lane", v.lane},
                            {"x", v.features.x}, {"y", v.features.y}, {"vx", v.features.vx}});
      }
      const std::string roster =
          message({{"type", "roster"}, {"t", f->t}, {"vehicles", std::move(vehicles)}});
      for (const auto& [id, sink] : clients_) out.emplace_back(sink, roster);
    }
  }
  for (auto& [sink, msg] : out) sink(msg);

  for (auto& job : jobs) {
    {
      std::lock_guard lock(flight_mu_);
      ++in_flight_;
    }
    const double t = f->t;
    asio::post(job.session->strand, [this, job, t, ingest] {
      json request = cfg_.method;
      request["window"] = window_to_json(*job.window);
      const DispatchResult r = workers_->dispatch(request.dump());
      deliver(job.session, job.seq, t, r, ingest);
      {
        std::lock_guard lock(flight_mu_);
        --in_flight_;
      }
      flight_cv_.notify_all();
    });
  }
}

void SessionBroker::deliver(const std::shared_ptr<Session>& s, std::uint64_t seq, double t,
                            const DispatchResult& r, Clock::time_point ingest) {
  json msg;
  bool ok = r.ok;
  if (ok) {
    try {
      const json body = json::parse(r.body);
      msg = {{"type", "prediction"},
             {"uuid", s->uuid},
             {"t", t},
             {"seq", seq},
             {"probabilities", body.at("prediction").at("probabilities")},
             {"predicted_class", body.at("prediction").at("predicted_class")},
             {"explained_class", body.at("explained_class")},
             {"top3", body.at("explanation").at("top3")},
             {"explanation", body.at("explanation")}};
    } catch (const json::exception& e) {
      ok = false;
      msg = {{"type", "error"}, {"uuid", s->uuid}, {"t", t}, {"seq", seq},
             {"error", std::string("bad worker response: ") + e.what()}};
    }
  } else {
    msg = {{"type", "error"}, {"uuid", s->uuid}, {"t", t}, {"seq", seq}, {"error", r.error}};
    if (!r.body.empty()) msg["detail"] = r.body;
  }
  std::vector<ClientSink> sinks;
  {
    std::lock_guard lock(mu_);
    if (s->closed) return;
    ok ? ++stats_.predictions : ++stats_.errors;
    for (ClientId c : s->subscribers) {
      if (auto it = clients_.find(c); it != clients_.end()) sinks.push_back(it->second);
    }
  }
  msg["latency_ms"] =
      std::chrono::duration<double, std::milli>(Clock::now() - ingest).count();
  const std::string text = msg.dump();
  for (auto& sink : sinks) sink(text);
}

void SessionBroker::on_gap(std::size_t missed) {
  std::vector<ClientSink> sinks;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, sink] : clients_) sinks.push_back(sink);
  }
  const std::string msg = message({{"type", "gap"}, {"missed", missed}});
  for (auto& sink : sinks) sink(msg);
}

void SessionBroker::run(Subscription& sub, std::stop_token stop) {
  while (!stop.stop_requested()) {
    auto ev = sub.next(std::chrono::milliseconds(100));
    if (!ev) {
      if (sub.closed()) break;
      continue;
    }
    if (ev->gap > 0) {
      spdlog::warn("broker: fell behind the stream, {} frames lost", ev->gap);
      on_gap(ev->gap);
    } else {
      on_frame(ev->frame);
    }
  }
}

void SessionBroker::drain() {
  std::unique_lock lock(flight_mu_);
  flight_cv_.wait(lock, [&] { return in_flight_ == 0; });
}

std::size_t SessionBroker::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::optional<SessionState> SessionBroker::state(const std::string& uuid) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(uuid);
  if (it == sessions_.end()) return std::nullopt;
  return it->second->state;
}

std::size_t SessionBroker::subscriber_count(const std::string& uuid) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(uuid);
  return it == sessions_.end() ? 0 : it->second->subscribers.size();
}

BrokerStats SessionBroker::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace xlane::service
