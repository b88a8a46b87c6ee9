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

#include "xlane/service/worker_pool.hpp"

#include <spdlog/spdlog.h>

#include "xlane/core.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen
// parameter names.
#include <httplib.h>

namespace xlane::service {

struct WorkerPool::Slot {
  std::mutex mu;
  std::vector<std::unique_ptr<httplib::Client>> idle;
};

WorkerPool::WorkerPool(std::vector<Endpoint> endpoints, Routing routing, std::uint64_t seed,
                       std::chrono::milliseconds timeout)
    : endpoints_(std::move(endpoints)), routing_(routing), timeout_(timeout), rng_(seed) {
  if (endpoints_.empty()) throw ValidationError("worker pool: no workers");
  for (std::size_t i = 0; i < endpoints_.size(); ++i) slots_.push_back(std::make_unique<Slot>());
}

WorkerPool::~WorkerPool() = default;

std::size_t WorkerPool::retries() const {
  std::lock_guard lock(mu_);
  return retries_;
}

int WorkerPool::choose() {
  std::lock_guard lock(mu_);
  if (routing_ == Routing::kRandom) {
    std::uniform_int_distribution<std::size_t> pick(0, endpoints_.size() - 1);
    return static_cast<int>(pick(rng_));
  }
  return static_cast<int>(next_++ % endpoints_.size());
}

DispatchResult WorkerPool::attempt(int worker, const std::string& body) {
  Slot& slot = *slots_[static_cast<std::size_t>(worker)];
  std::unique_ptr<httplib::Client> client;
  {
    std::lock_guard lock(slot.mu);
    if (!slot.idle.empty()) {
      client = std::move(slot.idle.back());
      slot.idle.pop_back();
    }
  }
  if (!client) {
    const Endpoint& e = endpoints_[static_cast<std::size_t>(worker)];
    client = std::make_unique<httplib::Client>(e.host, e.port);
    client->set_connection_timeout(timeout_);
    client->set_read_timeout(timeout_);
    client->set_write_timeout(timeout_);
    client->set_keep_alive(true);
    client->set_tcp_nodelay(true);
  }
  DispatchResult r;
  r.worker = worker;
  auto res = client->Post("/predict", body, "application/json");
  if (!res) {
    r.error = "worker " + std::to_string(worker) + ": " + httplib::to_string(res.error());
    return r;  // the client is discarded with its connection
  }
  r.status = res->status;
  r.body = std::move(res->body);
  r.ok = r.status == 200;
  if (!r.ok) r.error = "worker " + std::to_string(worker) + " answered " + std::to_string(r.status);
  std::lock_guard lock(slot.mu);
  slot.idle.push_back(std::move(client));
  return r;
}

DispatchResult WorkerPool::dispatch(const std::string& body) {
  const int first = choose();
  DispatchResult r = attempt(first, body);
  r.attempts = 1;
  const bool retryable = !r.ok && (r.status == 0 || r.status >= 500);
  if (!retryable || endpoints_.size() < 2) return r;
  {
    std::lock_guard lock(mu_);
    ++retries_;
  }
  spdlog::warn("dispatch: {}; retrying on another worker", r.error);
  const int second = static_cast<int>((static_cast<std::size_t>(first) + 1) % endpoints_.size());
  DispatchResult again = attempt(second, body);
  again.attempts = 2;
  if (!again.ok && again.error.empty()) again.error = r.error;
  return again;
}

}  // namespace xlane::service
