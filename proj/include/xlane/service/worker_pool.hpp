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

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

namespace httplib {
class Client;
}

namespace xlane::service {

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;
};

enum class Routing { kRoundRobin, kRandom };

struct DispatchResult {
  bool ok = false;
  int status = 0;
  std::string body;
  int worker = -1;  // index of the worker that answered
  int attempts = 0;
  std::string error;
};

/// Client side of the worker fleet. Any worker may serve any request; a
/// transport failure, timeout or 5xx is retried once on a different worker.
/// 4xx answers are final. Thread-safe.
class WorkerPool {
 public:
  WorkerPool(std::vector<Endpoint> endpoints, Routing routing = Routing::kRoundRobin,
             std::uint64_t seed = 1,
             std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));
  ~WorkerPool();

  DispatchResult dispatch(const std::string& body);
  std::size_t size() const { return endpoints_.size(); }
  std::size_t retries() const;

 private:
  struct Slot;
  int choose();
  DispatchResult attempt(int worker, const std::string& body);

  std::vector<Endpoint> endpoints_;
  std::vector<std::unique_ptr<Slot>> slots_;
  Routing routing_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::size_t next_ = 0;
  std::size_t retries_ = 0;
};

}  // namespace xlane::service
