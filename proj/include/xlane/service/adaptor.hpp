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

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>
#include <vector>

#include "xlane/service/bounded_queue.hpp"
#include "xlane/service/identity_cache.hpp"
#include "xlane/twin/frame.hpp"

namespace xlane::service {

using FramePtr = std::shared_ptr<const twin::Frame>;

/// One item of the enriched stream: a frame, or a gap notice counting frames
/// this subscriber lost to backpressure.
struct StreamEvent {
  FramePtr frame;
  std::size_t gap = 0;
};

/// A subscriber's cursor into the broadcast: its own bounded queue.
class Subscription {
 public:
  explicit Subscription(std::size_t capacity) : queue_(capacity) {}

  template <typename Rep, typename Period>
  std::optional<StreamEvent> next(std::chrono::duration<Rep, Period> timeout) {
    if (const std::size_t lost = queue_.take_dropped(); lost > 0) return StreamEvent{nullptr, lost};
    auto f = queue_.pop(timeout);
    if (!f) return std::nullopt;
    return StreamEvent{std::move(*f), 0};
  }

  bool closed() const { return queue_.closed(); }

 private:
  friend class LiveAdaptor;
  BoundedQueue<FramePtr> queue_;
};

struct AdaptorConfig {
  double ttl = 5.0;
  int lane_count = 3;
  double lane_width = 3.75;
  std::optional<std::filesystem::path> snapshot_path;
  int snapshot_every = 20;  // frames
  std::size_t queue_capacity = 64;
  std::optional<std::uint64_t> seed;
};

/// Validates raw frames, stamps every vehicle with a stable uuid, recomputes
/// lane index and lane counts from geometry, and broadcasts the result.
/// Malformed or out-of-order frames are dropped and counted.
class LiveAdaptor {
 public:
  explicit LiveAdaptor(AdaptorConfig cfg);
  ~LiveAdaptor();

  std::shared_ptr<Subscription> subscribe(std::size_t capacity = 0);

  /// Parses one JSON record and ingests it; nullopt when it was dropped.
  std::optional<twin::Frame> ingest_raw(std::string_view payload);
  std::optional<twin::Frame> ingest(const twin::Frame& raw);

  twin::Frame enrich(const twin::Frame& raw);

  std::size_t dropped() const { return dropped_; }
  std::size_t published() const { return published_; }
  void snapshot_now();
  /// Closes every subscription; later frames are not broadcast.
  void close();

  const IdentityCache& identities() const { return cache_; }

 private:
  void publish(FramePtr f);

  AdaptorConfig cfg_;
  IdentityCache cache_;
  std::optional<double> last_t_;
  std::atomic<std::size_t> dropped_{0};
  std::atomic<std::size_t> published_{0};
  std::mutex subs_mu_;
  std::vector<std::weak_ptr<Subscription>> subs_;
  bool closed_ = false;
};

}  // namespace xlane::service
