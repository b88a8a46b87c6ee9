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

#include "xlane/service/adaptor.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

namespace xlane::service {

LiveAdaptor::LiveAdaptor(AdaptorConfig cfg) : cfg_(std::move(cfg)), cache_(cfg_.ttl, cfg_.seed) {
  if (cfg_.lane_count < 1 || !(cfg_.lane_width > 0.0)) {
    throw ValidationError("adaptor: bad lane geometry");
  }
  if (cfg_.snapshot_path && std::filesystem::exists(*cfg_.snapshot_path)) {
    cache_.load(*cfg_.snapshot_path);
    spdlog::info("adaptor: restored {} identities from {}", cache_.entries().size(),
                 cfg_.snapshot_path->string());
  }
}

LiveAdaptor::~LiveAdaptor() {
  try {
    if (cfg_.snapshot_path) snapshot_now();
  } catch (const std::exception& e) {
    spdlog::warn("adaptor: final snapshot failed: {}", e.what());
  }
  close();
}

std::shared_ptr<Subscription> LiveAdaptor::subscribe(std::size_t capacity) {
  auto s = std::make_shared<Subscription>(capacity == 0 ? cfg_.queue_capacity : capacity);
  std::lock_guard lock(subs_mu_);
  if (closed_) s->queue_.close();
  subs_.push_back(s);
  return s;
}

std::optional<twin::Frame> LiveAdaptor::ingest_raw(std::string_view payload) {
  twin::Frame f;
  try {
    f = twin::frame_from_json(nlohmann::json::parse(payload));
  } catch (const std::exception& e) {
    ++dropped_;
    spdlog::debug("adaptor: dropped malformed record: {}", e.what());
    return std::nullopt;
  }
  return ingest(f);
}

twin::Frame LiveAdaptor::enrich(const twin::Frame& raw) {
  twin::Frame out;
  out.t = raw.t;
  out.vehicles.reserve(raw.vehicles.size());
  for (const auto& v : raw.vehicles) {
    twin::TrackedVehicle e = v;
    e.key = cache_.assign(v.raw_id, raw.t);
    e.lane = std::clamp(static_cast<int>(std::floor(v.features.y / cfg_.lane_width)), 0,
                        cfg_.lane_count - 1);
    e.features.n_left = cfg_.lane_count - 1 - e.lane;
    e.features.n_right = e.lane;
    out.vehicles.push_back(std::move(e));
  }
  return out;
}

std::optional<twin::Frame> LiveAdaptor::ingest(const twin::Frame& raw) {
  if (last_t_ && !(raw.t > *last_t_)) {
    ++dropped_;
    spdlog::debug("adaptor: dropped out-of-order frame t={}", raw.t);
    return std::nullopt;
  }
  last_t_ = raw.t;
  auto f = std::make_shared<const twin::Frame>(enrich(raw));
  cache_.expire(raw.t);
  publish(f);
  const std::size_t n = ++published_;
  if (cfg_.snapshot_path && cfg_.snapshot_every > 0 &&
      n % static_cast<std::size_t>(cfg_.snapshot_every) == 0) {
    snapshot_now();
  }
  return *f;
}

void LiveAdaptor::publish(FramePtr f) {
  std::lock_guard lock(subs_mu_);
  if (closed_) return;
  std::erase_if(subs_, [&](const std::weak_ptr<Subscription>& w) {
    auto s = w.lock();
    if (!s) return true;
    s->queue_.push(f);
    return false;
  });
}

void LiveAdaptor::snapshot_now() {
  if (cfg_.snapshot_path) cache_.save(*cfg_.snapshot_path);
}

void LiveAdaptor::close() {
  std::lock_guard lock(subs_mu_);
  closed_ = true;
  for (auto& w : subs_) {
    if (auto s = w.lock()) s->queue_.close();
  }
  subs_.clear();
}

}  // namespace xlane::service
