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

#include "xlane/twin/windows.hpp"

#include <cmath>
#include <cstdio>
#include <tuple>
#include <vector>

namespace xlane::twin {

namespace {

constexpr double kTimeSlack = 1e-6;

int region_slot(int dlane, bool front) {
  if (dlane == 1) return front ? kLeftFront : kLeftRear;
  if (dlane == 0) return front ? kFront : kRear;
  if (dlane == -1) return front ? kRightFront : kRightRear;
  return -1;
}

bool closer(const TrackedVehicle& a, const TrackedVehicle& b, double qx) {
  const double da = std::abs(a.features.x - qx);
  const double db = std::abs(b.features.x - qx);
  return std::tie(da, a.key, a.raw_id) < std::tie(db, b.key, b.raw_id);
}

const Frame* frame_at_or_before(std::span<const Frame> frames, double when) {
  const Frame* best = nullptr;
  for (const auto& f : frames) {
    if (f.t <= when + kTimeSlack) best = &f;
    else break;
  }
  return best;
}

const Frame* frame_at_or_before(std::span<const Frame* const> frames, double when) {
  const Frame* best = nullptr;
  for (const Frame* f : frames) {
    if (f->t <= when + kTimeSlack) best = f;
    else break;
  }
  return best;
}

const TrackedVehicle* find_query(const Frame& f, std::string_view key) {
  const TrackedVehicle* q = f.find(key);
  if (q == nullptr && key.starts_with("raw-")) {
    for (const auto& v : f.vehicles) {
      if (vehicle_label(v) == key) return &v;
    }
  }
  return q;
}

}  // namespace

std::string vehicle_label(const TrackedVehicle& v) {
  return v.key.empty() ? "raw-" + std::to_string(v.raw_id) : v.key;
}

Neighborhood extract_neighbors(const Frame& frame, std::string_view query_key) {
  const TrackedVehicle* q = find_query(frame, query_key);
  if (q == nullptr) {
    throw LookupError("vehicle '" + std::string(query_key) + "' is not in the frame at t=" +
                      std::to_string(frame.t));
  }
  Neighborhood n;
  for (const auto& v : frame.vehicles) {
    if (&v == q) continue;
    const double dx = v.features.x - q->features.x;
    const int slot = region_slot(v.lane - q->lane, dx >= 0.0);
    if (slot < 0) continue;
    auto& cur = n.slots[static_cast<std::size_t>(slot)];
    if (!cur || closer(v, *cur, q->features.x)) cur = v;
  }
  n.slots[kQuery] = *q;
  for (int s = 0; s < kVehicles; ++s) n.mask[static_cast<std::size_t>(s)] = n.slots[static_cast<std::size_t>(s)].has_value();
  return n;
}

void write_neighborhood(const Neighborhood& n, ObservationWindow& w, int row,
                        const SentinelProfile& profile) {
  const VehicleFeatures& q = n.slots[kQuery]->features;
  for (int s = 0; s < kVehicles; ++s) {
    const auto& v = n.slots[static_cast<std::size_t>(s)];
    w.set_vehicle(row, s, v ? v->features : sentinel_vehicle(q, s, profile));
    w.mask[static_cast<std::size_t>(row)][static_cast<std::size_t>(s)] = v.has_value();
  }
}

std::optional<ObservationWindow> build_window(std::span<const Frame> history,
                                              std::string_view query_key, double t,
                                              double jitter,
                                              const SentinelProfile& profile) {
  std::vector<const Frame*> ptrs;
  ptrs.reserve(history.size());
  for (const auto& f : history) ptrs.push_back(&f);
  return build_window(std::span<const Frame* const>(ptrs), query_key, t, jitter, profile);
}

std::optional<ObservationWindow> build_window(std::span<const Frame* const> history,
                                              std::string_view query_key, double t,
                                              double jitter,
                                              const SentinelProfile& profile) {
  ObservationWindow w;
  char id[64];
  std::snprintf(id, sizeof id, "@%.3f", t);
  w.id = std::string(query_key) + id;
  for (int k = 0; k < kFrames; ++k) {
    const double when = t - kWindowSpan + k * kFramePeriod;
    const Frame* f = frame_at_or_before(history, when);
    if (f == nullptr || when - f->t > jitter) return std::nullopt;
    if (find_query(*f, query_key) == nullptr) return std::nullopt;
    const Neighborhood n = extract_neighbors(*f, query_key);
    write_neighborhood(n, w, k, profile);
    w.timestamps[static_cast<std::size_t>(k)] = f->t - t;
    if (k == kFrames - 1) {
      for (int s = 0; s < kVehicles; ++s) {
        const auto& v = n.slots[static_cast<std::size_t>(s)];
        w.slot_ids[static_cast<std::size_t>(s)] = v ? vehicle_label(*v) : std::string();
      }
    }
  }
  return w;
}

std::optional<LaneClass> label_window(std::span<const Frame> frames,
                                      std::string_view query_key, double t) {
  const Frame* now = frame_at_or_before(frames, t);
  if (now == nullptr || std::abs(now->t - t) > kTimeSlack) return std::nullopt;
  const TrackedVehicle* q = find_query(*now, query_key);
  if (q == nullptr) return std::nullopt;
  const int lane0 = q->lane;
  const double horizon = t + kPredictionHorizon;
  bool covered = false;
  for (const auto& f : frames) {
    if (f.t <= t + kTimeSlack) continue;
    if (f.t > horizon + kTimeSlack) {
      covered = true;
      break;
    }
    const TrackedVehicle* v = find_query(f, query_key);
    if (v == nullptr) return std::nullopt;
    if (v->lane != lane0) return v->lane > lane0 ? LaneClass::kLeft : LaneClass::kRight;
    if (f.t >= horizon - kTimeSlack) covered = true;
  }
  if (!covered) return std::nullopt;
  return LaneClass::kKeep;
}

}  // namespace xlane::twin
