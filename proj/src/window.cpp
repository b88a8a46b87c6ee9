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

#include "xlane/window.hpp"

#include <cmath>

namespace xlane {

std::string_view to_string(LaneClass c) {
  switch (c) {
    case LaneClass::kLeft:
      return "left";
    case LaneClass::kKeep:
      return "keep";
    case LaneClass::kRight:
      return "right";
  }
  return "?";
}

LaneClass lane_class_from_string(std::string_view name) {
  if (name == "left") return LaneClass::kLeft;
  if (name == "keep") return LaneClass::kKeep;
  if (name == "right") return LaneClass::kRight;
  throw ValidationError("unknown class '" + std::string(name) + "'");
}

std::string_view slot_name(int slot) {
  static constexpr std::array<std::string_view, kVehicles> kNames = {
      "left_front", "front", "right_front", "left_rear",
      "rear",       "right_rear", "query"};
  if (slot < 0 || slot >= kVehicles) return "?";
  return kNames[static_cast<std::size_t>(slot)];
}

bool VehicleFeatures::is_valid() const {
  for (double v : {vx, vy, psi, x, y, n_left, n_right}) {
    if (!std::isfinite(v)) return false;
  }
  return n_left >= 0.0 && n_right >= 0.0;
}

void validate_window(const ObservationWindow& w, double jitter) {
  if (!w.frames.allFinite()) {
    throw ValidationError("window '" + w.id + "' has non-finite features");
  }
  for (int k = 0; k < kFrames; ++k) {
    if (!w.mask[k][kQuery]) {
      throw ValidationError("window '" + w.id +
                            "': query slot masked at frame " +
                            std::to_string(k));
    }
    for (int s = 0; s < kVehicles; ++s) {
      const VehicleFeatures v = w.vehicle(k, s);
      if (v.n_left < 0.0 || v.n_right < 0.0) {
        throw ValidationError("window '" + w.id +
                              "': negative lane count in slot " +
                              std::string(slot_name(s)));
      }
    }
  }
  for (int k = 1; k < kFrames; ++k) {
    const double dt = w.timestamps[k] - w.timestamps[k - 1];
    if (!std::isfinite(dt) || std::abs(dt - kFramePeriod) > jitter) {
      throw ValidationError("window '" + w.id + "': frame spacing " +
                            std::to_string(dt) + " s outside 0.5 s +/- " +
                            std::to_string(jitter));
    }
  }
}

VehicleFeatures sentinel_vehicle(const VehicleFeatures& query, int slot,
                                 const SentinelProfile& profile) {
  VehicleFeatures s = query;
  switch (slot) {
    case kLeftFront:
    case kFront:
    case kRightFront:
      s.x = query.x + profile.far_range;
      break;
    case kLeftRear:
    case kRear:
    case kRightRear:
      s.x = query.x - profile.far_range;
      break;
    default:
      throw ValidationError("sentinel_vehicle: slot " + std::to_string(slot) +
                            " is not a neighbour slot");
  }
  if (slot == kLeftFront || slot == kLeftRear) s.y = query.y + profile.lane_width;
  if (slot == kRightFront || slot == kRightRear) {
    s.y = query.y - profile.lane_width;
  }
  return s;
}

WindowMatrixd sentinel_window(const ObservationWindow& w,
                              const SentinelProfile& profile) {
  WindowMatrixd out;
  double mean_vx = 0.0;
  for (int k = 0; k < kFrames; ++k) mean_vx += w.vehicle(k, kQuery).vx;
  mean_vx /= kFrames;
  const VehicleFeatures first = w.vehicle(0, kQuery);
  for (int k = 0; k < kFrames; ++k) {
    const VehicleFeatures q = w.vehicle(k, kQuery);
    for (int s = 0; s < kQuery; ++s) {
      sentinel_vehicle(q, s, profile)
          .write_to(out.row(k).segment<kFeaturesPerVehicle>(
              s * kFeaturesPerVehicle));
    }
    VehicleFeatures steady = first;
    steady.vx = mean_vx;
    steady.vy = 0.0;
    steady.psi = 0.0;
    steady.write_to(out.row(k).segment<kFeaturesPerVehicle>(
        kQuery * kFeaturesPerVehicle));
  }
  return out;
}

}  // namespace xlane
