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

#include <array>
#include <string>

#include "xlane/core.hpp"

namespace xlane {

/// Kinematic and positional state of one vehicle at one instant.
/// Positions are world-fixed metres, x along the road, y to the left.
struct VehicleFeatures {
  double vx = 0.0;
  double vy = 0.0;
  double psi = 0.0;
  double x = 0.0;
  double y = 0.0;
  double n_left = 0.0;
  double n_right = 0.0;

  bool is_valid() const;

  template <typename Derived>
  void write_to(Eigen::MatrixBase<Derived>&& block) const {
    block << vx, vy, psi, x, y, n_left, n_right;
  }

  template <typename Derived>
  static VehicleFeatures read_from(const Eigen::MatrixBase<Derived>& block) {
    return {block(0), block(1), block(2), block(3),
            block(4), block(5), block(6)};
  }
};

/// Four frames at t-1.5 s, t-1.0 s, t-0.5 s and t. Each row is the 49-wide
/// concatenation of the six neighbour slots and the query vehicle.
struct ObservationWindow {
  std::string id;
  WindowMatrixd frames = WindowMatrixd::Zero();
  /// mask[k][slot] is true when the slot holds a real vehicle.
  std::array<std::array<bool, kVehicles>, kFrames> mask{};
  std::array<double, kFrames> timestamps{-1.5, -1.0, -0.5, 0.0};
  /// Optional per-slot vehicle identifiers at the last frame.
  std::array<std::string, kVehicles> slot_ids{};

  VehicleFeatures vehicle(int frame, int slot) const {
    return VehicleFeatures::read_from(
        frames.row(frame).segment<kFeaturesPerVehicle>(
            slot * kFeaturesPerVehicle));
  }

  void set_vehicle(int frame, int slot, const VehicleFeatures& v) {
    v.write_to(frames.row(frame).segment<kFeaturesPerVehicle>(
        slot * kFeaturesPerVehicle));
  }
};

inline constexpr double kDefaultJitter = 0.1;

/// Throws ValidationError when the window breaks a structural invariant.
void validate_window(const ObservationWindow& w,
                     double jitter = kDefaultJitter);

/// Stand-in profile for an absent neighbour.
struct SentinelProfile {
  double far_range = 100.0;  // m, longitudinal cap
  double lane_width = 3.75;  // m
};

/// Features written into an absent neighbour slot: far-range relative
/// position in the slot's region, velocities mirrored from the query vehicle,
/// lane counts copied.
VehicleFeatures sentinel_vehicle(const VehicleFeatures& query, int slot,
                                 const SentinelProfile& profile = {});

/// The "absent traffic" version of a window: every neighbour slot replaced by
/// its sentinel, the query vehicle replaced by steady straight driving
/// (window-mean vx, zero vy and heading) frozen at its first-frame position.
WindowMatrixd sentinel_window(const ObservationWindow& w,
                              const SentinelProfile& profile = {});

}  // namespace xlane
