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
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "xlane/twin/frame.hpp"

namespace xlane::twin {

/// The query vehicle and its six regional neighbours for one frame.
struct Neighborhood {
  std::array<std::optional<TrackedVehicle>, kVehicles> slots{};
  std::array<bool, kVehicles> mask{};
};

/// Nearest vehicle by |dx| in each region: front (dx >= 0) and rear (dx < 0)
/// in the left lane (lane + 1), the own lane and the right lane (lane - 1).
/// Ties go to the smaller key, then the smaller raw id. Throws LookupError when
/// `query_key` is not in the frame.
Neighborhood extract_neighbors(const Frame& frame, std::string_view query_key);

/// Window row for one frame: real neighbours copied, absent ones
/// sentinel-filled.
void write_neighborhood(const Neighborhood& n, ObservationWindow& w, int row,
                        const SentinelProfile& profile = {});

/// Identifier of a tracked vehicle: its key, or "raw-<id>" for unkeyed feeds.
std::string vehicle_label(const TrackedVehicle& v);

/// Builds the window ending at `t` from frames sorted by time. Each of the
/// four sample times t - {1.5, 1.0, 0.5, 0} s takes the latest frame at or
/// before it; that frame must lie within `jitter` of the sample time and
/// contain the query. Returns nullopt when the history is not yet long enough.
std::optional<ObservationWindow> build_window(std::span<const Frame> history,
                                              std::string_view query_key,
                                              double t,
                                              double jitter = kDefaultJitter,
                                              const SentinelProfile& profile = {});
/// Same, over frames held by pointer (sorted by time, non-null).
std::optional<ObservationWindow> build_window(std::span<const Frame* const> history,
                                              std::string_view query_key,
                                              double t,
                                              double jitter = kDefaultJitter,
                                              const SentinelProfile& profile = {});

/// Class from the first lane change of the query in (t, t + 2.5 s]: left when
/// the lane index grows. Returns nullopt when the frames do not cover the
/// horizon or the query leaves the road before it ends.
std::optional<LaneClass> label_window(std::span<const Frame> frames,
                                      std::string_view query_key, double t);

}  // namespace xlane::twin
