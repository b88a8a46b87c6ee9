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

// Synthetic straight multi-lane highway. Lane 0 is the rightmost lane; y grows
// to the left, x along the direction of travel. Vehicles follow an IDM-style
// car-following law and perform scripted or stochastic lane changes with a
// trapezoidal lateral-speed profile (1.5 s ramp, hold, 1.5 s ramp) so the
// heading rises over 1.5 s, holds, and relaxes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "xlane/twin/frame.hpp"

namespace xlane::twin {

struct SimConfig {
  int lane_count = 3;
  double lane_width = 3.75;        // m
  double segment_length = 600.0;   // m
  double spawn_rate = 0.8;         // vehicles / s over all lanes
  double speed_min = 24.0;         // m/s desired speed range
  double speed_max = 36.0;
  double lane_change_rate = 0.04;  // base propensity, 1/s
  double overtake_rate = 0.25;     // extra left propensity behind a slow leader, 1/s
  double maneuver_ramp = 1.5;      // s
  double maneuver_hold = 3.0;      // s
  double frame_rate = 2.0;         // Hz
  double dt = 0.1;                 // s, integration step
  std::uint64_t seed = 1;

  void validate() const;
  double maneuver_duration() const { return 2.0 * maneuver_ramp + maneuver_hold; }
};

/// Reads a flat `key = value` config (TOML subset: comments with '#', numbers)
/// or a JSON object with the same keys.
SimConfig load_sim_config(const std::filesystem::path& path);

struct Maneuver {
  double start_t = 0.0;
  double y_from = 0.0;
  int direction = 0;  // +1 left, -1 right
};

struct SimVehicle {
  std::uint64_t uid = 0;  // never reused
  int raw_id = 0;         // cycles through [1, 10000]
  double x = 0.0, y = 0.0;
  double vx = 0.0, vy = 0.0, psi = 0.0;
  double desired_speed = 0.0;
  std::optional<Maneuver> maneuver;
};

struct SimState {
  SimConfig cfg;
  double t = 0.0;
  std::vector<SimVehicle> vehicles;
  std::uint64_t next_uid = 1;
  int next_raw_id = 1;
  std::mt19937_64 rng;
  bool spawning = true;
  bool random_lane_changes = true;

  explicit SimState(const SimConfig& c);
  int lane_of(const SimVehicle& v) const;
  double lane_center(int lane) const;
  SimVehicle* find(std::uint64_t uid);
};

/// Advances the simulation by dt seconds (in cfg.dt sub-steps).
void step_sim(SimState& s, double dt);

/// Adds a vehicle at (x, lane) cruising at `speed`; returns its uid.
std::uint64_t add_vehicle(SimState& s, double x, int lane, double speed);

/// Starts a lane change for `uid` now (+1 left, -1 right). Returns false if
/// the target lane does not exist or a maneuver is already running.
bool force_lane_change(SimState& s, std::uint64_t uid, int direction);

/// Snapshot of the road. With `with_keys` every vehicle carries its
/// simulator uid as key ("sim-<uid>"); the raw twin feed carries no keys.
Frame snapshot(const SimState& s, bool with_keys = false);

/// Runs `duration` seconds and returns one frame per frame period.
std::vector<Frame> simulate(SimState& s, double duration, bool with_keys = false);

}  // namespace xlane::twin
