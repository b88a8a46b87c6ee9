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

#include "xlane/twin/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace xlane::twin {

namespace {

// Car-following constants.
constexpr double kMaxAccel = 1.5;     // m/s^2
constexpr double kComfortDecel = 2.0; // m/s^2
constexpr double kMaxDecel = 8.0;     // m/s^2
constexpr double kStandstillGap = 2.0;
constexpr double kTimeHeadway = 1.2;
constexpr double kVehicleLength = 4.5;
constexpr double kSpawnClearance = 40.0;
constexpr double kLaneChangeClearance = 30.0;
constexpr double kSlowLeaderRange = 80.0;

// Integral of the unit trapezoid (ramp, hold, ramp) from 0 to tau.
double profile_integral(double tau, double ramp, double hold) {
  const double total = ramp + hold;
  const double duration = 2.0 * ramp + hold;
  if (tau <= 0.0) return 0.0;
  if (tau < ramp) return tau * tau / (2.0 * ramp);
  if (tau < ramp + hold) return ramp / 2.0 + (tau - ramp);
  if (tau < duration) return total - (duration - tau) * (duration - tau) / (2.0 * ramp);
  return total;
}

double profile_rate(double tau, double ramp, double hold) {
  const double duration = 2.0 * ramp + hold;
  if (tau <= 0.0 || tau >= duration) return 0.0;
  if (tau < ramp) return tau / ramp;
  if (tau < ramp + hold) return 1.0;
  return (duration - tau) / ramp;
}

bool occupies(const SimState& s, const SimVehicle& v, int lane) {
  if (s.lane_of(v) == lane) return true;
  if (v.maneuver) {
    const int from = static_cast<int>(std::floor(v.maneuver->y_from / s.cfg.lane_width));
    return from + v.maneuver->direction == lane;
  }
  return false;
}

// Nearest vehicle ahead sharing any lane with v (index into s.vehicles).
std::optional<std::size_t> leader_of(const SimState& s, std::size_t idx) {
  const SimVehicle& v = s.vehicles[idx];
  std::optional<std::size_t> best;
  double best_dx = 0.0;
  std::vector<int> lanes = {s.lane_of(v)};
  if (v.maneuver) {
    const int from = static_cast<int>(std::floor(v.maneuver->y_from / s.cfg.lane_width));
    lanes.push_back(from + v.maneuver->direction);
  }
  for (std::size_t j = 0; j < s.vehicles.size(); ++j) {
    if (j == idx) continue;
    const SimVehicle& o = s.vehicles[j];
    const double dx = o.x - v.x;
    if (dx < 0.0 || (dx == 0.0 && o.uid < v.uid)) continue;
    bool shares = false;
    for (int lane : lanes) shares = shares || occupies(s, o, lane);
    if (!shares) continue;
    if (!best || dx < best_dx) {
      best = j;
      best_dx = dx;
    }
  }
  return best;
}

bool lane_clear(const SimState& s, const SimVehicle& v, int lane, double clearance) {
  for (const auto& o : s.vehicles) {
    if (o.uid == v.uid) continue;
    if (occupies(s, o, lane) && std::abs(o.x - v.x) < clearance) return false;
  }
  return true;
}

int allocate_raw_id(SimState& s) {
  std::set<int> used;
  for (const auto& v : s.vehicles) used.insert(v.raw_id);
  for (int tries = 0; tries < kMaxRawId; ++tries) {
    const int id = s.next_raw_id;
    s.next_raw_id = s.next_raw_id % kMaxRawId + 1;
    if (!used.count(id)) return id;
  }
  throw Error("simulator: all 10000 raw ids in use");
}

void start_maneuver(SimState& s, SimVehicle& v, int direction) {
  v.maneuver = Maneuver{s.t, s.lane_center(s.lane_of(v)), direction};
}

void sub_step(SimState& s, double dt) {
  const SimConfig& c = s.cfg;
  s.t += dt;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  if (s.spawning && unit(s.rng) < c.spawn_rate * dt) {
    std::uniform_int_distribution<int> lane_pick(0, c.lane_count - 1);
    const int lane = lane_pick(s.rng);
    const double speed = c.speed_min + (c.speed_max - c.speed_min) * unit(s.rng);
    bool clear = true;
    for (const auto& o : s.vehicles) {
      if (occupies(s, o, lane) && o.x < kSpawnClearance) clear = false;
    }
    if (clear) add_vehicle(s, 0.0, lane, speed);
  }

  // Lane-change decisions.
  if (s.random_lane_changes) {
    for (std::size_t i = 0; i < s.vehicles.size(); ++i) {
      SimVehicle& v = s.vehicles[i];
      if (v.maneuver || v.x < 30.0 || v.x > c.segment_length - 150.0) continue;
      const int lane = s.lane_of(v);
      const auto leader = leader_of(s, i);
      const bool slow_leader = leader && s.vehicles[*leader].x - v.x < kSlowLeaderRange &&
                               s.vehicles[*leader].vx < v.desired_speed - 2.0;
      const double left_rate =
          lane < c.lane_count - 1 ? c.lane_change_rate + (slow_leader ? c.overtake_rate : 0.0)
                                  : 0.0;
      const double right_rate = lane > 0 && !slow_leader ? c.lane_change_rate : 0.0;
      const double u = unit(s.rng);
      int direction = 0;
      if (u < left_rate * dt) {
        direction = 1;
      } else if (u < (left_rate + right_rate) * dt) {
        direction = -1;
      }
      if (direction != 0 && lane_clear(s, v, lane + direction, kLaneChangeClearance)) {
        start_maneuver(s, v, direction);
      }
    }
  }

  // Longitudinal: accelerations from the current state, then a synchronous
  // update.
  const std::size_t n = s.vehicles.size();
  std::vector<std::optional<std::size_t>> leaders(n);
  std::vector<double> accel(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const SimVehicle& v = s.vehicles[i];
    leaders[i] = leader_of(s, i);
    double a = kMaxAccel * (1.0 - std::pow(v.vx / v.desired_speed, 4));
    if (leaders[i]) {
      const SimVehicle& l = s.vehicles[*leaders[i]];
      const double gap = std::max(0.1, l.x - v.x - kVehicleLength);
      const double desired_gap =
          kStandstillGap + v.vx * kTimeHeadway +
          v.vx * (v.vx - l.vx) / (2.0 * std::sqrt(kMaxAccel * kComfortDecel));
      a -= kMaxAccel * std::pow(std::max(0.0, desired_gap) / gap, 2);
    }
    accel[i] = std::clamp(a, -kMaxDecel, kMaxAccel);
  }
  for (std::size_t i = 0; i < n; ++i) {
    SimVehicle& v = s.vehicles[i];
    v.vx = std::max(0.0, v.vx + accel[i] * dt);
    v.x += v.vx * dt;
  }
  // No overlaps: resolve front to back.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.vehicles[a].x != s.vehicles[b].x ? s.vehicles[a].x > s.vehicles[b].x
                                              : s.vehicles[a].uid < s.vehicles[b].uid;
  });
  for (std::size_t i : order) {
    if (!leaders[i]) continue;
    SimVehicle& v = s.vehicles[i];
    const SimVehicle& l = s.vehicles[*leaders[i]];
    const double limit = l.x - kVehicleLength - 0.5;
    if (v.x > limit) {
      v.x = limit;
      v.vx = std::min(v.vx, l.vx);
    }
  }

  // Lateral motion.
  const double ramp = c.maneuver_ramp;
  const double hold = c.maneuver_hold;
  const double peak = c.lane_width / (ramp + hold);
  for (auto& v : s.vehicles) {
    if (!v.maneuver) {
      v.vy = 0.0;
      v.psi = 0.0;
      continue;
    }
    const double tau = s.t - v.maneuver->start_t;
    const double dir = v.maneuver->direction;
    if (tau >= c.maneuver_duration()) {
      v.y = v.maneuver->y_from + dir * c.lane_width;
      v.vy = 0.0;
      v.psi = 0.0;
      v.maneuver.reset();
      continue;
    }
    v.y = v.maneuver->y_from + dir * peak * profile_integral(tau, ramp, hold);
    v.vy = dir * peak * profile_rate(tau, ramp, hold);
    v.psi = std::atan2(v.vy, std::max(v.vx, 0.1));
  }

  std::erase_if(s.vehicles, [&](const SimVehicle& v) { return v.x > c.segment_length; });
}

}  // namespace

void SimConfig::validate() const {
  if (lane_count < 2) throw ValidationError("sim config: lane_count must be >= 2");
  if (lane_width <= 0.0 || segment_length <= 0.0) {
    throw ValidationError("sim config: non-positive geometry");
  }
  if (speed_min <= 0.0 || speed_max < speed_min) {
    throw ValidationError("sim config: bad speed range");
  }
  if (std::abs(frame_rate * kFramePeriod - 1.0) > 1e-9) {
    throw ValidationError("sim config: frame_rate must match the 0.5 s model spacing (2 Hz)");
  }
  if (dt <= 0.0 || dt > 1.0 / frame_rate) throw ValidationError("sim config: bad dt");
  const double sub = (1.0 / frame_rate) / dt;
  if (std::abs(sub - std::round(sub)) > 1e-9) {
    throw ValidationError("sim config: dt must divide the frame period");
  }
  if (maneuver_ramp <= 0.0 || maneuver_hold < 0.0) {
    throw ValidationError("sim config: bad maneuver timing");
  }
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read sim config " + path.string());
  std::map<std::string, double> values;
  if (path.extension() == ".json") {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [k, v] : j.items()) values[k] = v.get<double>();
  } else {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      if (trim(line).empty() || trim(line).front() == '[') continue;
      if (eq == std::string::npos) {
        throw ParseError("sim config line " + std::to_string(line_no) + ": expected key = value", 0);
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      try {
        std::size_t used = 0;
        values[key] = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ParseError("sim config line " + std::to_string(line_no) + ": '" + value +
                             "' is not a number",
                         0);
      }
    }
  }
  SimConfig c;
  for (const auto& [key, v] : values) {
    if (key == "lane_count") c.lane_count = static_cast<int>(v);
    else if (key == "lane_width") c.lane_width = v;
    else if (key == "segment_length") c.segment_length = v;
    else if (key == "spawn_rate") c.spawn_rate = v;
    else if (key == "speed_min") c.speed_min = v;
    else if (key == "speed_max") c.speed_max = v;
    else if (key == "lane_change_rate") c.lane_change_rate = v;
    else if (key == "overtake_rate") c.overtake_rate = v;
    else if (key == "maneuver_ramp") c.maneuver_ramp = v;
    else if (key == "maneuver_hold") c.maneuver_hold = v;
    else if (key == "frame_rate") c.frame_rate = v;
    else if (key == "dt") c.dt = v;
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(v);
    else throw ValidationError("sim config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

SimState::SimState(const SimConfig& c) : cfg(c), rng(c.seed) { cfg.validate(); }

int SimState::lane_of(const SimVehicle& v) const {
  const int lane = static_cast<int>(std::floor(v.y / cfg.lane_width));
  return std::clamp(lane, 0, cfg.lane_count - 1);
}

double SimState::lane_center(int lane) const { return (lane + 0.5) * cfg.lane_width; }

SimVehicle* SimState::find(std::uint64_t uid) {
  for (auto& v : vehicles) {
    if (v.uid == uid) return &v;
  }
  return nullptr;
}

void step_sim(SimState& s, double dt) {
  if (dt <= 0.0) throw ValidationError("step_sim: dt must be positive");
  const int n = std::max(1, static_cast<int>(std::lround(dt / s.cfg.dt)));
  const double end = s.t + dt;
  for (int k = 0; k < n; ++k) sub_step(s, dt / n);
  s.t = end;  // keeps frame times free of sub-step rounding
}

std::uint64_t add_vehicle(SimState& s, double x, int lane, double speed) {
  SimVehicle v;
  v.uid = s.next_uid++;
  v.raw_id = allocate_raw_id(s);
  v.x = x;
  v.y = s.lane_center(std::clamp(lane, 0, s.cfg.lane_count - 1));
  v.vx = speed;
  v.desired_speed = speed;
  s.vehicles.push_back(v);
  return v.uid;
}

bool force_lane_change(SimState& s, std::uint64_t uid, int direction) {
  SimVehicle* v = s.find(uid);
  if (v == nullptr || v->maneuver || (direction != 1 && direction != -1)) return false;
  const int target = s.lane_of(*v) + direction;
  if (target < 0 || target >= s.cfg.lane_count) return false;
  start_maneuver(s, *v, direction);
  return true;
}

Frame snapshot(const SimState& s, bool with_keys) {
  Frame f;
  f.t = s.t;
  for (const auto& v : s.vehicles) {
    TrackedVehicle tv;
    tv.raw_id = v.raw_id;
    if (with_keys) tv.key = "sim-" + std::to_string(v.uid);
    tv.lane = s.lane_of(v);
    tv.features = {v.vx, v.vy, v.psi, v.x, v.y,
                   static_cast<double>(s.cfg.lane_count - 1 - tv.lane),
                   static_cast<double>(tv.lane)};
    f.vehicles.push_back(std::move(tv));
  }
  return f;
}

std::vector<Frame> simulate(SimState& s, double duration, bool with_keys) {
  const double period = 1.0 / s.cfg.frame_rate;
  const int n = static_cast<int>(std::floor(duration / period + 1e-9));
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    step_sim(s, period);
    frames.push_back(snapshot(s, with_keys));
  }
  return frames;
}

}  // namespace xlane::twin
