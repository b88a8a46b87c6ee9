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

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "xlane/twin/frame.hpp"
#include "xlane/twin/generate.hpp"
#include "xlane/twin/replay.hpp"
#include "xlane/twin/sim.hpp"
#include "xlane/twin/windows.hpp"

namespace xlane::twin {
namespace {

namespace fs = std::filesystem;

SimConfig quiet_config() {
  SimConfig c;
  c.seed = 7;
  return c;
}

TEST(Sim, EmptyRoadStaysEmpty) {
  SimState s(quiet_config());
  s.spawning = false;
  for (const auto& f : simulate(s, 20.0)) EXPECT_TRUE(f.vehicles.empty());
}

TEST(Sim, LoneVehicleDrivesStraight) {
  SimState s(quiet_config());
  s.spawning = false;
  s.random_lane_changes = false;
  add_vehicle(s, 10.0, 1, 30.0);
  const auto frames = simulate(s, 10.0);
  ASSERT_EQ(frames.size(), 20u);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    ASSERT_EQ(frames[k].vehicles.size(), 1u);
    const auto& v = frames[k].vehicles[0].features;
    EXPECT_NEAR(v.x, 10.0 + 30.0 * 0.5 * static_cast<double>(k + 1), 1e-9);
    EXPECT_DOUBLE_EQ(v.y, s.lane_center(1));
    EXPECT_EQ(v.psi, 0.0);
    EXPECT_EQ(v.vy, 0.0);
    EXPECT_DOUBLE_EQ(v.vx, 30.0);
  }
}

TEST(Sim, DeterministicForFixedSeed) {
  SimState a(quiet_config()), b(quiet_config());
  for (int k = 0; k < 1000; ++k) {
    step_sim(a, 0.1);
    step_sim(b, 0.1);
  }
  ASSERT_EQ(a.vehicles.size(), b.vehicles.size());
  ASSERT_FALSE(a.vehicles.empty());
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
    EXPECT_EQ(a.vehicles[i].uid, b.vehicles[i].uid);
    EXPECT_EQ(a.vehicles[i].x, b.vehicles[i].x);
    EXPECT_EQ(a.vehicles[i].y, b.vehicles[i].y);
    EXPECT_EQ(a.vehicles[i].vx, b.vehicles[i].vx);
  }
}

TEST(Sim, NoOverlapsWithinALane) {
  SimConfig c = quiet_config();
  c.spawn_rate = 2.0;
  SimState s(c);
  for (const auto& f : simulate(s, 300.0)) {
    for (std::size_t i = 0; i < f.vehicles.size(); ++i) {
      for (std::size_t j = i + 1; j < f.vehicles.size(); ++j) {
        const auto& a = f.vehicles[i].features;
        const auto& b = f.vehicles[j].features;
        if (std::abs(a.y - b.y) < 0.5 * c.lane_width) {
          EXPECT_GE(std::abs(a.x - b.x), 4.5) << "t=" << f.t;
        }
      }
    }
  }
}

TEST(Sim, LaneChangeProfile) {
  SimState s(quiet_config());
  s.spawning = false;
  s.random_lane_changes = false;
  const auto uid = add_vehicle(s, 50.0, 0, 30.0);
  EXPECT_FALSE(force_lane_change(s, uid, -1));
  ASSERT_TRUE(force_lane_change(s, uid, 1));
  EXPECT_FALSE(force_lane_change(s, uid, 1));
  std::vector<double> psi;
  for (int k = 0; k < 70; ++k) {
    step_sim(s, 0.1);
    psi.push_back(s.vehicles[0].psi);
  }
  const double peak = *std::max_element(psi.begin(), psi.end());
  EXPECT_GT(peak, 0.0);
  EXPECT_LT(psi[4], psi[10]);                 // rising during the ramp
  EXPECT_NEAR(psi[14], peak, 1e-9);           // held after 1.5 s
  EXPECT_NEAR(psi[40], peak, 1e-9);
  EXPECT_GT(psi[50], psi[56]);                // relaxing
  EXPECT_EQ(psi.back(), 0.0);
  EXPECT_EQ(s.lane_of(s.vehicles[0]), 1);
  EXPECT_NEAR(s.vehicles[0].y, s.lane_center(1), 1e-9);
}

TEST(Sim, RawIdsWrapPast10000) {
  SimState s(quiet_config());
  s.spawning = false;
  s.next_raw_id = 9999;
  add_vehicle(s, 0.0, 0, 30.0);
  add_vehicle(s, 50.0, 0, 30.0);
  add_vehicle(s, 100.0, 0, 30.0);
  EXPECT_EQ(s.vehicles[0].raw_id, 9999);
  EXPECT_EQ(s.vehicles[1].raw_id, 10000);
  EXPECT_EQ(s.vehicles[2].raw_id, 1);
}

TEST(Sim, ConfigFiles) {
  const fs::path p = fs::temp_directory_path() / "xlane_sim.toml";
  {
    std::ofstream out(p);
    out << "# road\n[road]\nlane_count = 4\nsegment_length = 900 # m\nseed = 11\n";
  }
  const SimConfig c = load_sim_config(p);
  EXPECT_EQ(c.lane_count, 4);
  EXPECT_EQ(c.segment_length, 900.0);
  EXPECT_EQ(c.seed, 11u);
  {
    std::ofstream out(p);
    out << "lanes = 4\n";
  }
  EXPECT_THROW(load_sim_config(p), ValidationError);
  {
    std::ofstream out(p);
    out << "frame_rate = 10\n";
  }
  EXPECT_THROW(load_sim_config(p), ValidationError);
  fs::remove(p);
}

TrackedVehicle tracked(const std::string& key, int raw_id, int lane, double x) {
  TrackedVehicle v;
  v.key = key;
  v.raw_id = raw_id;
  v.lane = lane;
  v.features = {30.0, 0.0, 0.0, x, (lane + 0.5) * 3.75, 2.0 - lane, double(lane)};
  return v;
}

TEST(Neighbors, LoneQueryHasSixMaskedSlots) {
  Frame f;
  f.vehicles.push_back(tracked("q", 1, 1, 100.0));
  const auto n = extract_neighbors(f, "q");
  for (int s = 0; s < kQuery; ++s) EXPECT_FALSE(n.mask[s]);
  EXPECT_TRUE(n.mask[kQuery]);
  EXPECT_THROW(extract_neighbors(f, "missing"), LookupError);
}

TEST(Neighbors, ClosestWins) {
  Frame f;
  f.vehicles.push_back(tracked("q", 1, 1, 100.0));
  f.vehicles.push_back(tracked("far", 2, 1, 160.0));
  f.vehicles.push_back(tracked("near", 3, 1, 120.0));
  const auto n = extract_neighbors(f, "q");
  ASSERT_TRUE(n.slots[kFront]);
  EXPECT_EQ(n.slots[kFront]->key, "near");
  EXPECT_FALSE(n.mask[kRear]);
}

TEST(Neighbors, MatchesBruteForceSearch) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> lane_pick(0, 3), count_pick(1, 25);
  std::uniform_real_distribution<double> x_pick(0.0, 500.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Frame f;
    const int n = count_pick(rng);
    for (int i = 0; i < n; ++i) {
      f.vehicles.push_back(tracked("v" + std::to_string(i), i + 1, lane_pick(rng), x_pick(rng)));
    }
    const auto& q = f.vehicles[0];
    // Oracle: scan every vehicle for every region independently.
    std::array<std::string, kVehicles> expect{};
    std::array<double, kVehicles> best;
    best.fill(1e300);
    const std::map<std::pair<int, bool>, int> region = {
        {{1, true}, kLeftFront}, {{0, true}, kFront},  {{-1, true}, kRightFront},
        {{1, false}, kLeftRear}, {{0, false}, kRear}, {{-1, false}, kRightRear}};
    for (std::size_t i = 1; i < f.vehicles.size(); ++i) {
      const auto& v = f.vehicles[i];
      const double dx = v.features.x - q.features.x;
      const auto it = region.find({v.lane - q.lane, dx >= 0.0});
      if (it == region.end()) continue;
      if (std::abs(dx) < best[it->second]) {
        best[it->second] = std::abs(dx);
        expect[it->second] = v.key;
      }
    }
    const auto got = extract_neighbors(f, "v0");
    for (int s = 0; s < kQuery; ++s) {
      EXPECT_EQ(got.mask[s], !expect[s].empty());
      if (got.slots[s]) {
        EXPECT_EQ(got.slots[s]->key, expect[s]) << "trial " << trial;
      }
    }
  }
}

std::vector<Frame> scripted(double t_end, const std::function<int(double)>& lane_at,
                            double first_seen = 0.0) {
  std::vector<Frame> frames;
  for (double t = 0.0; t <= t_end + 1e-9; t += 0.5) {
    Frame f;
    f.t = t;
    if (t >= first_seen - 1e-9) f.vehicles.push_back(tracked("q", 1, lane_at(t), 30.0 * t));
    f.vehicles.push_back(tracked("o", 2, 0, 30.0 * t + 40.0));
    frames.push_back(std::move(f));
  }
  return frames;
}

TEST(BuildWindow, HistoryBoundaries) {
  const auto frames = scripted(5.0, [](double) { return 1; }, 1.0);
  EXPECT_TRUE(build_window(frames, "q", 2.5).has_value());
  EXPECT_FALSE(build_window(frames, "q", 2.49).has_value());
  EXPECT_FALSE(build_window(frames, "q", 2.0).has_value());
  const auto w = build_window(frames, "q", 4.0);
  ASSERT_TRUE(w);
  EXPECT_NO_THROW(validate_window(*w));
  EXPECT_EQ((std::array<double, 4>{-1.5, -1.0, -0.5, 0.0}), w->timestamps);
  EXPECT_EQ(w->slot_ids[kQuery], "q");
  EXPECT_EQ(w->slot_ids[kRightFront], "o");
  EXPECT_DOUBLE_EQ(w->vehicle(3, kQuery).x, 120.0);
  EXPECT_DOUBLE_EQ(w->vehicle(0, kQuery).x, 75.0);
}

TEST(BuildWindow, MissingFrameBeyondJitter) {
  auto frames = scripted(5.0, [](double) { return 1; });
  frames.erase(frames.begin() + 5);  // t = 2.5
  EXPECT_FALSE(build_window(frames, "q", 3.5).has_value());
  EXPECT_TRUE(build_window(frames, "q", 4.5).has_value());
}

TEST(LabelWindow, ScriptedLaneChanges) {
  const auto left = scripted(10.0, [](double t) { return t >= 4.0 ? 2 : 1; });
  EXPECT_EQ(label_window(left, "q", 3.0), LaneClass::kLeft);
  const auto right = scripted(10.0, [](double t) { return t >= 5.0 ? 0 : 1; });
  EXPECT_EQ(label_window(right, "q", 3.0), LaneClass::kRight);
  const auto keep = scripted(10.0, [](double) { return 1; });
  EXPECT_EQ(label_window(keep, "q", 3.0), LaneClass::kKeep);
  const auto late = scripted(10.0, [](double t) { return t >= 5.5 ? 2 : 1; });
  EXPECT_EQ(label_window(late, "q", 3.0), LaneClass::kLeft);
  EXPECT_EQ(label_window(late, "q", 2.5), LaneClass::kKeep);  // change at t + 3.0
  EXPECT_EQ(label_window(keep, "q", 8.0), std::nullopt);       // horizon not covered
}

TEST(LabelWindow, ChangeJustPastHorizonIsKeep) {
  // Frames every 0.1 s so the change lands at t + 2.6.
  std::vector<Frame> frames;
  for (int k = 0; k <= 60; ++k) {
    Frame f;
    f.t = 0.1 * k;
    f.vehicles.push_back(tracked("q", 1, k >= 36 ? 2 : 1, 3.0 * k));
    frames.push_back(std::move(f));
  }
  EXPECT_EQ(label_window(frames, "q", 1.0), LaneClass::kKeep);
  EXPECT_EQ(label_window(frames, "q", 1.1), LaneClass::kLeft);
}

TEST(LabelWindow, QueryLeavingIsSkipped) {
  auto frames = scripted(10.0, [](double) { return 1; });
  for (auto& f : frames) {
    if (f.t >= 4.0) std::erase_if(f.vehicles, [](const auto& v) { return v.key == "q"; });
  }
  EXPECT_EQ(label_window(frames, "q", 3.0), std::nullopt);
}

TEST(Generate, BalancedValidatedDataset) {
  GenerateConfig g;
  g.n_per_class = 100;
  const Dataset d = generate_dataset(quiet_config(), g);
  ASSERT_EQ(d.size(), 300u);
  const auto counts = d.class_counts(d.all_indices());
  for (auto n : counts) EXPECT_EQ(n, 100u);
  std::set<std::string> ids;
  for (const auto& item : d.items) {
    EXPECT_NO_THROW(validate_window(item.window));
    EXPECT_EQ(item.window.slot_ids[kQuery], item.query_id);
    ids.insert(item.window.id);
  }
  EXPECT_EQ(ids.size(), 300u);
  EXPECT_EQ(d.train.size() + d.val.size() + d.test.size(), 300u);

  SimConfig other = quiet_config();
  other.seed = 8;
  g.n_per_class = 20;
  const Dataset e = generate_dataset(other, g);
  ASSERT_EQ(e.size(), 60u);
  for (const auto& item : e.items) EXPECT_NO_THROW(validate_window(item.window));
  EXPECT_NE(e.items[0].window.frames, d.items[0].window.frames);
}

TEST(FrameFile, RoundTripAndCorruptOffset) {
  const fs::path p = fs::temp_directory_path() / "xlane_frames.bin";
  SimState s(quiet_config());
  const auto frames = simulate(s, 40.0);
  {
    FrameWriter w(p);
    for (int k = 0; k < 3; ++k) w.write(frames[k]);
    w.write_raw("{\"t\": 1.0, \"vehicles\": [oops]}");
  }
  FrameReader r(p);
  for (int k = 0; k < 3; ++k) {
    auto f = r.next();
    ASSERT_TRUE(f);
    EXPECT_EQ(f->t, frames[k].t);
    EXPECT_EQ(f->vehicles.size(), frames[k].vehicles.size());
  }
  const std::size_t record_offset = r.offset();
  try {
    r.next();
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.offset(), record_offset);
    EXPECT_LT(e.offset(), fs::file_size(p));
  }
  fs::resize_file(p, fs::file_size(p) - 5);
  FrameReader truncated(p);
  for (int k = 0; k < 3; ++k) truncated.next();
  EXPECT_THROW(truncated.next(), ParseError);
  fs::remove(p);
}

TEST(Replay, RecordedMinuteInOrder) {
  const fs::path p = fs::temp_directory_path() / "xlane_replay.bin";
  {
    SimSource src(quiet_config(), 60.0);
    FrameWriter w(p);
    while (auto f = src.next()) w.write(*f);
  }
  FileSource file(p);
  std::vector<double> ts;
  const auto n = stream_replay(file, 0.0, [&](const Frame& f) {
    ts.push_back(f.t);
    return true;
  });
  EXPECT_EQ(n, 120u);
  ASSERT_EQ(ts.size(), 120u);
  EXPECT_TRUE(std::is_sorted(ts.begin(), ts.end()));

  FileSource again(p);
  const auto start = std::chrono::steady_clock::now();
  const auto m = stream_replay(again, 10.0, [](const Frame&) { return true; });
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(m, 120u);
  EXPECT_NEAR(wall, 6.0, 0.6);
  fs::remove(p);
}

}  // namespace
}  // namespace xlane::twin
