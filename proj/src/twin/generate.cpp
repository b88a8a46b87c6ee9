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

#include "xlane/twin/generate.hpp"

#include <algorithm>
#include <random>

#include <spdlog/spdlog.h>

#include "xlane/twin/windows.hpp"

namespace xlane::twin {

namespace {

struct Candidate {
  std::size_t frame = 0;
  std::string key;
};

}  // namespace

Dataset generate_dataset(const SimConfig& sim, const GenerateConfig& cfg) {
  if (cfg.n_per_class == 0) throw ValidationError("gen-data: n_per_class must be positive");
  SimState state(sim);
  simulate(state, cfg.warmup_s, true);

  const double period = 1.0 / sim.frame_rate;
  const auto lookback = static_cast<std::size_t>(std::lround(kWindowSpan / period));
  const auto lookahead = static_cast<std::size_t>(std::lround(kPredictionHorizon / period));

  std::vector<Frame> frames;
  std::array<std::vector<Candidate>, kClasses> candidates;
  std::size_t labeled_upto = lookback;
  for (int round = 0;; ++round) {
    auto chunk = simulate(state, cfg.chunk_s, true);
    frames.insert(frames.end(), std::make_move_iterator(chunk.begin()),
                  std::make_move_iterator(chunk.end()));
    for (; labeled_upto + lookahead < frames.size(); ++labeled_upto) {
      const std::span<const Frame> all(frames);
      const Frame& now = frames[labeled_upto];
      const auto history = all.subspan(labeled_upto - lookback, lookback + 1);
      const auto future = all.subspan(labeled_upto, lookahead + 1);
      for (const auto& v : now.vehicles) {
        bool present = true;
        for (const auto& f : history) present = present && f.find(v.key) != nullptr;
        if (!present) continue;
        const auto label = label_window(future, v.key, now.t);
        if (!label) continue;
        candidates[static_cast<std::size_t>(*label)].push_back({labeled_upto, v.key});
      }
    }
    bool enough = true;
    for (const auto& c : candidates) enough = enough && c.size() >= cfg.n_per_class;
    if (enough) break;
    if (round + 1 >= cfg.max_rounds) {
      throw Error("gen-data: simulation produced too few lane changes after " +
                  std::to_string(round + 1) + " rounds");
    }
    spdlog::info("gen-data: candidates left/keep/right = {}/{}/{} after {:.0f} s; extending "
                 "simulation",
                 candidates[0].size(), candidates[1].size(), candidates[2].size(), state.t);
  }

  Dataset d;
  d.seed = sim.seed;
  std::mt19937_64 rng(sim.seed ^ 0x5eedda7aULL);
  for (int c = 0; c < kClasses; ++c) {
    std::vector<Candidate> picked;
    std::sample(candidates[static_cast<std::size_t>(c)].begin(),
                candidates[static_cast<std::size_t>(c)].end(), std::back_inserter(picked),
                cfg.n_per_class, rng);
    for (const auto& cand : picked) {
      const std::span<const Frame> all(frames);
      const auto history = all.subspan(cand.frame - lookback, lookback + 1);
      auto w = build_window(history, cand.key, frames[cand.frame].t);
      if (!w) throw Error("gen-data: candidate window could not be rebuilt");
      validate_window(*w);
      LabeledWindow item;
      item.window = std::move(*w);
      item.label = static_cast<LaneClass>(c);
      item.query_id = cand.key;
      item.t = frames[cand.frame].t;
      d.items.push_back(std::move(item));
    }
  }
  std::shuffle(d.items.begin(), d.items.end(), rng);
  stratified_split(d, cfg.train_frac, cfg.val_frac, sim.seed);
  return d;
}

}  // namespace xlane::twin
