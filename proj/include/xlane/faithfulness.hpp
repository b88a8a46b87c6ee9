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

// Perturbation test: occlude super-features of correctly classified windows
// in attribution order and track accuracy against the original label.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "xlane/dataset.hpp"
#include "xlane/explanation.hpp"
#include "xlane/ig.hpp"
#include "xlane/lrp.hpp"
#include "xlane/model.hpp"

namespace xlane {

enum class OcclusionFill { kSentinel, kZero, kMean };
enum class RankBy { kSigned, kAbsolute };

std::string_view to_string(OcclusionFill f);
OcclusionFill occlusion_fill_from_string(std::string_view s);
std::string_view to_string(RankBy r);
RankBy rank_by_from_string(std::string_view s);

/// The fully occluded version of `w`. kMean needs the per-feature mean.
WindowMatrixd fill_window(const ObservationWindow& w, OcclusionFill fill,
                          const InputVector<double>* feature_mean = nullptr);

/// Copies the 3 (movement) or 4 (position) features of `slot` from `fill`
/// into `w` in all four frames.
ObservationWindow occlude(const ObservationWindow& w, int slot, SuperFeature f,
                          const WindowMatrixd& fill);

/// Super-feature index in [0, 14): 2 * slot + (position ? 1 : 0).
inline int super_index(int slot, SuperFeature f) {
  return 2 * slot + static_cast<int>(f);
}

/// Per-dimension relevance (time-aggregated) of `target` for a window.
using Attribution =
    std::function<InputVector<double>(const ObservationWindow&, LaneClass)>;

Attribution lrp_attribution(const LnLstmParamsd& p, const LrpConfig& cfg);
Attribution ig_attribution(const LnLstmParamsd& p, const IgConfig& cfg);

struct PerturbationCurve {
  std::string method;
  std::vector<double> accuracy;  // index = step, 0 = unperturbed
  std::size_t instances = 0;
  std::uint64_t seed = 0;
};

struct PerturbationConfig {
  OcclusionFill fill = OcclusionFill::kSentinel;
  RankBy rank = RankBy::kSigned;
  bool recompute = true;  // false: rank once on the unperturbed window
  std::uint64_t seed = 1;
  std::size_t max_instances = 0;  // 0 = all
};

/// Correctly classified instances among `idx`, in order, capped at
/// cfg.max_instances. Throws when none are correct.
std::vector<std::size_t> correct_instances(const Dataset& d,
                                           const std::vector<std::size_t>& idx,
                                           const LnLstmParamsd& p,
                                           std::size_t max_instances = 0);

PerturbationCurve perturbation_test(const Dataset& d,
                                    const std::vector<std::size_t>& instances,
                                    const LnLstmParamsd& p,
                                    const Attribution& attribution,
                                    std::string method,
                                    const PerturbationConfig& cfg);

/// Uniformly random occlusion order per instance, seeded by (seed, instance).
PerturbationCurve random_occlusion(const Dataset& d,
                                   const std::vector<std::size_t>& instances,
                                   const LnLstmParamsd& p,
                                   const PerturbationConfig& cfg);

/// Mean of accuracy over steps [first, last].
double mean_accuracy(const PerturbationCurve& c, int first, int last);

struct BenchmarkReport {
  double lrp_seconds = 0.0;  // mean per instance
  double ig_seconds = 0.0;
  double ratio = 0.0;        // ig / lrp
  int ig_steps = 0;
  std::size_t instances = 0;
};

/// Per-instance wall time of forward + LRP against IG over the same windows.
/// The first `warmup` instances are run but not timed.
BenchmarkReport timing_benchmark(const Dataset& d,
                                 const std::vector<std::size_t>& instances,
                                 const LnLstmParamsd& p, const LrpConfig& lrp,
                                 const IgConfig& ig, std::size_t warmup = 10);

}  // namespace xlane
