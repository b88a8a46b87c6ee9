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

#include "xlane/faithfulness.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

namespace xlane {

namespace {

constexpr std::array<int, 2> kMovementRange = {kVx, kPsi + 1};
constexpr std::array<int, 2> kPositionRange = {kPosX, kLanesRight + 1};

std::array<int, 2> feature_range(SuperFeature f) {
  return f == SuperFeature::kMovement ? kMovementRange : kPositionRange;
}

std::array<double, kSuperFeatureCount> super_scores(const InputVector<double>& r49) {
  const SuperFeatureExplanation e = aggregate_super(r49);
  std::array<double, kSuperFeatureCount> s{};
  for (int slot = 0; slot < kVehicles; ++slot) {
    s[static_cast<std::size_t>(super_index(slot, SuperFeature::kMovement))] =
        e.value(slot, SuperFeature::kMovement);
    s[static_cast<std::size_t>(super_index(slot, SuperFeature::kPosition))] =
        e.value(slot, SuperFeature::kPosition);
  }
  return s;
}

// Remaining super-feature with the largest score; lowest index wins ties.
int pick(const std::array<double, kSuperFeatureCount>& score,
         const std::array<bool, kSuperFeatureCount>& done, RankBy rank) {
  int best = -1;
  double best_v = 0.0;
  for (int i = 0; i < kSuperFeatureCount; ++i) {
    if (done[static_cast<std::size_t>(i)]) continue;
    const double v = rank == RankBy::kAbsolute ? std::abs(score[static_cast<std::size_t>(i)])
                                               : score[static_cast<std::size_t>(i)];
    if (best < 0 || v > best_v) {
      best = i;
      best_v = v;
    }
  }
  return best;
}

ObservationWindow occlude_index(const ObservationWindow& w, int index, const WindowMatrixd& fill) {
  return occlude(w, index / 2, static_cast<SuperFeature>(index % 2), fill);
}

InputVector<double> feature_mean(const Dataset& d) {
  InputVector<double> sum = InputVector<double>::Zero();
  double n = 0.0;
  const auto rows = d.train.empty() ? d.all_indices() : d.train;
  for (std::size_t i : rows) {
    sum += d.items[i].window.frames.colwise().sum().transpose();
    n += kFrames;
  }
  return n > 0.0 ? InputVector<double>(sum / n) : InputVector<double>::Zero();
}

using OrderFn = std::function<int(const ObservationWindow& current, LaneClass label, int step,
                                  const std::array<bool, kSuperFeatureCount>& done)>;

PerturbationCurve run_curve(const Dataset& d, const std::vector<std::size_t>& instances,
                            const LnLstmParamsd& p, std::string method,
                            const PerturbationConfig& cfg,
                            const std::function<OrderFn(std::size_t)>& make_order) {
  if (instances.empty()) throw ValidationError("perturbation test: no correctly classified instances");
  const InputVector<double> mean =
      cfg.fill == OcclusionFill::kMean ? feature_mean(d) : InputVector<double>::Zero();
  std::vector<std::size_t> correct(kSuperFeatureCount + 1, 0);
  for (std::size_t i : instances) {
    const auto& item = d.items[i];
    const WindowMatrixd fill = fill_window(item.window, cfg.fill, &mean);
    ObservationWindow current = item.window;
    std::array<bool, kSuperFeatureCount> done{};
    const OrderFn order = make_order(i);
    auto is_correct = [&](const ObservationWindow& w) {
      return forward<double>(w.frames, p).first.predicted_class == item.label;
    };
    if (is_correct(current)) ++correct[0];
    for (int step = 1; step <= kSuperFeatureCount; ++step) {
      const int next = order(current, item.label, step, done);
      done[static_cast<std::size_t>(next)] = true;
      current = occlude_index(current, next, fill);
      if (is_correct(current)) ++correct[static_cast<std::size_t>(step)];
    }
  }
  PerturbationCurve c;
  c.method = std::move(method);
  c.instances = instances.size();
  c.seed = cfg.seed;
  for (std::size_t n : correct) {
    c.accuracy.push_back(static_cast<double>(n) / static_cast<double>(instances.size()));
  }
  return c;
}

}  // namespace

std::string_view to_string(OcclusionFill f) {
  switch (f) {
    case OcclusionFill::kSentinel: return "sentinel";
    case OcclusionFill::kZero: return "zero";
    case OcclusionFill::kMean: return "mean";
  }
  return "?";
}

OcclusionFill occlusion_fill_from_string(std::string_view s) {
  if (s == "sentinel") return OcclusionFill::kSentinel;
  if (s == "zero") return OcclusionFill::kZero;
  if (s == "mean") return OcclusionFill::kMean;
  throw ValidationError("unknown occlusion fill '" + std::string(s) +
                        "' (expected sentinel, zero or mean)");
}

std::string_view to_string(RankBy r) { return r == RankBy::kSigned ? "signed" : "abs"; }

RankBy rank_by_from_string(std::string_view s) {
  if (s == "signed") return RankBy::kSigned;
  if (s == "abs") return RankBy::kAbsolute;
  throw ValidationError("unknown ranking '" + std::string(s) + "' (expected signed or abs)");
}

WindowMatrixd fill_window(const ObservationWindow& w, OcclusionFill fill,
                          const InputVector<double>* mean) {
  switch (fill) {
    case OcclusionFill::kSentinel:
      return sentinel_window(w);
    case OcclusionFill::kZero:
      return WindowMatrixd::Zero();
    case OcclusionFill::kMean: {
      if (mean == nullptr) throw ValidationError("mean fill needs the feature mean");
      WindowMatrixd out;
      out.rowwise() = mean->transpose();
      return out;
    }
  }
  throw ValidationError("unknown occlusion fill");
}

ObservationWindow occlude(const ObservationWindow& w, int slot, SuperFeature f,
                          const WindowMatrixd& fill) {
  if (slot < 0 || slot >= kVehicles) {
    throw ValidationError("occlude: vehicle index " + std::to_string(slot) + " outside [0, 7)");
  }
  const auto [lo, hi] = feature_range(f);
  ObservationWindow out = w;
  const int first = slot * kFeaturesPerVehicle + lo;
  out.frames.middleCols(first, hi - lo) = fill.middleCols(first, hi - lo);
  return out;
}

Attribution lrp_attribution(const LnLstmParamsd& p, const LrpConfig& cfg) {
  return [&p, cfg](const ObservationWindow& w, LaneClass target) {
    return aggregate_time(explain_window(w, p, target, cfg).relevance);
  };
}

Attribution ig_attribution(const LnLstmParamsd& p, const IgConfig& cfg) {
  return [&p, cfg](const ObservationWindow& w, LaneClass target) {
    return aggregate_time(integrated_gradients(w, p, target, cfg));
  };
}

std::vector<std::size_t> correct_instances(const Dataset& d, const std::vector<std::size_t>& idx,
                                           const LnLstmParamsd& p, std::size_t max_instances) {
  std::vector<std::size_t> out;
  for (std::size_t i : idx) {
    if (max_instances > 0 && out.size() >= max_instances) break;
    const auto& item = d.items[i];
    if (forward<double>(item.window.frames, p).first.predicted_class == item.label) {
      out.push_back(i);
    }
  }
  if (out.empty()) throw ValidationError("perturbation test: no correctly classified instances");
  return out;
}

PerturbationCurve perturbation_test(const Dataset& d, const std::vector<std::size_t>& instances,
                                    const LnLstmParamsd& p, const Attribution& attribution,
                                    std::string method, const PerturbationConfig& cfg) {
  return run_curve(d, instances, p, std::move(method), cfg, [&](std::size_t) -> OrderFn {
    auto fixed = std::make_shared<std::array<double, kSuperFeatureCount>>();
    return [&, fixed](const ObservationWindow& current, LaneClass label, int step,
                      const std::array<bool, kSuperFeatureCount>& done) {
      if (cfg.recompute || step == 1) *fixed = super_scores(attribution(current, label));
      return pick(*fixed, done, cfg.rank);
    };
  });
}

PerturbationCurve random_occlusion(const Dataset& d, const std::vector<std::size_t>& instances,
                                   const LnLstmParamsd& p, const PerturbationConfig& cfg) {
  return run_curve(d, instances, p, "random", cfg, [&](std::size_t instance) -> OrderFn {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(instance)};
    std::mt19937_64 rng(seq);
    auto order = std::make_shared<std::array<int, kSuperFeatureCount>>();
    std::iota(order->begin(), order->end(), 0);
    std::shuffle(order->begin(), order->end(), rng);
    return [order](const ObservationWindow&, LaneClass, int step,
                   const std::array<bool, kSuperFeatureCount>&) {
      return (*order)[static_cast<std::size_t>(step - 1)];
    };
  });
}

double mean_accuracy(const PerturbationCurve& c, int first, int last) {
  if (first < 0 || last >= static_cast<int>(c.accuracy.size()) || first > last) {
    throw ValidationError("mean_accuracy: step range outside the curve");
  }
  double s = 0.0;
  for (int k = first; k <= last; ++k) s += c.accuracy[static_cast<std::size_t>(k)];
  return s / (last - first + 1);
}

BenchmarkReport timing_benchmark(const Dataset& d, const std::vector<std::size_t>& instances,
                                 const LnLstmParamsd& p, const LrpConfig& lrp, const IgConfig& ig,
                                 std::size_t warmup) {
  using Clock = std::chrono::steady_clock;
  if (instances.size() <= warmup) throw ValidationError("timing benchmark: too few instances");
  double lrp_total = 0.0, ig_total = 0.0, sink = 0.0;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const auto& item = d.items[instances[k]];
    const auto t0 = Clock::now();
    const auto e = explain_window(item.window, p, item.label, lrp);
    const auto t1 = Clock::now();
    const auto a = integrated_gradients(item.window, p, item.label, ig);
    const auto t2 = Clock::now();
    sink += e.relevance(0, 0) + a(0, 0);
    if (k < warmup) continue;
    lrp_total += std::chrono::duration<double>(t1 - t0).count();
    ig_total += std::chrono::duration<double>(t2 - t1).count();
  }
  BenchmarkReport r;
  r.instances = instances.size() - warmup;
  r.lrp_seconds = lrp_total / static_cast<double>(r.instances);
  r.ig_seconds = ig_total / static_cast<double>(r.instances);
  r.ratio = r.ig_seconds / r.lrp_seconds;
  r.ig_steps = ig.steps;
  if (!std::isfinite(sink)) throw NumericError("benchmark", "non-finite attribution");
  return r;
}

}  // namespace xlane
