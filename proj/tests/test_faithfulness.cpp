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

#include <random>

#include "test_support.hpp"
#include "xlane/faithfulness.hpp"
#include "xlane/train.hpp"

namespace xlane {
namespace {

// Only the query's movement varies: lateral speed carries the class and
// longitudinal speed is noise. A single varying input would reach the first
// layer norm as a scaled copy of one weight column and the norm discards that
// scale, so the noise channel keeps the class learnable.
Dataset query_motion_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledWindow item;
    for (auto& row : item.window.mask) row.fill(true);
    const int c = static_cast<int>(i % kClasses);
    const double vy = (c == 0 ? 1.0 : c == 2 ? -1.0 : 0.0) + testing::uniform(rng, -0.3, 0.3);
    const double vx = testing::uniform(rng, 25.0, 35.0);
    for (int k = 0; k < kFrames; ++k) {
      item.window.frames(k, feature_index(kQuery, kVy)) = vy;
      item.window.frames(k, feature_index(kQuery, kVx)) = vx;
    }
    item.window.id = "m" + std::to_string(i);
    item.label = static_cast<LaneClass>(c);
    d.items.push_back(std::move(item));
  }
  stratified_split(d, 0.7, 0.15, seed);
  return d;
}

struct Fixture {
  Dataset data;
  LnLstmParamsd params;
  std::vector<std::size_t> instances;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    out.data = query_motion_dataset(600, 1);
    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.epochs = 20;
    out.params = train(out.data, cfg);
    out.instances = correct_instances(out.data, out.data.all_indices(), out.params);
    return out;
  }();
  return f;
}

TEST(Occlude, MovementOfOneSlotChangesTwelveEntries) {
  std::mt19937_64 rng(2);
  const ObservationWindow w = testing::random_window(rng);
  const WindowMatrixd fill = fill_window(w, OcclusionFill::kSentinel);
  const ObservationWindow o = occlude(w, kRightFront, SuperFeature::kMovement, fill);
  int changed = 0;
  for (int k = 0; k < kFrames; ++k) {
    for (int j = 0; j < kInputDim; ++j) {
      if (o.frames(k, j) != w.frames(k, j)) {
        ++changed;
        EXPECT_EQ(o.frames(k, j), fill(k, j));
        EXPECT_EQ(j / kFeaturesPerVehicle, kRightFront);
        EXPECT_LT(j % kFeaturesPerVehicle, 3);
      }
    }
  }
  EXPECT_EQ(changed, 12);
  EXPECT_THROW(occlude(w, 7, SuperFeature::kMovement, fill), ValidationError);
}

TEST(Occlude, AllSuperFeaturesGiveTheFill) {
  std::mt19937_64 rng(3);
  const ObservationWindow w = testing::random_window(rng);
  for (auto kind : {OcclusionFill::kSentinel, OcclusionFill::kZero}) {
    const WindowMatrixd fill = fill_window(w, kind);
    ObservationWindow o = w;
    for (int s = 0; s < kVehicles; ++s) {
      for (auto f : {SuperFeature::kMovement, SuperFeature::kPosition}) o = occlude(o, s, f, fill);
    }
    EXPECT_EQ(o.frames, fill);
    const ObservationWindow twice = occlude(occlude(w, kFront, SuperFeature::kPosition, fill),
                                            kFront, SuperFeature::kPosition, fill);
    EXPECT_EQ(twice.frames, occlude(w, kFront, SuperFeature::kPosition, fill).frames);
  }
}

TEST(Occlude, MeanFillNeedsTheMean) {
  std::mt19937_64 rng(4);
  const ObservationWindow w = testing::random_window(rng);
  EXPECT_THROW(fill_window(w, OcclusionFill::kMean), ValidationError);
  InputVector<double> mean;
  testing::fill(mean, rng, -1.0, 1.0);
  const WindowMatrixd f = fill_window(w, OcclusionFill::kMean, &mean);
  for (int k = 0; k < kFrames; ++k) EXPECT_EQ(f.row(k).transpose(), mean);
}

TEST(Perturbation, EveryMethodMeetsAtTheLastStep) {
  const Fixture& fx = fixture();
  PerturbationConfig cfg;
  cfg.max_instances = 60;
  const auto inst = std::vector<std::size_t>(fx.instances.begin(),
                                             fx.instances.begin() + std::min<std::size_t>(60, fx.instances.size()));
  IgConfig ig;
  ig.steps = 8;
  LrpConfig id;
  id.ln_rule = LnRule::kIdentity;
  const auto a = perturbation_test(fx.data, inst, fx.params, lrp_attribution(fx.params, {}),
                                   "lrp-omega", cfg);
  const auto b = perturbation_test(fx.data, inst, fx.params, lrp_attribution(fx.params, id),
                                   "lrp-identity", cfg);
  const auto c = perturbation_test(fx.data, inst, fx.params, ig_attribution(fx.params, ig),
                                   "ig", cfg);
  const auto r = random_occlusion(fx.data, inst, fx.params, cfg);
  for (const auto* curve : {&a, &b, &c, &r}) {
    ASSERT_EQ(curve->accuracy.size(), static_cast<std::size_t>(kSuperFeatureCount + 1));
    EXPECT_EQ(curve->accuracy[0], 1.0);
    EXPECT_EQ(curve->accuracy.back(), a.accuracy.back());
  }
}

TEST(Perturbation, OracleAttributionCollapsesAfterOneStep) {
  const Fixture& fx = fixture();
  ASSERT_GT(fx.instances.size(), 500u);
  const Attribution oracle = [](const ObservationWindow&, LaneClass) {
    InputVector<double> r = InputVector<double>::Zero();
    r(feature_index(kQuery, kVy)) = 1.0;
    return r;
  };
  PerturbationConfig cfg;
  cfg.fill = OcclusionFill::kZero;
  const auto curve = perturbation_test(fx.data, fx.instances, fx.params, oracle, "oracle", cfg);
  const auto counts = fx.data.class_counts(fx.instances);
  const double largest_share =
      static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
      static_cast<double>(fx.instances.size());
  // After one step every window is identical, so one class is predicted for all.
  EXPECT_LE(curve.accuracy[1], largest_share);
  EXPECT_LT(largest_share, 0.4);
}

TEST(Perturbation, RandomOcclusionIsSeeded) {
  const Fixture& fx = fixture();
  PerturbationConfig cfg;
  cfg.seed = 5;
  const auto a = random_occlusion(fx.data, fx.instances, fx.params, cfg);
  const auto b = random_occlusion(fx.data, fx.instances, fx.params, cfg);
  EXPECT_EQ(a.accuracy, b.accuracy);
  cfg.seed = 6;
  const auto c = random_occlusion(fx.data, fx.instances, fx.params, cfg);
  EXPECT_NE(a.accuracy, c.accuracy);
  // Binomial noise on ~250 instances stays well inside 0.15.
  for (std::size_t k = 0; k < a.accuracy.size(); ++k) {
    EXPECT_NEAR(a.accuracy[k], c.accuracy[k], 0.15) << "step " << k;
  }
}

TEST(Perturbation, RandomAttributionMatchesRandomOcclusion) {
  const Fixture& fx = fixture();
  auto rng = std::make_shared<std::mt19937_64>(9);
  const Attribution random_scores = [rng](const ObservationWindow&, LaneClass) {
    InputVector<double> r;
    testing::fill(r, *rng, -1.0, 1.0);
    return r;
  };
  PerturbationConfig cfg;
  cfg.recompute = false;
  const auto a = perturbation_test(fx.data, fx.instances, fx.params, random_scores, "random-attr", cfg);
  const auto b = random_occlusion(fx.data, fx.instances, fx.params, cfg);
  EXPECT_NEAR(mean_accuracy(a, 1, 13), mean_accuracy(b, 1, 13), 0.1);
}

TEST(Perturbation, EmptyCorrectSetRejected) {
  const Fixture& fx = fixture();
  EXPECT_THROW(correct_instances(fx.data, {}, fx.params), ValidationError);
  EXPECT_THROW(random_occlusion(fx.data, {}, fx.params, {}), ValidationError);
}

TEST(Perturbation, MeanAccuracyRange) {
  PerturbationCurve c;
  c.accuracy = {1.0, 0.5, 0.25, 0.25};
  EXPECT_DOUBLE_EQ(mean_accuracy(c, 1, 3), (0.5 + 0.25 + 0.25) / 3.0);
  EXPECT_THROW(mean_accuracy(c, 1, 4), ValidationError);
}

TEST(Benchmark, IgCostScalesWithSteps) {
  const Fixture& fx = fixture();
  std::vector<std::size_t> inst = fx.data.all_indices();
  inst.resize(150);
  IgConfig one;
  one.steps = 1;
  const auto r1 = timing_benchmark(fx.data, inst, fx.params, {}, one);
  EXPECT_GT(r1.ratio, 0.3);
  EXPECT_LT(r1.ratio, 4.0);
  IgConfig fifty;
  fifty.steps = 50;
  const auto r50 = timing_benchmark(fx.data, inst, fx.params, {}, fifty);
  EXPECT_GE(r50.ratio, 3.0);
  EXPECT_EQ(r50.instances, 140u);
}

}  // namespace
}  // namespace xlane
