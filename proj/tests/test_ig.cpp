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
#include "xlane/ig.hpp"

namespace xlane {
namespace {

TEST(IntegratePath, LinearModelIsExactInOneStep) {
  std::mt19937_64 rng(1);
  WindowMatrixd w, x, base;
  testing::fill(w, rng, -1.0, 1.0);
  testing::fill(x, rng, -1.0, 1.0);
  testing::fill(base, rng, -1.0, 1.0);
  const auto grad = [&](const WindowMatrixd&) { return w; };
  for (int steps : {1, 7, 50}) {
    const WindowMatrixd a = integrate_path<double>(x, base, grad, steps);
    EXPECT_TRUE(a.isApprox(w.cwiseProduct(x - base), 1e-12));
    // Completeness is exact for f(x) = <w, x>.
    EXPECT_NEAR(a.sum(), w.cwiseProduct(x).sum() - w.cwiseProduct(base).sum(), 1e-12);
  }
}

TEST(IntegratePath, SameEndpointsGiveZero) {
  std::mt19937_64 rng(2);
  const LnLstmParamsd p = testing::random_params(8, rng);
  const ObservationWindow w = testing::random_window(rng);
  const WindowMatrixd a = integrated_gradients(w, p, LaneClass::kLeft, {}, w.frames);
  EXPECT_TRUE((a.array() == 0.0).all());
}

TEST(IntegratePath, StepsBelowOneRejected) {
  std::mt19937_64 rng(3);
  const LnLstmParamsd p = testing::random_params(4, rng);
  IgConfig cfg;
  cfg.steps = 0;
  EXPECT_THROW(integrated_gradients(testing::random_window(rng), p, LaneClass::kKeep, cfg),
               ValidationError);
}

TEST(IntegratePath, NonFiniteGradientRejected) {
  const auto grad = [](const WindowMatrixd&) {
    WindowMatrixd g = WindowMatrixd::Zero();
    g(0, 0) = std::numeric_limits<double>::infinity();
    return g;
  };
  EXPECT_THROW(integrate_path<double>(WindowMatrixd::Ones(), WindowMatrixd::Zero(), grad, 4),
               NumericError);
}

TEST(IntegratedGradients, CompletenessWithinOnePercentAt200Steps) {
  // Zero baseline on random weights. A path occasionally crosses a point where
  // a layer-norm input is nearly constant; the output bends sharply there and
  // 200 nodes cannot resolve it, so those paths must converge with more nodes.
  std::mt19937_64 rng(4);
  IgConfig cfg;
  cfg.steps = 200;
  cfg.baseline = IgBaseline::kZeroWindow;
  IgConfig dense = cfg;
  dense.steps = 20000;
  const int n = 80;
  int within = 0;
  for (int trial = 0; trial < n; ++trial) {
    const LnLstmParamsd p = testing::random_params(16, rng);
    const ObservationWindow w = testing::random_window(rng);
    const auto target = static_cast<LaneClass>(trial % kClasses);
    const int c = static_cast<int>(target);
    const double delta = forward<double>(w.frames, p).first.logits(c) -
                         forward<double>(ig_baseline(w, cfg.baseline), p).first.logits(c);
    if (completeness_gap(w, p, target, cfg) < 0.01 * std::abs(delta)) {
      ++within;
    } else {
      EXPECT_LT(completeness_gap(w, p, target, dense), 0.01 * std::abs(delta))
          << "trial " << trial;
    }
  }
  EXPECT_GE(within, n - n / 20);
}

TEST(IntegratedGradients, SentinelPathConvergesQuadratically) {
  // The sentinel baseline sits ~100 m away; unfitted random scalers make the
  // path steep, but the midpoint rule still converges at O(1 / m^2).
  std::mt19937_64 rng(5);
  IgConfig coarse, fine;
  coarse.steps = 500;
  fine.steps = 5000;
  for (int trial = 0; trial < 20; ++trial) {
    const LnLstmParamsd p = testing::random_params(16, rng);
    const ObservationWindow w = testing::random_window(rng);
    const auto target = static_cast<LaneClass>(trial % kClasses);
    const int c = static_cast<int>(target);
    const double delta = forward<double>(w.frames, p).first.logits(c) -
                         forward<double>(ig_baseline(w, fine.baseline), p).first.logits(c);
    const double g_coarse = completeness_gap(w, p, target, coarse);
    const double g_fine = completeness_gap(w, p, target, fine);
    EXPECT_LT(g_fine, 0.01 * std::abs(delta)) << "trial " << trial;
    EXPECT_LT(g_fine, 0.05 * g_coarse + 1e-12) << "trial " << trial;
  }
}

TEST(IntegratedGradients, DoublingStepsRarelyIncreasesGap) {
  std::mt19937_64 rng(5);
  int non_increasing = 0;
  const int n = 40;
  for (int trial = 0; trial < n; ++trial) {
    const LnLstmParamsd p = testing::random_params(12, rng);
    const ObservationWindow w = testing::random_window(rng);
    IgConfig cfg;
    cfg.baseline = IgBaseline::kZeroWindow;
    cfg.steps = 50;
    const double g1 = completeness_gap(w, p, LaneClass::kLeft, cfg);
    cfg.steps = 100;
    const double g2 = completeness_gap(w, p, LaneClass::kLeft, cfg);
    if (g2 <= g1) ++non_increasing;
  }
  EXPECT_GE(non_increasing, (9 * n) / 10);
}

TEST(IntegratedGradients, BaselineNames) {
  EXPECT_EQ(ig_baseline_from_string("sentinel"), IgBaseline::kSentinelWindow);
  EXPECT_EQ(ig_baseline_from_string("zero"), IgBaseline::kZeroWindow);
  EXPECT_THROW(ig_baseline_from_string("mean"), ValidationError);
}

}  // namespace
}  // namespace xlane
