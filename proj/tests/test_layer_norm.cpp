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
#include "xlane/layer_norm.hpp"

namespace xlane {
namespace {

TEST(LayerNorm, TwoPointSymmetry) {
  auto p = LayerNormParams<double>::identity(2);
  p.var_eps = 0.0;
  Eigen::Vector2d a(1.0, 3.0);
  const auto r = layer_norm_forward(a, p);
  EXPECT_NEAR(r.y(0), -1.0, 1e-12);
  EXPECT_NEAR(r.y(1), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.stats.mean, 2.0);
  EXPECT_DOUBLE_EQ(r.stats.std, 1.0);
}

TEST(LayerNorm, ConstantInputYieldsBias) {
  auto p = LayerNormParams<double>::identity(5);
  p.bias << 0.1, -0.2, 0.3, 0.0, 1.0;
  Vector<double> a = Vector<double>::Constant(5, 7.0);
  const auto r = layer_norm_forward(a, p);
  EXPECT_NEAR(r.stats.std, std::sqrt(p.var_eps), 1e-15);
  EXPECT_TRUE(r.y.isApprox(p.bias, 1e-12));
}

TEST(LayerNorm, OutputStatistics) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = LayerNormParams<double>::identity(32);
    testing::fill(p.gain, rng, 0.5, 2.0);
    testing::fill(p.bias, rng, -1.0, 1.0);
    Vector<double> a(32);
    testing::fill(a, rng, -5.0, 5.0);
    const auto r = layer_norm_forward(a, p);
    const Vector<double> n = ((r.y - p.bias).array() / p.gain.array()).matrix();
    const double mean = n.mean();
    const double sd = std::sqrt((n.array() - mean).square().mean());
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(sd, 1.0, 1e-3);
  }
}

TEST(LayerNorm, DisabledPassesThrough) {
  auto p = LayerNormParams<double>::identity(4);
  p.enabled = false;
  Vector<double> a(4);
  a << 1.0, -2.0, 3.5, 0.25;
  EXPECT_EQ(layer_norm_forward(a, p).y, a);
}

TEST(LayerNorm, WidthMismatchThrows) {
  auto p = LayerNormParams<double>::identity(4);
  Vector<double> a(3);
  a.setOnes();
  EXPECT_THROW(layer_norm_forward(a, p), ShapeError);
}

TEST(LayerNorm, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const int h = 9;
  auto p = LayerNormParams<double>::identity(h);
  testing::fill(p.gain, rng, 0.5, 1.5);
  testing::fill(p.bias, rng, -0.5, 0.5);
  Vector<double> a(h), dy(h);
  testing::fill(a, rng, -2.0, 2.0);
  testing::fill(dy, rng, -1.0, 1.0);
  const auto r = layer_norm_forward(a, p);
  const Vector<double> da = layer_norm_backward<double>(dy, a, p, r.stats);
  const double step = 1e-6;
  for (int i = 0; i < h; ++i) {
    Vector<double> ap = a, am = a;
    ap(i) += step;
    am(i) -= step;
    const double fd = (dy.dot(layer_norm_forward(ap, p).y) -
                       dy.dot(layer_norm_forward(am, p).y)) /
                      (2.0 * step);
    EXPECT_NEAR(da(i), fd, 1e-7 * std::max(1.0, std::abs(fd)));
  }
}

}  // namespace
}  // namespace xlane
