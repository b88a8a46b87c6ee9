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

#include <array>
#include <random>

#include "test_support.hpp"
#include "xlane/lrp.hpp"

namespace xlane {
namespace {

using Vec = Vector<double>;

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(EpsilonRule, SinglePathConserves) {
  Matrix<double> w(1, 1);
  w << 2.0;
  const Vec r = lrp_epsilon<double>(vec({6.0}), w, vec({3.0}), vec({6.0}), 0.0);
  EXPECT_DOUBLE_EQ(r(0), 6.0);
}

TEST(EpsilonRule, ProportionalSplit) {
  Matrix<double> w(1, 2);
  w << 1.0, 1.0;
  const Vec r = lrp_epsilon<double>(vec({4.0}), w, vec({1.0, 3.0}), vec({4.0}), 0.0);
  EXPECT_DOUBLE_EQ(r(0), 1.0);
  EXPECT_DOUBLE_EQ(r(1), 3.0);
}

TEST(EpsilonRule, RandomLayerConservesWithoutBias) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix<double> w(12, 20);
    Vec x(20), r_out(12);
    testing::fill(w, rng, -1.0, 1.0);
    testing::fill(x, rng, -1.0, 1.0);
    testing::fill(r_out, rng, -1.0, 1.0);
    const Vec z = w * x;
    double sink = 0.0;
    const Vec r_in = lrp_epsilon<double>(r_out, w, x, z, 0.0, &sink);
    EXPECT_NEAR(r_in.sum(), r_out.sum(), 1e-9);
    EXPECT_NEAR(sink, 0.0, 1e-9);
  }
}

TEST(EpsilonRule, ZeroDenominatorIsAHazard) {
  Matrix<double> w(1, 2);
  w << 1.0, -1.0;
  EXPECT_THROW(lrp_epsilon<double>(vec({1.0}), w, vec({2.0, 2.0}), vec({0.0}), 0.0),
               DivisionHazardError);
  EXPECT_NO_THROW(lrp_epsilon<double>(vec({1.0}), w, vec({2.0, 2.0}), vec({0.0}), 1e-3));
}

TEST(EpsilonRule, ShapeMismatchThrows) {
  Matrix<double> w(2, 2);
  w.setOnes();
  EXPECT_THROW(lrp_epsilon<double>(vec({1.0}), w, vec({1.0, 1.0}), vec({1.0}), 0.0),
               ShapeError);
}

TEST(CopyRule, SumsConsumers) {
  const std::array<Vec, 2> two = {vec({1.0, 2.0}), vec({3.0, 4.0})};
  const Vec r = lrp_copy<double>(two);
  EXPECT_EQ(r, vec({4.0, 6.0}));
  const std::array<Vec, 1> one = {vec({0.5, -1.5})};
  EXPECT_EQ(lrp_copy<double>(one), one[0]);
  std::vector<Vec> split(5, vec({0.25, 0.5}));
  EXPECT_TRUE(lrp_copy<double>(split).isApprox(vec({1.25, 2.5}), 1e-15));
}

TEST(GateRule, SourceTakesEverything) {
  const auto [src, gate] = lrp_gate<double>(vec({2.5}), vec({0.3}), vec({0.7}));
  EXPECT_EQ(src(0), 2.5);
  EXPECT_EQ(gate(0), 0.0);
  const auto [src0, gate0] = lrp_gate<double>(vec({2.5}), vec({0.3}), vec({0.0}));
  EXPECT_EQ(src0(0), 2.5);
  EXPECT_EQ(gate0(0), 0.0);
}

TEST(AccumulationRule, HandExamples) {
  {
    const std::array<Vec, 2> add = {vec({1.0}), vec({3.0})};
    const auto r = lrp_accumulate<double>(vec({4.0}), add, 0.0);
    EXPECT_DOUBLE_EQ(r[0](0), 1.0);
    EXPECT_DOUBLE_EQ(r[1](0), 3.0);
  }
  {
    const std::array<Vec, 2> add = {vec({0.7}), vec({0.0})};
    const auto r = lrp_accumulate<double>(vec({5.0}), add, 0.0);
    EXPECT_DOUBLE_EQ(r[0](0), 5.0);
    EXPECT_EQ(r[1](0), 0.0);
  }
  {
    const std::array<Vec, 2> add = {vec({-1.0}), vec({3.0})};
    const auto r = lrp_accumulate<double>(vec({4.0}), add, 1e-3);
    // Direct evaluation: a_m * R / (z + eps) with z = 2.
    EXPECT_NEAR(r[0](0), -1.0 * 4.0 / 2.001, 1e-15);
    EXPECT_NEAR(r[1](0), 3.0 * 4.0 / 2.001, 1e-15);
    EXPECT_NEAR(r[0](0), -2.0, 2e-3);
    EXPECT_NEAR(r[1](0), 6.0, 6e-3);
  }
}

TEST(AccumulationRule, ConservesAtZeroEpsilon) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<Vec, 3> add;
    for (auto& a : add) {
      a.resize(16);
      testing::fill(a, rng, -1.0, 1.0);
    }
    Vec r(16);
    testing::fill(r, rng, -1.0, 1.0);
    const auto out = lrp_accumulate<double>(r, add, 0.0);
    EXPECT_NEAR(out[0].sum() + out[1].sum() + out[2].sum(), r.sum(), 1e-9);
  }
}

TEST(AccumulationRule, ZeroSumIsAHazard) {
  const std::array<Vec, 2> add = {vec({1.0}), vec({-1.0})};
  EXPECT_THROW(lrp_accumulate<double>(vec({1.0}), add, 0.0), DivisionHazardError);
}

LayerNormStats<double> unit_stats(double mean) {
  LayerNormStats<double> s;
  s.mean = mean;
  s.std = 1.0;
  return s;
}

TEST(OmegaRule, HandExamples) {
  const auto p = LayerNormParams<double>::identity(2);
  const Vec a = vec({1.0, 3.0});
  const Vec z = vec({-1.0, 1.0});
  const Vec r1 = lrp_omega<double>(vec({0.0, 1.0}), a, p, unit_stats(2.0), z, 0.0,
                                   OmegaVariant::kLiteral);
  EXPECT_NEAR(r1(0), 0.5, 1e-12);
  EXPECT_NEAR(r1(1), 1.5, 1e-12);
  const Vec r2 = lrp_omega<double>(vec({1.0, 0.0}), a, p, unit_stats(2.0), z, 0.0,
                                   OmegaVariant::kLiteral);
  EXPECT_NEAR(r2(0), -0.5, 1e-12);
  EXPECT_NEAR(r2(1), -1.5, 1e-12);
}

TEST(OmegaRule, FullDecompositionHandExample) {
  // c_ij = (a_i delta_ij - a_i / H) g_j / sigma, R_in_i = sum_j c_ij R_j / z_j.
  const auto p = LayerNormParams<double>::identity(2);
  const Vec a = vec({1.0, 3.0});
  const Vec z = vec({-1.0, 1.0});
  const Vec r = lrp_omega<double>(vec({0.0, 1.0}), a, p, unit_stats(2.0), z, 0.0,
                                  OmegaVariant::kFullDecomposition);
  EXPECT_NEAR(r(0), -0.5, 1e-12);
  EXPECT_NEAR(r(1), 1.5, 1e-12);
}

TEST(OmegaRule, WidthOneCarriesNothing) {
  const auto p = LayerNormParams<double>::identity(1);
  for (auto variant : {OmegaVariant::kLiteral, OmegaVariant::kFullDecomposition}) {
    double sink = 0.0;
    const Vec r = lrp_omega<double>(vec({3.0}), vec({2.0}), p, unit_stats(2.0),
                                    vec({0.4}), 1e-3, variant, &sink);
    EXPECT_EQ(r(0), 0.0);
    EXPECT_EQ(sink, 3.0);
  }
}

TEST(OmegaRule, ZeroUpperActivationIsAHazard) {
  const auto p = LayerNormParams<double>::identity(2);
  EXPECT_THROW(lrp_omega<double>(vec({1.0, 1.0}), vec({1.0, 3.0}), p, unit_stats(2.0),
                                 vec({0.0, 1.0}), 0.0, OmegaVariant::kLiteral),
               DivisionHazardError);
}

TEST(IdentityRule, PassesThrough) {
  EXPECT_EQ(lrp_identity_ln<double>(vec({1.0, 2.0, 3.0})), vec({1.0, 2.0, 3.0}));
}

TEST(RuleNames, RoundTrip) {
  EXPECT_EQ(ln_rule_from_string(to_string(LnRule::kOmega)), LnRule::kOmega);
  EXPECT_EQ(ln_rule_from_string(to_string(LnRule::kIdentity)), LnRule::kIdentity);
  EXPECT_EQ(omega_variant_from_string("full"), OmegaVariant::kFullDecomposition);
  EXPECT_EQ(omega_variant_from_string(to_string(OmegaVariant::kLiteral)),
            OmegaVariant::kLiteral);
  EXPECT_THROW(ln_rule_from_string("bogus"), ValidationError);
}

std::vector<LrpConfig> all_configs() {
  std::vector<LrpConfig> cfgs;
  for (auto rule : {LnRule::kOmega, LnRule::kIdentity}) {
    for (auto variant : {OmegaVariant::kLiteral, OmegaVariant::kFullDecomposition}) {
      for (double eps : {1e-3, 1e-2}) cfgs.push_back({eps, rule, variant});
    }
  }
  return cfgs;
}

TEST(Explain, GateSitesReceiveExactlyZero) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const LnLstmParamsd p = testing::random_params(8, rng);
    const ObservationWindow w = testing::random_window(rng);
    const auto e = explain_window(w, p, std::nullopt, all_configs()[trial % 8]);
    EXPECT_EQ(e.ledger.gate_relevance.size(), 3u * kFrames);
    for (const auto& [site, v] : e.ledger.gate_relevance) EXPECT_EQ(v, 0.0) << site;
  }
}

TEST(Explain, GlobalIdentityOverManyExplains) {
  std::mt19937_64 rng(4);
  const auto cfgs = all_configs();
  int explains = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const LnLstmParamsd p = testing::random_params(4 + trial % 13, rng);
    const ObservationWindow w = testing::random_window(rng);
    const auto target = static_cast<LaneClass>(trial % kClasses);
    const auto cfg = cfgs[trial % cfgs.size()];
    const auto e = explain_window(w, p, target, cfg);
    EXPECT_DOUBLE_EQ(e.ledger.total_in, forward(w, p).first.logits(static_cast<int>(target)));
    const auto wide = testing::explain_wide(w, p, target, cfg);
    const long double lhs = wide.e.relevance.sum() + wide.e.ledger.sink_total();
    EXPECT_LE(std::abs(lhs - wide.f_c), 1e-6L * std::abs(wide.f_c)) << "trial " << trial;
    ++explains;
  }
  EXPECT_GE(explains, 1000);
}

TEST(Explain, MapHas196Entries) {
  std::mt19937_64 rng(5);
  const auto e = explain_window(testing::random_window(rng), testing::random_params(8, rng),
                                LaneClass::kLeft, {});
  EXPECT_EQ(e.relevance.size(), kRelevanceCount);
  EXPECT_EQ(e.relevance.rows(), kFrames);
  EXPECT_EQ(e.relevance.cols(), kInputDim);
  EXPECT_TRUE(e.relevance.allFinite());
}

TEST(Explain, DefaultTargetIsPrediction) {
  std::mt19937_64 rng(6);
  const LnLstmParamsd p = testing::random_params(8, rng);
  const ObservationWindow w = testing::random_window(rng);
  const auto pred = forward(w, p).first;
  const auto e = explain_window(w, p, std::nullopt, {});
  EXPECT_DOUBLE_EQ(e.ledger.total_in, pred.logits(static_cast<int>(pred.predicted_class)));
}

TEST(Explain, IdentityRuleBooksNothingAtLayerNorm) {
  std::mt19937_64 rng(7);
  const LnLstmParamsd p = testing::random_params(8, rng);
  const ObservationWindow w = testing::random_window(rng);
  LrpConfig id_cfg;
  id_cfg.ln_rule = LnRule::kIdentity;
  const auto id = explain_window(w, p, LaneClass::kKeep, id_cfg);
  const auto om = explain_window(w, p, LaneClass::kKeep, {});
  EXPECT_DOUBLE_EQ(id.ledger.sinks.at("head"), om.ledger.sinks.at("head"));
  bool omega_books = false;
  for (const auto& [site, v] : id.ledger.sinks) {
    if (site.find(".ln_") != std::string::npos) {
      EXPECT_EQ(v, 0.0) << site;
      omega_books = omega_books || om.ledger.sinks.at(site) != 0.0;
    }
  }
  EXPECT_TRUE(omega_books);
}

TEST(Explain, RuleSwapIsLocalToLayerNormSites) {
  std::mt19937_64 rng(8);
  LnLstmParamsd p = testing::random_params(8, rng);
  p.ln_cell.enabled = false;
  p.ln_rec.enabled = false;
  const ObservationWindow w = testing::random_window(rng);
  LrpConfig id_cfg;
  id_cfg.ln_rule = LnRule::kIdentity;
  const auto id = explain_window(w, p, LaneClass::kLeft, id_cfg);
  const auto om = explain_window(w, p, LaneClass::kLeft, {});
  // Sites upstream of the first enabled LN site agree exactly.
  for (const char* site : {"head", "t4.ln_cell", "t4.cell_acc", "t4.pre_acc", "t4.ln_rec"}) {
    EXPECT_EQ(id.ledger.sinks.at(site), om.ledger.sinks.at(site)) << site;
  }
  EXPECT_NE(id.ledger.sinks.at("t4.ln_in"), om.ledger.sinks.at("t4.ln_in"));

  p.ln_in.enabled = false;
  const auto id_off = explain_window(w, p, LaneClass::kLeft, id_cfg);
  const auto om_off = explain_window(w, p, LaneClass::kLeft, {});
  EXPECT_EQ(id_off.relevance, om_off.relevance);
  EXPECT_EQ(id_off.ledger.sinks, om_off.ledger.sinks);
}

TEST(Explain, SentinelSlotWithZeroPathGetsZero) {
  std::mt19937_64 rng(9);
  LnLstmParamsd p = testing::random_params(8, rng);
  ObservationWindow w = testing::random_window(rng);
  for (int f = 0; f < kFeaturesPerVehicle; ++f) {
    const int col = feature_index(kRightRear, f);
    p.w_in.col(col).setZero();
    p.scaler.mean(col) = 0.0;
    w.frames.col(col).setZero();
  }
  for (auto& row : w.mask) row[kRightRear] = false;
  const auto e = explain_window(w, p, LaneClass::kRight, {});
  for (int f = 0; f < kFeaturesPerVehicle; ++f) {
    EXPECT_TRUE((e.relevance.col(feature_index(kRightRear, f)).array() == 0.0).all());
  }
}

TEST(Explain, TraceMismatchRejected) {
  std::mt19937_64 rng(10);
  const LnLstmParamsd p = testing::random_params(8, rng);
  const LnLstmParamsd q = testing::random_params(6, rng);
  const auto trace = forward<double>(testing::random_window(rng).frames, p).second;
  EXPECT_THROW(explain<double>(trace, q, LaneClass::kLeft, {}), ValidationError);
}

TEST(Explain, SinglePrecisionInstantiation) {
  std::mt19937_64 rng(11);
  const LnLstmParamsd p = testing::random_params(8, rng);
  const ObservationWindow w = testing::random_window(rng);
  LnLstmParams<float> pf;
  pf.hidden = p.hidden;
  pf.w_in = p.w_in.cast<float>();
  pf.w_rec = p.w_rec.cast<float>();
  pf.gate_bias = p.gate_bias.cast<float>();
  pf.ln_in = p.ln_in.cast<float>();
  pf.ln_rec = p.ln_rec.cast<float>();
  pf.ln_cell = p.ln_cell.cast<float>();
  pf.head_w = p.head_w.cast<float>();
  pf.head_b = p.head_b.cast<float>();
  pf.scaler.mean = p.scaler.mean.cast<float>();
  pf.scaler.inv_scale = p.scaler.inv_scale.cast<float>();
  LrpConfig cfg;
  cfg.ln_rule = LnRule::kIdentity;
  const auto trace = forward<float>(w.frames.cast<float>(), pf).second;
  const auto ef = explain<float>(trace, pf, LaneClass::kLeft, cfg);
  const auto ed = explain_window(w, p, LaneClass::kLeft, cfg);
  EXPECT_TRUE(ef.relevance.cast<double>().isApprox(ed.relevance, 1e-3));
}

}  // namespace
}  // namespace xlane
