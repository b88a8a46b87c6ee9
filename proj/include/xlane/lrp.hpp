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

// Layer-wise relevance propagation through a traced lnLSTM.
//
// Rules:
//   epsilon     linear maps (W, U, dense head); bias and stabilizer residue
//               are sinks.
//   copy        fan-out points (h_k, c_k) sum their incoming relevances.
//   gate        gated products s * g send everything to the signal s; the
//               gate gets nothing. tanh on the signal path is transparent.
//   accumulate  sums split proportionally to each signed addend.
//   omega       layer normalization, explicitly accounting for the mean shift
//               of each input; sigma is held constant and the LN bias is a
//               sink.
//   identity    layer normalization passed through unchanged (baseline).
//
// Every rule application books (relevance in) - (relevance out) to a named
// site in the SinkLedger, so input relevance + sinks == f_c(x) holds as an
// identity of the bookkeeping.

#pragma once

#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlane/core.hpp"
#include "xlane/layer_norm.hpp"
#include "xlane/model.hpp"

namespace xlane {

enum class LnRule { kOmega, kIdentity };
enum class OmegaVariant { kLiteral, kFullDecomposition };

std::string_view to_string(LnRule r);
LnRule ln_rule_from_string(std::string_view s);
std::string_view to_string(OmegaVariant v);
OmegaVariant omega_variant_from_string(std::string_view s);

struct LrpConfig {
  double epsilon = 1e-3;
  LnRule ln_rule = LnRule::kOmega;
  OmegaVariant omega_variant = OmegaVariant::kLiteral;
};

/// Relevance absorbed along the backward pass, keyed by site name
/// ("head", "t3.ln_cell", "t1.w_in", "initial_state", ...).
template <typename Scalar>
struct BasicSinkLedger {
  Scalar total_in = Scalar(0);   // relevance injected at the head, f_c(x)
  Scalar total_out = Scalar(0);  // relevance reaching the input
  std::map<std::string, Scalar> sinks;
  /// Relevance received by every gate activation (always zero under the
  /// gate rule; recorded so it can be audited).
  std::map<std::string, Scalar> gate_relevance;

  void book(const std::string& site, Scalar value) { sinks[site] += value; }
  Scalar sink_total() const {
    Scalar s = Scalar(0);
    for (const auto& [site, v] : sinks) s += v;
    return s;
  }
};

using SinkLedger = BasicSinkLedger<double>;

namespace internal {

template <typename Scalar>
Vector<Scalar> stabilized_ratio(const Vector<Scalar>& r, const Vector<Scalar>& z,
                                Scalar epsilon, const char* rule) {
  Vector<Scalar> out(r.size());
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    const Scalar denom = z(j) + epsilon * stabilizer_sign(z(j));
    if (denom == Scalar(0)) {
      throw DivisionHazardError(std::string(rule) +
                                ": zero pre-activation with epsilon = 0 at unit " +
                                std::to_string(j));
    }
    out(j) = r(j) / denom;
  }
  return out;
}

}  // namespace internal

/// Epsilon rule through z = W x (+ bias):
///   R_in_i = sum_j w_ji x_i R_j / (z_j + eps sign(z_j)).
/// `z` must include any bias; bias share and stabilizer residue go to `sink`.
template <typename Scalar>
Vector<Scalar> lrp_epsilon(const Vector<Scalar>& r_out,
                           const Matrix<Scalar>& weights,
                           const Vector<Scalar>& inputs,
                           const Vector<Scalar>& z, Scalar epsilon,
                           Scalar* sink = nullptr) {
  if (weights.rows() != r_out.size() || weights.cols() != inputs.size() ||
      z.size() != r_out.size()) {
    throw ShapeError("lrp_epsilon: inconsistent shapes");
  }
  const Vector<Scalar> s =
      internal::stabilized_ratio<Scalar>(r_out, z, epsilon, "lrp_epsilon");
  Vector<Scalar> r_in =
      (inputs.array() * (weights.transpose() * s).array()).matrix();
  if (sink != nullptr) *sink += r_out.sum() - r_in.sum();
  return r_in;
}

/// Copy rule: a source feeding several consumers receives the sum.
template <typename Scalar>
Vector<Scalar> lrp_copy(std::span<const Vector<Scalar>> r_outs) {
  if (r_outs.empty()) throw ShapeError("lrp_copy: no incoming relevance");
  Vector<Scalar> sum = r_outs.front();
  for (std::size_t k = 1; k < r_outs.size(); ++k) {
    if (r_outs[k].size() != sum.size()) throw ShapeError("lrp_copy: width mismatch");
    sum += r_outs[k];
  }
  return sum;
}

/// Gate rule for s * g: (R_source, R_gate) = (R_out, 0), independent of the
/// traced values.
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> lrp_gate(
    const Vector<Scalar>& r_out, const Vector<Scalar>& source_values,
    const Vector<Scalar>& gate_values) {
  if (source_values.size() != r_out.size() || gate_values.size() != r_out.size()) {
    throw ShapeError("lrp_gate: width mismatch");
  }
  return {r_out, Vector<Scalar>::Zero(r_out.size())};
}

/// Accumulation rule for z = sum_m a_m (elementwise):
///   R_m = a_m R / (z + eps sign(z)).
template <typename Scalar>
std::vector<Vector<Scalar>> lrp_accumulate(
    const Vector<Scalar>& r_out, std::span<const Vector<Scalar>> addends,
    Scalar epsilon, Scalar* sink = nullptr) {
  if (addends.empty()) throw ShapeError("lrp_accumulate: no addends");
  Vector<Scalar> z = Vector<Scalar>::Zero(r_out.size());
  for (const auto& a : addends) {
    if (a.size() != r_out.size()) throw ShapeError("lrp_accumulate: width mismatch");
    z += a;
  }
  const Vector<Scalar> s =
      internal::stabilized_ratio<Scalar>(r_out, z, epsilon, "lrp_accumulate");
  std::vector<Vector<Scalar>> out;
  out.reserve(addends.size());
  Scalar distributed = Scalar(0);
  for (const auto& a : addends) {
    out.push_back((a.array() * s.array()).matrix());
    distributed += out.back().sum();
  }
  if (sink != nullptr) *sink += r_out.sum() - distributed;
  return out;
}

/// Omega rule through y = LN(a). `upper_z` holds the LN outputs (the values
/// entering the following nonlinearity).
///
/// literal:             R_i = (a_i - a_i/H) (g_i/sigma) sum_j R_j / z_j
/// full-decomposition:  R_i = sum_j c_ij R_j / z_j with
///                      c_ii = (a_i - a_i/H) g_i/sigma,
///                      c_ij = -(a_i/H) g_j/sigma  (i != j)
/// Denominators carry the signed epsilon stabilizer.
template <typename Scalar>
Vector<Scalar> lrp_omega(const Vector<Scalar>& r_out, const Vector<Scalar>& a,
                         const LayerNormParams<Scalar>& p,
                         const LayerNormStats<Scalar>& stats,
                         const Vector<Scalar>& upper_z, Scalar epsilon,
                         OmegaVariant variant, Scalar* sink = nullptr) {
  const Eigen::Index h = a.size();
  if (r_out.size() != h || upper_z.size() != h || p.width() != h) {
    throw ShapeError("lrp_omega: width mismatch");
  }
  if (!p.enabled) return r_out;
  const Vector<Scalar> s =
      internal::stabilized_ratio<Scalar>(r_out, upper_z, epsilon, "lrp_omega");
  const Scalar hs = static_cast<Scalar>(h);
  Vector<Scalar> r_in(h);
  if (variant == OmegaVariant::kLiteral) {
    const Scalar total = s.sum();
    r_in = ((a.array() - a.array() / hs) * p.gain.array() / stats.std * total)
               .matrix();
  } else {
    const Vector<Scalar> gs = (p.gain.array() * s.array()).matrix();
    const Scalar mean_flow = gs.sum();
    r_in = (a.array() * gs.array() / stats.std -
            (a.array() / hs) * mean_flow / stats.std)
               .matrix();
  }
  if (sink != nullptr) *sink += r_out.sum() - r_in.sum();
  return r_in;
}

/// Identity rule through layer normalization.
template <typename Scalar>
Vector<Scalar> lrp_identity_ln(const Vector<Scalar>& r_out) {
  return r_out;
}

template <typename Scalar>
struct Explanation {
  WindowMatrix<Scalar> relevance = WindowMatrix<Scalar>::Zero();
  BasicSinkLedger<Scalar> ledger;
};

namespace internal {

template <typename Scalar>
Vector<Scalar> lrp_ln_site(const Vector<Scalar>& r_out, const Vector<Scalar>& a,
                           const LayerNormParams<Scalar>& p,
                           const LayerNormStats<Scalar>& stats,
                           const Vector<Scalar>& upper_z,
                           const LrpConfig& cfg, BasicSinkLedger<Scalar>& ledger,
                           const std::string& site) {
  if (cfg.ln_rule == LnRule::kIdentity || !p.enabled) {
    ledger.book(site, Scalar(0));
    return lrp_identity_ln<Scalar>(r_out);
  }
  Scalar sink = Scalar(0);
  Vector<Scalar> r = lrp_omega<Scalar>(r_out, a, p, stats, upper_z,
                                       static_cast<Scalar>(cfg.epsilon),
                                       cfg.omega_variant, &sink);
  ledger.book(site, sink);
  return r;
}

}  // namespace internal

/// Backward relevance pass for `target`, starting from its pre-softmax logit.
template <typename Scalar>
Explanation<Scalar> explain(const ActivationTrace<Scalar>& trace,
                            const LnLstmParams<Scalar>& p, LaneClass target,
                            const LrpConfig& cfg) {
  const Eigen::Index hw = p.hidden;
  for (const auto& st : trace.steps) {
    if (st.h.size() != hw || st.a_in.size() != 4 * hw) {
      throw ValidationError("explain: trace does not match parameter shapes");
    }
  }
  if (cfg.epsilon < 0.0) throw ValidationError("explain: epsilon < 0");
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  const int c = static_cast<int>(target);

  Explanation<Scalar> out;
  BasicSinkLedger<Scalar>& ledger = out.ledger;
  const Scalar f_c = trace.logits(c);
  ledger.total_in = f_c;

  // Dense head: only the explained logit carries relevance.
  Vector<Scalar> r_h;
  {
    Vector<Scalar> r_logit(1);
    r_logit(0) = f_c;
    Vector<Scalar> z(1);
    z(0) = f_c;
    const Matrix<Scalar> row = p.head_w.row(c);
    Scalar sink = Scalar(0);
    r_h = lrp_epsilon<Scalar>(r_logit, row, trace.steps[kFrames - 1].h, z, eps,
                              &sink);
    ledger.book("head", sink);
  }
  Vector<Scalar> r_c = Vector<Scalar>::Zero(hw);

  for (int k = kFrames - 1; k >= 0; --k) {
    const StepTrace<Scalar>& t = trace.steps[k];
    const std::string tag = "t" + std::to_string(k + 1) + ".";

    // h = o * tanh(n)
    auto [r_n, r_o] = lrp_gate<Scalar>(r_h, t.tanh_n, t.o);
    ledger.gate_relevance[tag + "gate_o"] += r_o.sum();

    const Vector<Scalar> r_c_from_h = internal::lrp_ln_site<Scalar>(
        r_n, t.c, p.ln_cell, t.ln_cell_stats, t.n, cfg, ledger,
        tag + "ln_cell");
    const std::array<Vector<Scalar>, 2> fan_in = {r_c, r_c_from_h};
    const Vector<Scalar> r_c_total = lrp_copy<Scalar>(fan_in);

    // c = f * c_prev + i * g
    const std::array<Vector<Scalar>, 2> cell_addends = {
        (t.f.array() * t.c_prev.array()).matrix(),
        (t.i.array() * t.g.array()).matrix()};
    Scalar cell_sink = Scalar(0);
    const auto r_cell =
        lrp_accumulate<Scalar>(r_c_total, cell_addends, eps, &cell_sink);
    ledger.book(tag + "cell_acc", cell_sink);
    auto [r_c_prev, r_f] = lrp_gate<Scalar>(r_cell[0], t.c_prev, t.f);
    auto [r_g, r_i] = lrp_gate<Scalar>(r_cell[1], t.g, t.i);
    ledger.gate_relevance[tag + "gate_f"] += r_f.sum();
    ledger.gate_relevance[tag + "gate_i"] += r_i.sum();

    // Candidate pre-activation = y_in + y_rec + bias (g block). Gate blocks
    // i, f, o of the pre-activation carry no relevance.
    const Eigen::Index g0 = kCandidate * hw;
    const std::array<Vector<Scalar>, 3> pre_addends = {
        t.y_in.segment(g0, hw), t.y_rec.segment(g0, hw),
        p.gate_bias.segment(g0, hw)};
    Scalar pre_sink = Scalar(0);
    const auto r_pre = lrp_accumulate<Scalar>(r_g, pre_addends, eps, &pre_sink);
    ledger.book(tag + "pre_acc",
                pre_sink + r_pre[2].sum());

    Vector<Scalar> r_y_in = Vector<Scalar>::Zero(4 * hw);
    r_y_in.segment(g0, hw) = r_pre[0];
    Vector<Scalar> r_y_rec = Vector<Scalar>::Zero(4 * hw);
    r_y_rec.segment(g0, hw) = r_pre[1];

    const Vector<Scalar> r_a_in = internal::lrp_ln_site<Scalar>(
        r_y_in, t.a_in, p.ln_in, t.ln_in_stats, t.y_in, cfg, ledger,
        tag + "ln_in");
    Scalar w_sink = Scalar(0);
    const Vector<Scalar> x = t.x;
    const Vector<Scalar> r_x =
        lrp_epsilon<Scalar>(r_a_in, p.w_in, x, t.a_in, eps, &w_sink);
    ledger.book(tag + "w_in", w_sink);
    out.relevance.row(k) = r_x.transpose();

    if (k == 0) {
      // The recurrent path of the first step only carries the zero initial
      // state: whatever reaches it is absorbed there.
      ledger.book("initial_state",
                  r_y_rec.sum() + r_c_prev.sum());
      break;
    }
    const Vector<Scalar> r_a_rec = internal::lrp_ln_site<Scalar>(
        r_y_rec, t.a_rec, p.ln_rec, t.ln_rec_stats, t.y_rec, cfg, ledger,
        tag + "ln_rec");
    Scalar u_sink = Scalar(0);
    r_h = lrp_epsilon<Scalar>(r_a_rec, p.w_rec, t.h_prev, t.a_rec, eps, &u_sink);
    ledger.book(tag + "w_rec", u_sink);
    r_c = r_c_prev;
  }
  ledger.total_out = out.relevance.sum();
  return out;
}

/// Forward then explain. `target` defaults to the predicted class.
Explanation<double> explain_window(const ObservationWindow& w,
                                   const LnLstmParamsd& p,
                                   std::optional<LaneClass> target,
                                   const LrpConfig& cfg);

}  // namespace xlane
