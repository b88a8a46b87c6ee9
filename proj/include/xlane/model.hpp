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

// Layer-normalized LSTM lane-change classifier.
//
// One step k takes the 49-wide frame x_k and the previous (h, c):
//
//   pre  = LN_in(W x_k) + LN_rec(U h_{k-1}) + bias      (4H, blocks i f o g)
//   c_k  = sigmoid(pre_f) * c_{k-1} + sigmoid(pre_i) * tanh(pre_g)
//   h_k  = sigmoid(pre_o) * tanh(LN_cell(c_k))
//
// Four steps from zero state, then logits = V h_4 + d. Every intermediate is
// recorded in an ActivationTrace so relevance propagation and gradients can
// run against the exact forward values.

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "xlane/core.hpp"
#include "xlane/layer_norm.hpp"
#include "xlane/window.hpp"

namespace xlane {

enum GateBlock : int { kInputGate = 0, kForgetGate, kOutputGate, kCandidate };

/// Per-feature standardization folded into the model input:
/// x_std = (x_raw - mean) * inv_scale, applied to every frame.
template <typename Scalar>
struct InputScaler {
  InputVector<Scalar> mean = InputVector<Scalar>::Zero();
  InputVector<Scalar> inv_scale = InputVector<Scalar>::Ones();
};

template <typename Scalar>
struct LnLstmParams {
  int hidden = 0;
  Matrix<Scalar> w_in;       // 4H x 49
  Matrix<Scalar> w_rec;      // 4H x H
  Vector<Scalar> gate_bias;  // 4H
  LayerNormParams<Scalar> ln_in;    // width 4H
  LayerNormParams<Scalar> ln_rec;   // width 4H
  LayerNormParams<Scalar> ln_cell;  // width H
  Matrix<Scalar> head_w;            // 3 x H
  ClassVector<Scalar> head_b = ClassVector<Scalar>::Zero();
  InputScaler<Scalar> scaler;

  /// All weights and biases zero, unit LN gains, identity scaler.
  static LnLstmParams zeros(int hidden) {
    LnLstmParams p;
    p.hidden = hidden;
    p.w_in = Matrix<Scalar>::Zero(4 * hidden, kInputDim);
    p.w_rec = Matrix<Scalar>::Zero(4 * hidden, hidden);
    p.gate_bias = Vector<Scalar>::Zero(4 * hidden);
    p.ln_in = LayerNormParams<Scalar>::identity(4 * hidden);
    p.ln_rec = LayerNormParams<Scalar>::identity(4 * hidden);
    p.ln_cell = LayerNormParams<Scalar>::identity(hidden);
    p.head_w = Matrix<Scalar>::Zero(kClasses, hidden);
    return p;
  }

  void validate() const {
    const Eigen::Index h = hidden;
    if (hidden < 1) throw ShapeError("LnLstmParams: hidden width < 1");
    auto expect = [](bool ok, const char* what) {
      if (!ok) throw ShapeError(std::string("LnLstmParams: bad shape of ") + what);
    };
    expect(w_in.rows() == 4 * h && w_in.cols() == kInputDim, "w_in");
    expect(w_rec.rows() == 4 * h && w_rec.cols() == h, "w_rec");
    expect(gate_bias.size() == 4 * h, "gate_bias");
    expect(ln_in.width() == 4 * h && ln_in.bias.size() == 4 * h, "ln_in");
    expect(ln_rec.width() == 4 * h && ln_rec.bias.size() == 4 * h, "ln_rec");
    expect(ln_cell.width() == h && ln_cell.bias.size() == h, "ln_cell");
    expect(head_w.rows() == kClasses && head_w.cols() == h, "head_w");
    const bool finite = w_in.allFinite() && w_rec.allFinite() &&
                        gate_bias.allFinite() && head_w.allFinite() &&
                        head_b.allFinite() && ln_in.gain.allFinite() &&
                        ln_in.bias.allFinite() && ln_rec.gain.allFinite() &&
                        ln_rec.bias.allFinite() && ln_cell.gain.allFinite() &&
                        ln_cell.bias.allFinite() && scaler.mean.allFinite() &&
                        scaler.inv_scale.allFinite();
    if (!finite) throw ValidationError("LnLstmParams: non-finite parameter");
  }

  template <typename Other>
  LnLstmParams<Other> cast() const {
    LnLstmParams<Other> out;
    out.hidden = hidden;
    out.w_in = w_in.template cast<Other>();
    out.w_rec = w_rec.template cast<Other>();
    out.gate_bias = gate_bias.template cast<Other>();
    out.ln_in = ln_in.template cast<Other>();
    out.ln_rec = ln_rec.template cast<Other>();
    out.ln_cell = ln_cell.template cast<Other>();
    out.head_w = head_w.template cast<Other>();
    out.head_b = head_b.template cast<Other>();
    out.scaler.mean = scaler.mean.template cast<Other>();
    out.scaler.inv_scale = scaler.inv_scale.template cast<Other>();
    return out;
  }

  /// Zero-valued container of the same shape (used for gradients).
  LnLstmParams zeros_like() const {
    LnLstmParams g = zeros(hidden);
    g.ln_in.gain.setZero();
    g.ln_rec.gain.setZero();
    g.ln_cell.gain.setZero();
    g.scaler.inv_scale.setZero();
    return g;
  }
};

using LnLstmParamsd = LnLstmParams<double>;

template <typename Scalar>
struct StepTrace {
  InputVector<Scalar> x;  // standardized frame
  Vector<Scalar> h_prev, c_prev;
  Vector<Scalar> a_in;  // W x
  LayerNormStats<Scalar> ln_in_stats;
  Vector<Scalar> y_in;
  Vector<Scalar> a_rec;  // U h_prev
  LayerNormStats<Scalar> ln_rec_stats;
  Vector<Scalar> y_rec;
  Vector<Scalar> pre;  // y_in + y_rec + bias
  Vector<Scalar> i, f, o, g;
  Vector<Scalar> c;
  LayerNormStats<Scalar> ln_cell_stats;
  Vector<Scalar> n;  // LN_cell(c)
  Vector<Scalar> tanh_n;
  Vector<Scalar> h;
};

template <typename Scalar>
struct ActivationTrace {
  WindowMatrix<Scalar> raw_input;
  std::array<StepTrace<Scalar>, kFrames> steps;
  ClassVector<Scalar> logits;
};

template <typename Scalar>
struct PredictionOutput {
  ClassVector<Scalar> logits;
  ClassVector<Scalar> probabilities;
  LaneClass predicted_class = LaneClass::kKeep;
  double horizon_s = kPredictionHorizon;
};

namespace internal {

template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& v, int step,
                  const char* site) {
  if (!v.allFinite()) {
    std::string name = "step " + std::to_string(step + 1) + "/" + site;
    throw NumericError(name, "non-finite value at " + name);
  }
}

template <typename Scalar>
Vector<Scalar> sigmoid(const Vector<Scalar>& v) {
  return (Scalar(1) / (Scalar(1) + (-v.array()).exp())).matrix();
}

}  // namespace internal

template <typename Scalar>
ClassVector<Scalar> softmax(const ClassVector<Scalar>& logits) {
  const Scalar m = logits.maxCoeff();
  ClassVector<Scalar> e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

/// One lnLSTM step. `x_std` is the standardized 49-wide frame.
template <typename Scalar>
StepTrace<Scalar> lstm_step(const InputVector<Scalar>& x_std,
                            const Vector<Scalar>& h_prev,
                            const Vector<Scalar>& c_prev,
                            const LnLstmParams<Scalar>& p, int step = 0) {
  const Eigen::Index h = p.hidden;
  if (h_prev.size() != h || c_prev.size() != h) {
    throw ShapeError("lstm_step: state width does not match hidden width");
  }
  StepTrace<Scalar> t;
  t.x = x_std;
  t.h_prev = h_prev;
  t.c_prev = c_prev;
  t.a_in = p.w_in * x_std;
  auto ln_in = layer_norm_forward(t.a_in, p.ln_in);
  t.y_in = std::move(ln_in.y);
  t.ln_in_stats = ln_in.stats;
  internal::check_finite(t.y_in, step, "ln_in");
  t.a_rec = p.w_rec * h_prev;
  auto ln_rec = layer_norm_forward(t.a_rec, p.ln_rec);
  t.y_rec = std::move(ln_rec.y);
  t.ln_rec_stats = ln_rec.stats;
  internal::check_finite(t.y_rec, step, "ln_rec");
  t.pre = t.y_in + t.y_rec + p.gate_bias;
  t.i = internal::sigmoid<Scalar>(t.pre.segment(kInputGate * h, h));
  t.f = internal::sigmoid<Scalar>(t.pre.segment(kForgetGate * h, h));
  t.o = internal::sigmoid<Scalar>(t.pre.segment(kOutputGate * h, h));
  t.g = t.pre.segment(kCandidate * h, h).array().tanh().matrix();
  t.c = (t.f.array() * c_prev.array() + t.i.array() * t.g.array()).matrix();
  internal::check_finite(t.c, step, "cell");
  auto ln_cell = layer_norm_forward(t.c, p.ln_cell);
  t.n = std::move(ln_cell.y);
  t.ln_cell_stats = ln_cell.stats;
  internal::check_finite(t.n, step, "ln_cell");
  t.tanh_n = t.n.array().tanh().matrix();
  t.h = (t.o.array() * t.tanh_n.array()).matrix();
  internal::check_finite(t.h, step, "hidden");
  return t;
}

template <typename Scalar>
InputVector<Scalar> standardize(const InputVector<Scalar>& raw,
                                const InputScaler<Scalar>& s) {
  return ((raw - s.mean).array() * s.inv_scale.array()).matrix();
}

/// Full forward pass over a 4x49 raw input.
template <typename Scalar>
std::pair<PredictionOutput<Scalar>, ActivationTrace<Scalar>> forward(
    const WindowMatrix<Scalar>& raw, const LnLstmParams<Scalar>& p) {
  ActivationTrace<Scalar> trace;
  trace.raw_input = raw;
  Vector<Scalar> h = Vector<Scalar>::Zero(p.hidden);
  Vector<Scalar> c = Vector<Scalar>::Zero(p.hidden);
  for (int k = 0; k < kFrames; ++k) {
    const InputVector<Scalar> x = standardize<Scalar>(raw.row(k).transpose(), p.scaler);
    trace.steps[k] = lstm_step<Scalar>(x, h, c, p, k);
    h = trace.steps[k].h;
    c = trace.steps[k].c;
  }
  trace.logits = p.head_w * h + p.head_b;
  if (!trace.logits.allFinite()) throw NumericError("head", "non-finite logits");
  PredictionOutput<Scalar> out;
  out.logits = trace.logits;
  out.probabilities = softmax<Scalar>(trace.logits);
  Eigen::Index best = 0;
  out.logits.maxCoeff(&best);
  out.predicted_class = static_cast<LaneClass>(best);
  return {out, std::move(trace)};
}

inline std::pair<PredictionOutput<double>, ActivationTrace<double>> forward(
    const ObservationWindow& w, const LnLstmParamsd& p) {
  validate_window(w);
  return forward<double>(w.frames, p);
}

template <typename Scalar>
struct Gradients {
  LnLstmParams<Scalar> params;   // empty (hidden = 0) unless requested
  WindowMatrix<Scalar> input;    // d/d raw input
};

/// Reverse-mode pass through a recorded trace for an upstream gradient on the
/// logits. Parameter gradients are computed only when `with_params` is set.
template <typename Scalar>
Gradients<Scalar> backward(const ActivationTrace<Scalar>& trace,
                           const LnLstmParams<Scalar>& p,
                           const ClassVector<Scalar>& dlogits,
                           bool with_params) {
  const Eigen::Index hw = p.hidden;
  Gradients<Scalar> grads;
  if (with_params) {
    grads.params = p.zeros_like();
    grads.params.head_w = dlogits * trace.steps[kFrames - 1].h.transpose();
    grads.params.head_b = dlogits;
  }
  Vector<Scalar> dh = p.head_w.transpose() * dlogits;
  Vector<Scalar> dc = Vector<Scalar>::Zero(hw);
  Vector<Scalar> dpre(4 * hw);
  for (int k = kFrames - 1; k >= 0; --k) {
    const StepTrace<Scalar>& t = trace.steps[k];
    const Vector<Scalar> d_o = (dh.array() * t.tanh_n.array()).matrix();
    const Vector<Scalar> dn =
        (dh.array() * t.o.array() * (Scalar(1) - t.tanh_n.array().square()))
            .matrix();
    dc += layer_norm_backward<Scalar>(
        dn, t.c, p.ln_cell, t.ln_cell_stats,
        with_params ? &grads.params.ln_cell.gain : nullptr,
        with_params ? &grads.params.ln_cell.bias : nullptr);
    dpre.segment(kInputGate * hw, hw) =
        (dc.array() * t.g.array() * t.i.array() * (Scalar(1) - t.i.array()))
            .matrix();
    dpre.segment(kForgetGate * hw, hw) =
        (dc.array() * t.c_prev.array() * t.f.array() *
         (Scalar(1) - t.f.array()))
            .matrix();
    dpre.segment(kOutputGate * hw, hw) =
        (d_o.array() * t.o.array() * (Scalar(1) - t.o.array())).matrix();
    dpre.segment(kCandidate * hw, hw) =
        (dc.array() * t.i.array() * (Scalar(1) - t.g.array().square()))
            .matrix();
    const Vector<Scalar> da_in = layer_norm_backward<Scalar>(
        dpre, t.a_in, p.ln_in, t.ln_in_stats,
        with_params ? &grads.params.ln_in.gain : nullptr,
        with_params ? &grads.params.ln_in.bias : nullptr);
    const Vector<Scalar> da_rec = layer_norm_backward<Scalar>(
        dpre, t.a_rec, p.ln_rec, t.ln_rec_stats,
        with_params ? &grads.params.ln_rec.gain : nullptr,
        with_params ? &grads.params.ln_rec.bias : nullptr);
    const Vector<Scalar> dx = p.w_in.transpose() * da_in;
    grads.input.row(k) =
        (dx.array() * p.scaler.inv_scale.array()).matrix().transpose();
    if (with_params) {
      grads.params.gate_bias += dpre;
      grads.params.w_in.noalias() += da_in * t.x.transpose();
      grads.params.w_rec.noalias() += da_rec * t.h_prev.transpose();
    }
    dh = p.w_rec.transpose() * da_rec;
    dc = (dc.array() * t.f.array()).matrix();
  }
  return grads;
}

/// Gradient of the pre-softmax logit of `target` w.r.t. the raw 4x49 input.
template <typename Scalar>
WindowMatrix<Scalar> input_gradient(const WindowMatrix<Scalar>& raw,
                                    const LnLstmParams<Scalar>& p,
                                    LaneClass target) {
  const auto [out, trace] = forward<Scalar>(raw, p);
  ClassVector<Scalar> d = ClassVector<Scalar>::Zero();
  d(static_cast<int>(target)) = Scalar(1);
  return backward<Scalar>(trace, p, d, false).input;
}

}  // namespace xlane
