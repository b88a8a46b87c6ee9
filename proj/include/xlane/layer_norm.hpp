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

#pragma once

#include <cmath>
#include <string>

#include "xlane/core.hpp"

namespace xlane {

/// Affine layer normalization over a vector of width H:
///   y = gain * (a - mean) / std + bias,  std = sqrt(var(a) + var_eps).
/// The nonlinearity that follows a normalization site is applied by the
/// caller. A disabled site is a pass-through (y = a).
template <typename Scalar>
struct LayerNormParams {
  Vector<Scalar> gain;
  Vector<Scalar> bias;
  Scalar var_eps = Scalar(1e-5);
  bool enabled = true;

  static LayerNormParams identity(Eigen::Index width) {
    LayerNormParams p;
    p.gain = Vector<Scalar>::Ones(width);
    p.bias = Vector<Scalar>::Zero(width);
    return p;
  }

  Eigen::Index width() const { return gain.size(); }

  template <typename Other>
  LayerNormParams<Other> cast() const {
    LayerNormParams<Other> out;
    out.gain = gain.template cast<Other>();
    out.bias = bias.template cast<Other>();
    out.var_eps = static_cast<Other>(var_eps);
    out.enabled = enabled;
    return out;
  }
};

template <typename Scalar>
struct LayerNormStats {
  Scalar mean = Scalar(0);
  Scalar std = Scalar(1);  // includes var_eps
};

template <typename Scalar>
struct LayerNormResult {
  Vector<Scalar> y;
  LayerNormStats<Scalar> stats;
};

template <typename Derived>
LayerNormResult<typename Derived::Scalar> layer_norm_forward(
    const Eigen::MatrixBase<Derived>& a,
    const LayerNormParams<typename Derived::Scalar>& p) {
  using Scalar = typename Derived::Scalar;
  if (a.size() != p.width() || p.bias.size() != p.width()) {
    throw ShapeError("layer_norm_forward: input width " +
                     std::to_string(a.size()) + " != site width " +
                     std::to_string(p.width()));
  }
  LayerNormResult<Scalar> out;
  if (!p.enabled) {
    out.y = a;
    return out;
  }
  const Scalar mean = a.mean();
  const Scalar var = (a.array() - mean).square().mean();
  out.stats.mean = mean;
  out.stats.std = std::sqrt(var + p.var_eps);
  out.y = (p.gain.array() * (a.array() - mean) / out.stats.std +
           p.bias.array())
              .matrix();
  return out;
}

/// Reverse-mode step of layer_norm_forward. Returns dL/da and, when the
/// pointers are non-null, accumulates dL/dgain and dL/dbias.
template <typename Scalar>
Vector<Scalar> layer_norm_backward(const Vector<Scalar>& dy,
                                   const Vector<Scalar>& a,
                                   const LayerNormParams<Scalar>& p,
                                   const LayerNormStats<Scalar>& stats,
                                   Vector<Scalar>* dgain = nullptr,
                                   Vector<Scalar>* dbias = nullptr) {
  if (!p.enabled) return dy;
  const Vector<Scalar> normalized =
      ((a.array() - stats.mean) / stats.std).matrix();
  if (dgain != nullptr) *dgain += (dy.array() * normalized.array()).matrix();
  if (dbias != nullptr) *dbias += dy;
  const Vector<Scalar> dn = (p.gain.array() * dy.array()).matrix();
  const Scalar mean_dn = dn.mean();
  const Scalar mean_dn_n = (dn.array() * normalized.array()).mean();
  return ((dn.array() - mean_dn - normalized.array() * mean_dn_n) /
          stats.std)
      .matrix();
}

}  // namespace xlane
