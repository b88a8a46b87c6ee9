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
#include <optional>
#include <string_view>

#include "xlane/core.hpp"
#include "xlane/model.hpp"
#include "xlane/window.hpp"

namespace xlane {

enum class IgBaseline { kSentinelWindow, kZeroWindow };

std::string_view to_string(IgBaseline b);
IgBaseline ig_baseline_from_string(std::string_view s);

struct IgConfig {
  int steps = 50;
  IgBaseline baseline = IgBaseline::kSentinelWindow;
};

/// Path attribution (x - x') * mean_m grad(x' + alpha_m (x - x')) with
/// midpoint nodes alpha_m = (m + 0.5) / steps. `grad` maps a 4x49 input to
/// the 4x49 gradient of the explained score.
template <typename Scalar, typename GradFn>
WindowMatrix<Scalar> integrate_path(const WindowMatrix<Scalar>& x,
                                    const WindowMatrix<Scalar>& baseline,
                                    GradFn&& grad, int steps) {
  if (steps < 1) throw ValidationError("integrated gradients: steps < 1");
  const WindowMatrix<Scalar> delta = x - baseline;
  WindowMatrix<Scalar> sum = WindowMatrix<Scalar>::Zero();
  for (int m = 0; m < steps; ++m) {
    const Scalar alpha = (Scalar(m) + Scalar(0.5)) / Scalar(steps);
    const WindowMatrix<Scalar> point = baseline + alpha * delta;
    const WindowMatrix<Scalar> g = grad(point);
    if (!g.allFinite()) {
      throw NumericError("ig_path", "non-finite gradient at path node " +
                                        std::to_string(m));
    }
    sum += g;
  }
  return (delta.array() * sum.array() / Scalar(steps)).matrix();
}

WindowMatrixd ig_baseline(const ObservationWindow& w, IgBaseline kind);

/// Integrated gradients of the pre-softmax logit of `target`. An explicit
/// `baseline` overrides cfg.baseline.
WindowMatrixd integrated_gradients(
    const ObservationWindow& w, const LnLstmParamsd& p, LaneClass target,
    const IgConfig& cfg,
    const std::optional<WindowMatrixd>& baseline = std::nullopt);

/// |sum(attribution) - (f_c(x) - f_c(x'))|.
double completeness_gap(const ObservationWindow& w, const LnLstmParamsd& p,
                        LaneClass target, const IgConfig& cfg);

}  // namespace xlane
