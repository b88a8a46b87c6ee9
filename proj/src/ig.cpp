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

#include "xlane/ig.hpp"

namespace xlane {

std::string_view to_string(IgBaseline b) {
  return b == IgBaseline::kSentinelWindow ? "sentinel" : "zero";
}

IgBaseline ig_baseline_from_string(std::string_view s) {
  if (s == "sentinel" || s == "sentinel-window") return IgBaseline::kSentinelWindow;
  if (s == "zero" || s == "zero-window") return IgBaseline::kZeroWindow;
  throw ValidationError("unknown IG baseline '" + std::string(s) + "'");
}

WindowMatrixd ig_baseline(const ObservationWindow& w, IgBaseline kind) {
  if (kind == IgBaseline::kZeroWindow) return WindowMatrixd::Zero();
  return sentinel_window(w);
}

WindowMatrixd integrated_gradients(const ObservationWindow& w,
                                   const LnLstmParamsd& p, LaneClass target,
                                   const IgConfig& cfg,
                                   const std::optional<WindowMatrixd>& baseline) {
  validate_window(w);
  const WindowMatrixd base = baseline ? *baseline : ig_baseline(w, cfg.baseline);
  return integrate_path<double>(
      w.frames, base,
      [&](const WindowMatrixd& x) { return input_gradient<double>(x, p, target); },
      cfg.steps);
}

double completeness_gap(const ObservationWindow& w, const LnLstmParamsd& p,
                        LaneClass target, const IgConfig& cfg) {
  const WindowMatrixd base = ig_baseline(w, cfg.baseline);
  const WindowMatrixd attr = integrated_gradients(w, p, target, cfg, base);
  const int c = static_cast<int>(target);
  const double fx = forward<double>(w.frames, p).first.logits(c);
  const double fb = forward<double>(base, p).first.logits(c);
  return std::abs(attr.sum() - (fx - fb));
}

}  // namespace xlane
