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

#include "xlane/lrp.hpp"

namespace xlane {

std::string_view to_string(LnRule r) {
  return r == LnRule::kOmega ? "omega" : "identity";
}

LnRule ln_rule_from_string(std::string_view s) {
  if (s == "omega") return LnRule::kOmega;
  if (s == "identity") return LnRule::kIdentity;
  throw ValidationError("unknown ln rule '" + std::string(s) + "'");
}

std::string_view to_string(OmegaVariant v) {
  return v == OmegaVariant::kLiteral ? "literal" : "full-decomposition";
}

OmegaVariant omega_variant_from_string(std::string_view s) {
  if (s == "literal") return OmegaVariant::kLiteral;
  if (s == "full-decomposition" || s == "full") {
    return OmegaVariant::kFullDecomposition;
  }
  throw ValidationError("unknown omega variant '" + std::string(s) + "'");
}

Explanation<double> explain_window(const ObservationWindow& w,
                                   const LnLstmParamsd& p,
                                   std::optional<LaneClass> target,
                                   const LrpConfig& cfg) {
  const auto [pred, trace] = forward(w, p);
  return explain<double>(trace, p, target.value_or(pred.predicted_class), cfg);
}

}  // namespace xlane
