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

#include "xlane/explanation.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

namespace xlane {

std::string_view to_string(SuperFeature f) {
  return f == SuperFeature::kMovement ? "movement" : "position";
}

std::string_view to_string(ColorBucket b) {
  switch (b) {
    case ColorBucket::kHigh:
      return "high";
    case ColorBucket::kMedium:
      return "medium";
    case ColorBucket::kLow:
      return "low";
  }
  return "?";
}

InputVector<double> aggregate_time(const WindowMatrixd& r) {
  return r.colwise().sum().transpose();
}

SuperFeatureExplanation aggregate_super(const InputVector<double>& r49) {
  SuperFeatureExplanation e;
  for (int s = 0; s < kVehicles; ++s) {
    const auto block = r49.segment<kFeaturesPerVehicle>(s * kFeaturesPerVehicle);
    e.vehicles[static_cast<std::size_t>(s)].movement =
        (block(kVx) + block(kVy) + block(kPsi)) / 3.0;
    e.vehicles[static_cast<std::size_t>(s)].position =
        (block(kPosX) + block(kPosY) + block(kLanesLeft) + block(kLanesRight)) /
        4.0;
  }
  e.ranked_top3 = top_k(e, 3);
  return e;
}

std::vector<RankedSuperFeature> top_k(const SuperFeatureExplanation& e, int k) {
  if (k > kSuperFeatureCount) {
    spdlog::warn("top_k: k = {} exceeds {} super-features, clamping", k,
                 kSuperFeatureCount);
    k = kSuperFeatureCount;
  }
  if (k <= 0) return {};
  // Candidate order is the tie-break: slot ascending, movement before position.
  std::vector<RankedSuperFeature> all;
  all.reserve(kSuperFeatureCount);
  for (int s = 0; s < kVehicles; ++s) {
    for (SuperFeature f : {SuperFeature::kMovement, SuperFeature::kPosition}) {
      all.push_back({s, f, e.value(s, f), ColorBucket::kLow});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const RankedSuperFeature& a, const RankedSuperFeature& b) {
                     return std::abs(a.relevance) > std::abs(b.relevance);
                   });
  all.resize(static_cast<std::size_t>(k));
  const double hi = std::abs(all.front().relevance);
  const double lo = std::abs(all.back().relevance);
  for (auto& r : all) {
    const double u = hi > lo ? (std::abs(r.relevance) - lo) / (hi - lo) : 1.0;
    r.bucket = u >= 2.0 / 3.0   ? ColorBucket::kHigh
               : u >= 1.0 / 3.0 ? ColorBucket::kMedium
                                : ColorBucket::kLow;
  }
  return all;
}

nlohmann::json ranked_to_json(const std::vector<RankedSuperFeature>& ranked) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : ranked) {
    out.push_back({{"vehicle_slot", slot_name(r.slot)},
                   {"super_feature", to_string(r.feature)},
                   {"relevance", r.relevance},
                   {"bucket", to_string(r.bucket)}});
  }
  return out;
}

nlohmann::json explanation_to_json(const SuperFeatureExplanation& e,
                                   const std::array<std::string, kVehicles>& ids) {
  nlohmann::json out = nlohmann::json::object();
  for (int s = 0; s < kVehicles; ++s) {
    const auto& id = ids[static_cast<std::size_t>(s)];
    const std::string key = id.empty() ? std::string(slot_name(s)) : id;
    out[key] = {{"slot", slot_name(s)},
                {"movement", e.vehicles[static_cast<std::size_t>(s)].movement},
                {"position", e.vehicles[static_cast<std::size_t>(s)].position}};
  }
  out["top3"] = ranked_to_json(e.ranked_top3);
  return out;
}

}  // namespace xlane
