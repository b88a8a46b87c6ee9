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

#include <array>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xlane/core.hpp"
#include "xlane/window.hpp"

namespace xlane {

enum class SuperFeature : int { kMovement = 0, kPosition = 1 };
enum class ColorBucket : int { kHigh = 0, kMedium = 1, kLow = 2 };

std::string_view to_string(SuperFeature f);
std::string_view to_string(ColorBucket b);

struct VehicleRelevance {
  double movement = 0.0;  // mean of vx, vy, psi relevances
  double position = 0.0;  // mean of x, y, n_l, n_r relevances
};

struct RankedSuperFeature {
  int slot = 0;
  SuperFeature feature = SuperFeature::kMovement;
  double relevance = 0.0;
  ColorBucket bucket = ColorBucket::kLow;

  bool operator==(const RankedSuperFeature&) const = default;
};

struct SuperFeatureExplanation {
  std::array<VehicleRelevance, kVehicles> vehicles{};
  std::vector<RankedSuperFeature> ranked_top3;

  double value(int slot, SuperFeature f) const {
    const auto& v = vehicles[static_cast<std::size_t>(slot)];
    return f == SuperFeature::kMovement ? v.movement : v.position;
  }
};

/// Sum of relevances over the four timesteps, per input dimension.
InputVector<double> aggregate_time(const WindowMatrixd& r);

/// Per-vehicle movement / position super-features (means, not sums). The
/// returned explanation has its top-3 ranking filled in.
SuperFeatureExplanation aggregate_super(const InputVector<double>& r49);

/// Top-k super-features by |relevance|, ties broken by (slot, movement first).
/// Buckets split the top-k |relevance| range into thirds. k > 14 is clamped.
std::vector<RankedSuperFeature> top_k(const SuperFeatureExplanation& e,
                                      int k = 3);

/// explanation.json: {vehicle_id -> {movement, position}, top3: [...]}.
/// Slots without an id are keyed by slot name.
nlohmann::json explanation_to_json(const SuperFeatureExplanation& e,
                                   const std::array<std::string, kVehicles>& ids);
nlohmann::json ranked_to_json(const std::vector<RankedSuperFeature>& ranked);

}  // namespace xlane
