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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xlane/core.hpp"
#include "xlane/window.hpp"

namespace xlane {

struct LabeledWindow {
  ObservationWindow window;
  LaneClass label = LaneClass::kKeep;
  std::string query_id;
  double t = 0.0;
};

/// Labeled windows plus a train / validation / test split.
struct Dataset {
  std::vector<LabeledWindow> items;
  std::vector<std::size_t> train, val, test;
  std::uint64_t seed = 0;

  std::size_t size() const { return items.size(); }
  std::vector<std::size_t> all_indices() const;
  /// Per-class counts over the given indices (left, keep, right).
  std::array<std::size_t, kClasses> class_counts(
      const std::vector<std::size_t>& idx) const;
};

inline constexpr int kDatasetFormatVersion = 1;

/// Columnar layout: <dir>/manifest.json plus one little-endian binary file per
/// column (features.f64, mask.u8, label.u8, t.f64, timestamps.f64).
void save_dataset(const Dataset& d, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// Stratified split of every class into train / val / test fractions.
void stratified_split(Dataset& d, double train_frac, double val_frac,
                      std::uint64_t seed);

}  // namespace xlane
