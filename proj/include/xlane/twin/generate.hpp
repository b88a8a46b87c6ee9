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

#include <cstddef>

#include "xlane/dataset.hpp"
#include "xlane/twin/sim.hpp"

namespace xlane::twin {

struct GenerateConfig {
  std::size_t n_per_class = 100;
  double warmup_s = 30.0;      // road fill-up before windows are collected
  double chunk_s = 300.0;      // simulated time per collection round
  int max_rounds = 200;
  double train_frac = 0.70;
  double val_frac = 0.15;
};

/// Simulates until every class has at least n_per_class candidate windows
/// (extending the run with a warning when a class is short), then samples
/// exactly n_per_class windows per class and splits them stratified.
Dataset generate_dataset(const SimConfig& sim, const GenerateConfig& cfg);

}  // namespace xlane::twin
