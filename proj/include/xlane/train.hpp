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
#include <functional>
#include <vector>

#include "xlane/dataset.hpp"
#include "xlane/model.hpp"

namespace xlane {

struct TrainConfig {
  int hidden = 64;
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 3e-3;
  double grad_clip = 5.0;  // global norm
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

/// Seeded initialization with the input scaler fitted on the training split.
LnLstmParamsd initialize(const Dataset& data, const TrainConfig& cfg);

/// Mini-batch Adam on softmax cross-entropy over the training split.
/// Deterministic for a fixed seed. Throws TrainingDiverged on a non-finite
/// loss, gradient or activation.
LnLstmParamsd train(const Dataset& data, const TrainConfig& cfg,
                    TrainReport* report = nullptr,
                    const std::function<void(int, double)>& on_epoch = {});

double accuracy(const Dataset& data, const std::vector<std::size_t>& idx,
                const LnLstmParamsd& p);

}  // namespace xlane
