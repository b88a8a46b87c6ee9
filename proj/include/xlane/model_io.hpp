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

#include <filesystem>
#include <string>
#include <vector>

#include "xlane/model.hpp"

namespace xlane {

/// A named, contiguous view of one parameter tensor.
struct TensorView {
  std::string name;
  double* data = nullptr;
  std::vector<std::uint64_t> shape;
  std::size_t size() const;
};

/// Trainable tensors in a fixed order (excludes the input scaler and LN
/// stabilizers).
std::vector<TensorView> trainable_tensors(LnLstmParamsd& p);

/// Model container:
///   "XLM1" | u32 format version | u32 tensor count |
///   per tensor: u16 name length, name, u32 rank, u64 dims[rank],
///               f64 values (little-endian, column-major as stored)
void save_model(const LnLstmParamsd& p, const std::filesystem::path& path);
LnLstmParamsd load_model(const std::filesystem::path& path);

}  // namespace xlane
