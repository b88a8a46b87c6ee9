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

#include <Eigen/Core>

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xlane {

// Input layout: 4 frames, 7 vehicles per frame, 7 features per vehicle.
inline constexpr int kFrames = 4;
inline constexpr int kVehicles = 7;
inline constexpr int kFeaturesPerVehicle = 7;
inline constexpr int kInputDim = kVehicles * kFeaturesPerVehicle;  // 49
inline constexpr int kRelevanceCount = kFrames * kInputDim;        // 196
inline constexpr int kClasses = 3;
inline constexpr int kQuerySlot = 6;
inline constexpr int kSuperFeatureCount = 2 * kVehicles;  // 14

inline constexpr double kFramePeriod = 0.5;       // s between window frames
inline constexpr double kWindowSpan = 1.5;        // s covered by one window
inline constexpr double kPredictionHorizon = 2.5;  // s

/// Feature order inside one vehicle block.
enum Feature : int { kVx = 0, kVy, kPsi, kPosX, kPosY, kLanesLeft, kLanesRight };

/// Neighbour slot order inside one frame; the query vehicle is always last.
enum Slot : int {
  kLeftFront = 0,
  kFront,
  kRightFront,
  kLeftRear,
  kRear,
  kRightRear,
  kQuery
};

enum class LaneClass : int { kLeft = 0, kKeep = 1, kRight = 2 };

std::string_view to_string(LaneClass c);
LaneClass lane_class_from_string(std::string_view name);
std::string_view slot_name(int slot);

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using InputVector = Eigen::Matrix<Scalar, kInputDim, 1>;

/// One window worth of inputs (or relevances, or gradients), row = frame.
template <typename Scalar>
using WindowMatrix = Eigen::Matrix<Scalar, kFrames, kInputDim, Eigen::RowMajor>;

template <typename Scalar>
using ClassVector = Eigen::Matrix<Scalar, kClasses, 1>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;
using WindowMatrixd = WindowMatrix<double>;
using ClassVectord = ClassVector<double>;

inline constexpr int feature_index(int slot, int feature) {
  return slot * kFeaturesPerVehicle + feature;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value showed up at a named computation site.
class NumericError : public Error {
 public:
  NumericError(std::string site, const std::string& what)
      : Error(what), site_(std::move(site)) {}
  const std::string& site() const { return site_; }

 private:
  std::string site_;
};

/// Zero denominator in a relevance rule with no stabilizer.
class DivisionHazardError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

/// Signed stabilizer sign: sign(0) = +1.
template <typename Scalar>
inline Scalar stabilizer_sign(Scalar z) {
  return z >= Scalar(0) ? Scalar(1) : Scalar(-1);
}

}  // namespace xlane
