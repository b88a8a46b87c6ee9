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
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xlane/window.hpp"

namespace xlane::twin {

inline constexpr int kMaxRawId = 10000;

struct TrackedVehicle {
  int raw_id = 0;     // cycles through [1, 10000]
  std::string key;    // stable identity (uuid once enriched); may be empty
  int lane = 0;       // 0 = rightmost
  VehicleFeatures features;
};

/// One snapshot of the road.
///
/// JSON record:
///   {"t": <s>,
///    "vehicles": [{"id": <raw id>, "lane": <int>, "vx": .., "vy": ..,
///                  "psi": .., "x": .., "y": .., "n_left": .., "n_right": ..,
///                  "uuid": <string, enriched frames only>}, ...]}
struct Frame {
  double t = 0.0;
  std::vector<TrackedVehicle> vehicles;

  const TrackedVehicle* find(std::string_view key) const;
};

nlohmann::json frame_to_json(const Frame& f);
/// Throws ValidationError on schema violations.
Frame frame_from_json(const nlohmann::json& j);

/// Frame files are a sequence of length-delimited records: a u32
/// little-endian byte count followed by that many bytes of JSON.
class FrameWriter {
 public:
  explicit FrameWriter(const std::filesystem::path& path);
  void write(const Frame& f);
  void write_raw(std::string_view payload);

 private:
  std::ofstream out_;
};

class FrameReader {
 public:
  explicit FrameReader(const std::filesystem::path& path);
  /// Next record; nullopt at a clean end of file. Throws ParseError with the
  /// record's byte offset on truncation or malformed JSON.
  std::optional<Frame> next();
  /// Next record payload without parsing it.
  std::optional<std::string> next_raw();
  std::size_t offset() const { return offset_; }

 private:
  std::ifstream in_;
  std::size_t offset_ = 0;
};

std::vector<Frame> read_frames(const std::filesystem::path& path);

}  // namespace xlane::twin
