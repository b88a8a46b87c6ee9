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

#include "xlane/json_io.hpp"

#include <fstream>

namespace xlane {

using nlohmann::json;

json matrix_to_json(const WindowMatrixd& m) {
  json rows = json::array();
  for (int k = 0; k < kFrames; ++k) {
    json row = json::array();
    for (int j = 0; j < kInputDim; ++j) row.push_back(m(k, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json window_to_json(const ObservationWindow& w) {
  json mask = json::array();
  for (const auto& frame : w.mask) mask.push_back(json(std::vector<bool>(frame.begin(), frame.end())));
  return {{"id", w.id},
          {"frames", matrix_to_json(w.frames)},
          {"mask", std::move(mask)},
          {"timestamps", w.timestamps},
          {"slot_ids", w.slot_ids}};
}

ObservationWindow window_from_json(const json& j) {
  auto fail = [](const std::string& what) { throw ValidationError("window: " + what); };
  if (!j.is_object()) fail("expected a JSON object");
  ObservationWindow w;
  if (j.contains("id")) {
    if (!j["id"].is_string()) fail("'id' must be a string");
    w.id = j["id"].get<std::string>();
  }
  if (!j.contains("frames") || !j["frames"].is_array()) fail("missing 'frames' array");
  const auto& frames = j["frames"];
  if (frames.size() != kFrames) {
    fail("expected 4 frames, got " + std::to_string(frames.size()));
  }
  for (int k = 0; k < kFrames; ++k) {
    const auto& row = frames[static_cast<std::size_t>(k)];
    if (!row.is_array() || row.size() != kInputDim) {
      fail("frame " + std::to_string(k) + " must hold 49 numbers");
    }
    for (int f = 0; f < kInputDim; ++f) {
      const auto& v = row[static_cast<std::size_t>(f)];
      if (!v.is_number()) fail("frame " + std::to_string(k) + " entry " + std::to_string(f) + " is not a number");
      w.frames(k, f) = v.get<double>();
    }
  }
  for (auto& frame : w.mask) frame.fill(true);
  if (j.contains("mask")) {
    const auto& mask = j["mask"];
    if (!mask.is_array() || mask.size() != kFrames) fail("'mask' must hold 4 rows");
    for (int k = 0; k < kFrames; ++k) {
      const auto& row = mask[static_cast<std::size_t>(k)];
      if (!row.is_array() || row.size() != kVehicles) fail("mask rows must hold 7 booleans");
      for (int s = 0; s < kVehicles; ++s) {
        const auto& v = row[static_cast<std::size_t>(s)];
        if (!v.is_boolean()) fail("mask entries must be booleans");
        w.mask[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] = v.get<bool>();
      }
    }
  }
  if (j.contains("timestamps")) {
    const auto& ts = j["timestamps"];
    if (!ts.is_array() || ts.size() != kFrames) fail("'timestamps' must hold 4 numbers");
    for (int k = 0; k < kFrames; ++k) {
      if (!ts[static_cast<std::size_t>(k)].is_number()) fail("timestamps must be numbers");
      w.timestamps[static_cast<std::size_t>(k)] = ts[static_cast<std::size_t>(k)].get<double>();
    }
  }
  if (j.contains("slot_ids")) {
    const auto& ids = j["slot_ids"];
    if (!ids.is_array() || ids.size() != kVehicles) fail("'slot_ids' must hold 7 strings");
    for (int s = 0; s < kVehicles; ++s) {
      if (!ids[static_cast<std::size_t>(s)].is_string()) fail("slot ids must be strings");
      w.slot_ids[static_cast<std::size_t>(s)] = ids[static_cast<std::size_t>(s)].get<std::string>();
    }
  }
  validate_window(w);
  return w;
}

ObservationWindow read_window(const std::filesystem::path& path) {
  return window_from_json(read_json(path));
}

json relevance_to_json(const std::string& window_id, LaneClass target,
                       const WindowMatrixd& relevance,
                       const std::map<std::string, double>& sinks, const json& method) {
  return {{"window_id", window_id},
          {"class", to_string(target)},
          {"relevance", matrix_to_json(relevance)},
          {"sinks", sinks},
          {"method", method}};
}

json prediction_to_json(const PredictionOutput<double>& out) {
  return {{"logits", std::vector<double>(out.logits.data(), out.logits.data() + kClasses)},
          {"probabilities",
           std::vector<double>(out.probabilities.data(), out.probabilities.data() + kClasses)},
          {"predicted_class", to_string(out.predicted_class)},
          {"horizon_s", out.horizon_s}};
}

void write_json(const std::filesystem::path& path, const json& j, int indent) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(indent) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
}

}  // namespace xlane
