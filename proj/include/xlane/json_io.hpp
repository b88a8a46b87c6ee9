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
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "xlane/model.hpp"
#include "xlane/window.hpp"

namespace xlane {

/// window.json:
///   {"id": str, "frames": [[49 numbers] x 4], "mask": [[7 bools] x 4],
///    "timestamps": [4 numbers], "slot_ids": [7 strings]}
/// mask, timestamps and slot_ids are optional (all-real, -1.5..0, empty).
nlohmann::json window_to_json(const ObservationWindow& w);
/// Throws ValidationError on schema violations; the result is validated.
ObservationWindow window_from_json(const nlohmann::json& j);
ObservationWindow read_window(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const WindowMatrixd& m);

/// relevance.json: {window_id, class, relevance (4 x 49 nested rows), sinks,
/// method} where `method` carries the attribution settings.
nlohmann::json relevance_to_json(const std::string& window_id, LaneClass target,
                                 const WindowMatrixd& relevance,
                                 const std::map<std::string, double>& sinks,
                                 const nlohmann::json& method);

nlohmann::json prediction_to_json(const PredictionOutput<double>& out);

/// Writes `j` with a trailing newline; throws Error on I/O failure.
void write_json(const std::filesystem::path& path, const nlohmann::json& j, int indent = 2);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace xlane
