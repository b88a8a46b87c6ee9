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

#include "xlane/twin/frame.hpp"

#include <cmath>
#include <set>

#include "../binary_io.hpp"

namespace xlane::twin {

using nlohmann::json;

const TrackedVehicle* Frame::find(std::string_view key) const {
  for (const auto& v : vehicles) {
    if (v.key == key) return &v;
  }
  return nullptr;
}

json frame_to_json(const Frame& f) {
  json vehicles = json::array();
  for (const auto& v : f.vehicles) {
    json rec = {{"id", v.raw_id},          {"lane", v.lane},
                {"vx", v.features.vx},     {"vy", v.features.vy},
                {"psi", v.features.psi},   {"x", v.features.x},
                {"y", v.features.y},       {"n_left", v.features.n_left},
                {"n_right", v.features.n_right}};
    if (!v.key.empty()) rec["uuid"] = v.key;
    vehicles.push_back(std::move(rec));
  }
  return {{"t", f.t}, {"vehicles", std::move(vehicles)}};
}

Frame frame_from_json(const json& j) {
  auto fail = [](const std::string& what) -> void {
    throw ValidationError("frame record: " + what);
  };
  if (!j.is_object()) fail("not an object");
  if (!j.contains("t") || !j["t"].is_number()) fail("missing numeric 't'");
  if (!j.contains("vehicles") || !j["vehicles"].is_array()) fail("missing 'vehicles' array");
  Frame f;
  f.t = j["t"].get<double>();
  if (!std::isfinite(f.t)) fail("non-finite timestamp");
  std::set<int> seen;
  for (const auto& v : j["vehicles"]) {
    if (!v.is_object()) fail("vehicle entry is not an object");
    TrackedVehicle tv;
    if (!v.contains("id") || !v["id"].is_number_integer()) fail("vehicle without integer 'id'");
    tv.raw_id = v["id"].get<int>();
    if (tv.raw_id < 1 || tv.raw_id > kMaxRawId) fail("raw id outside [1, 10000]");
    if (!seen.insert(tv.raw_id).second) fail("duplicate raw id " + std::to_string(tv.raw_id));
    for (const char* field : {"vx", "vy", "psi", "x", "y"}) {
      if (!v.contains(field) || !v[field].is_number()) {
        fail(std::string("vehicle ") + std::to_string(tv.raw_id) + " lacks '" + field + "'");
      }
    }
    tv.features.vx = v["vx"].get<double>();
    tv.features.vy = v["vy"].get<double>();
    tv.features.psi = v["psi"].get<double>();
    tv.features.x = v["x"].get<double>();
    tv.features.y = v["y"].get<double>();
    tv.features.n_left = v.value("n_left", 0.0);
    tv.features.n_right = v.value("n_right", 0.0);
    tv.lane = v.value("lane", 0);
    if (v.contains("uuid")) tv.key = v["uuid"].get<std::string>();
    if (!tv.features.is_valid()) fail("vehicle " + std::to_string(tv.raw_id) + " has invalid features");
    f.vehicles.push_back(std::move(tv));
  }
  return f;
}

FrameWriter::FrameWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary) {
  if (!out_) throw Error("cannot write frame file " + path.string());
}

void FrameWriter::write(const Frame& f) { write_raw(frame_to_json(f).dump()); }

void FrameWriter::write_raw(std::string_view payload) {
  io::write<std::uint32_t>(out_, static_cast<std::uint32_t>(payload.size()));
  out_.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out_.flush();
  if (!out_) throw Error("failed writing frame record");
}

FrameReader::FrameReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
  if (!in_) throw Error("cannot read frame file " + path.string());
}

std::optional<std::string> FrameReader::next_raw() {
  unsigned char len_bytes[4];
  in_.read(reinterpret_cast<char*>(len_bytes), 4);
  const auto got = in_.gcount();
  if (got == 0) return std::nullopt;
  if (got != 4) throw ParseError("truncated record header", offset_);
  const std::uint32_t len = static_cast<std::uint32_t>(len_bytes[0]) |
                            static_cast<std::uint32_t>(len_bytes[1]) << 8 |
                            static_cast<std::uint32_t>(len_bytes[2]) << 16 |
                            static_cast<std::uint32_t>(len_bytes[3]) << 24;
  if (len > (1u << 26)) throw ParseError("implausible record length", offset_);
  std::string payload(len, '\0');
  in_.read(payload.data(), len);
  if (static_cast<std::uint32_t>(in_.gcount()) != len) {
    throw ParseError("truncated record body", offset_);
  }
  offset_ += 4 + len;
  return payload;
}

std::optional<Frame> FrameReader::next() {
  const std::size_t record_offset = offset_;
  auto raw = next_raw();
  if (!raw) return std::nullopt;
  try {
    return frame_from_json(json::parse(*raw));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed frame JSON: ") + e.what(),
                     record_offset + 4 + e.byte);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), record_offset);
  }
}

std::vector<Frame> read_frames(const std::filesystem::path& path) {
  FrameReader reader(path);
  std::vector<Frame> frames;
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  return frames;
}

}  // namespace xlane::twin
