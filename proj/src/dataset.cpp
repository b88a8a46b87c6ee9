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

#include "xlane/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"

namespace xlane {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> Dataset::all_indices() const {
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::array<std::size_t, kClasses> Dataset::class_counts(
    const std::vector<std::size_t>& idx) const {
  std::array<std::size_t, kClasses> n{};
  for (std::size_t i : idx) ++n[static_cast<std::size_t>(items.at(i).label)];
  return n;
}

void stratified_split(Dataset& d, double train_frac, double val_frac,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  d.train.clear();
  d.val.clear();
  d.test.clear();
  for (int c = 0; c < kClasses; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < d.items.size(); ++i) {
      if (static_cast<int>(d.items[i].label) == c) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(train_frac * idx.size());
    const auto n_val = static_cast<std::size_t>(val_frac * idx.size());
    d.train.insert(d.train.end(), idx.begin(), idx.begin() + n_train);
    d.val.insert(d.val.end(), idx.begin() + n_train, idx.begin() + n_train + n_val);
    d.test.insert(d.test.end(), idx.begin() + n_train + n_val, idx.end());
  }
  std::sort(d.train.begin(), d.train.end());
  std::sort(d.val.begin(), d.val.end());
  std::sort(d.test.begin(), d.test.end());
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return in;
}

}  // namespace

void save_dataset(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  const std::size_t n = d.items.size();
  {
    auto out = open_out(dir / "features.f64");
    for (const auto& item : d.items) {
      for (int k = 0; k < kFrames; ++k) {
        for (int j = 0; j < kInputDim; ++j) io::write<double>(out, item.window.frames(k, j));
      }
    }
  }
  {
    auto out = open_out(dir / "mask.u8");
    for (const auto& item : d.items) {
      for (const auto& row : item.window.mask) {
        for (bool m : row) io::write<std::uint8_t>(out, m ? 1 : 0);
      }
    }
  }
  {
    auto out = open_out(dir / "label.u8");
    for (const auto& item : d.items) {
      io::write<std::uint8_t>(out, static_cast<std::uint8_t>(item.label));
    }
  }
  {
    auto out = open_out(dir / "t.f64");
    for (const auto& item : d.items) io::write<double>(out, item.t);
  }
  {
    auto out = open_out(dir / "timestamps.f64");
    for (const auto& item : d.items) {
      for (double ts : item.window.timestamps) io::write<double>(out, ts);
    }
  }
  json ids = json::array();
  for (const auto& item : d.items) {
    ids.push_back({{"window_id", item.window.id},
                   {"query_id", item.query_id},
                   {"slot_ids", item.window.slot_ids}});
  }
  const auto counts = d.class_counts(d.all_indices());
  json manifest = {
      {"format", "xlane-dataset"},
      {"version", kDatasetFormatVersion},
      {"count", n},
      {"seed", d.seed},
      {"class_counts", {{"left", counts[0]}, {"keep", counts[1]}, {"right", counts[2]}}},
      {"columns",
       {{"features", {{"file", "features.f64"}, {"dtype", "f64le"}, {"shape", {n, kFrames, kInputDim}}}},
        {"mask", {{"file", "mask.u8"}, {"dtype", "u8"}, {"shape", {n, kFrames, kVehicles}}}},
        {"label", {{"file", "label.u8"}, {"dtype", "u8"}, {"shape", {n}}, {"classes", {"left", "keep", "right"}}}},
        {"t", {{"file", "t.f64"}, {"dtype", "f64le"}, {"shape", {n}}}},
        {"timestamps", {{"file", "timestamps.f64"}, {"dtype", "f64le"}, {"shape", {n, kFrames}}}}}},
      {"splits", {{"train", d.train}, {"val", d.val}, {"test", d.test}}},
      {"ids", ids}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(1) << '\n';
  if (!out) throw Error("cannot write manifest in " + dir.string());
}

Dataset load_dataset(const fs::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw Error("no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest.json: ") + e.what(), e.byte);
  }
  if (manifest.value("format", "") != "xlane-dataset") {
    throw ValidationError("not an xlane dataset: " + dir.string());
  }
  if (manifest.value("version", 0) != kDatasetFormatVersion) {
    throw ValidationError("unsupported dataset version " +
                          manifest.value("version", json(0)).dump());
  }
  const auto n = manifest.at("count").get<std::size_t>();
  Dataset d;
  d.seed = manifest.value("seed", std::uint64_t{0});
  d.items.resize(n);
  auto features = open_in(dir / "features.f64");
  auto mask = open_in(dir / "mask.u8");
  auto label = open_in(dir / "label.u8");
  auto t = open_in(dir / "t.f64");
  auto stamps = open_in(dir / "timestamps.f64");
  const json& ids = manifest.at("ids");
  for (std::size_t i = 0; i < n; ++i) {
    LabeledWindow& item = d.items[i];
    for (int k = 0; k < kFrames; ++k) {
      for (int j = 0; j < kInputDim; ++j) item.window.frames(k, j) = io::read<double>(features);
    }
    for (auto& row : item.window.mask) {
      for (auto&& m : row) m = io::read<std::uint8_t>(mask) != 0;
    }
    const auto c = io::read<std::uint8_t>(label);
    if (c >= kClasses) throw ValidationError("label out of range at row " + std::to_string(i));
    item.label = static_cast<LaneClass>(c);
    item.t = io::read<double>(t);
    for (double& ts : item.window.timestamps) ts = io::read<double>(stamps);
    const json& id = ids.at(i);
    item.window.id = id.at("window_id").get<std::string>();
    item.query_id = id.at("query_id").get<std::string>();
    item.window.slot_ids = id.at("slot_ids").get<std::array<std::string, kVehicles>>();
  }
  const json& splits = manifest.at("splits");
  d.train = splits.at("train").get<std::vector<std::size_t>>();
  d.val = splits.at("val").get<std::vector<std::size_t>>();
  d.test = splits.at("test").get<std::vector<std::size_t>>();
  for (const auto* s : {&d.train, &d.val, &d.test}) {
    for (std::size_t i : *s) {
      if (i >= n) throw ValidationError("split index out of range");
    }
  }
  return d;
}

}  // namespace xlane
