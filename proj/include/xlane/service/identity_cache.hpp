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
#include <map>
#include <optional>
#include <random>
#include <string>

namespace xlane::service {

/// Maps cycling raw ids to stable uuids. A raw id keeps its uuid while it is
/// seen again within `ttl` seconds of stream time; after a longer absence the
/// vehicle is assumed new and gets a fresh uuid. Not synchronized: owned by
/// one writer.
class IdentityCache {
 public:
  struct Entry {
    std::string uuid;
    double last_seen = 0.0;
  };

  explicit IdentityCache(double ttl = 5.0, std::optional<std::uint64_t> seed = std::nullopt);

  std::string assign(int raw_id, double now);
  /// Forgets entries absent for longer than ttl; returns how many.
  std::size_t expire(double now);

  const std::map<int, Entry>& entries() const { return entries_; }
  double ttl() const { return ttl_; }
  std::uint64_t minted() const { return minted_; }

  /// JSON snapshot, written to a temporary file and renamed into place.
  void save(const std::filesystem::path& path) const;
  /// Replaces the entries with a snapshot's; the ttl stays as configured.
  void load(const std::filesystem::path& path);

 private:
  std::string mint();

  double ttl_;
  std::map<int, Entry> entries_;
  std::mt19937_64 rng_;
  std::uint64_t minted_ = 0;
};

}  // namespace xlane::service
