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

#include "xlane/service/identity_cache.hpp"

#include <algorithm>
#include <fstream>

#include <boost/uuid/random_generator.hpp>
#include <boost/uuid/uuid_io.hpp>
#include <nlohmann/json.hpp>

#include "xlane/core.hpp"

namespace xlane::service {

IdentityCache::IdentityCache(double ttl, std::optional<std::uint64_t> seed)
    : ttl_(ttl), rng_(seed ? *seed : std::random_device{}()) {
  if (!(ttl > 0.0)) throw ValidationError("identity cache: ttl must be positive");
}

std::string IdentityCache::mint() {
  boost::uuids::basic_random_generator<std::mt19937_64> gen(rng_);
  ++minted_;
  return boost::uuids::to_string(gen());
}

std::string IdentityCache::assign(int raw_id, double now) {
  auto it = entries_.find(raw_id);
  if (it != entries_.end() && now - it->second.last_seen <= ttl_) {
    it->second.last_seen = std::max(it->second.last_seen, now);
    return it->second.uuid;
  }
  Entry e{mint(), now};
  entries_[raw_id] = e;
  return e.uuid;
}

std::size_t IdentityCache::expire(double now) {
  return std::erase_if(entries_, [&](const auto& kv) { return now - kv.second.last_seen > ttl_; });
}

void IdentityCache::save(const std::filesystem::path& path) const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [raw, e] : entries_) {
    entries.push_back({{"raw_id", raw}, {"uuid", e.uuid}, {"last_seen", e.last_seen}});
  }
  const nlohmann::json j = {{"version", 1}, {"ttl", ttl_}, {"entries", std::move(entries)}};
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write identity snapshot " + tmp.string());
    out << j.dump() << '\n';
    if (!out) throw Error("failed writing identity snapshot " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void IdentityCache::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read identity snapshot " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("identity snapshot " + path.string() + ": " + e.what(), e.byte);
  }
  std::map<int, Entry> loaded;
  try {
    for (const auto& e : j.at("entries")) {
      loaded[e.at("raw_id").get<int>()] = {e.at("uuid").get<std::string>(),
                                           e.at("last_seen").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("identity snapshot " + path.string() + ": " + e.what());
  }
  entries_ = std::move(loaded);
}

}  // namespace xlane::service
