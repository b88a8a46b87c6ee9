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

#include <functional>
#include <memory>
#include <optional>
#include <stop_token>

#include "xlane/twin/frame.hpp"
#include "xlane/twin/sim.hpp"

namespace xlane::twin {

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Next frame, or nullopt when the source is exhausted.
  virtual std::optional<Frame> next() = 0;
};

/// Live simulator feed: unkeyed frames, raw ids only.
class SimSource : public FrameSource {
 public:
  explicit SimSource(const SimConfig& cfg, double duration_s = -1.0);
  std::optional<Frame> next() override;
  SimState& state() { return state_; }

 private:
  SimState state_;
  double duration_s_;
};

/// Recorded frame file; throws ParseError with the byte offset on corruption.
class FileSource : public FrameSource {
 public:
  explicit FileSource(const std::filesystem::path& path);
  std::optional<Frame> next() override;

 private:
  FrameReader reader_;
};

/// Emits frames paced by their timestamps divided by `rate` (rate <= 0 means
/// as fast as possible). `sink` returning false stops the replay. Returns the
/// number of frames emitted.
std::size_t stream_replay(FrameSource& source, double rate,
                          const std::function<bool(const Frame&)>& sink,
                          std::stop_token stop = {});

}  // namespace xlane::twin
