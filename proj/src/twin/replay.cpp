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

#include "xlane/twin/replay.hpp"

#include <chrono>
#include <thread>

namespace xlane::twin {

SimSource::SimSource(const SimConfig& cfg, double duration_s)
    : state_(cfg), duration_s_(duration_s) {}

std::optional<Frame> SimSource::next() {
  const double period = 1.0 / state_.cfg.frame_rate;
  if (duration_s_ >= 0.0 && state_.t + period > duration_s_ + 1e-9) return std::nullopt;
  step_sim(state_, period);
  return snapshot(state_, false);
}

FileSource::FileSource(const std::filesystem::path& path) : reader_(path) {}

std::optional<Frame> FileSource::next() { return reader_.next(); }

std::size_t stream_replay(FrameSource& source, double rate,
                          const std::function<bool(const Frame&)>& sink,
                          std::stop_token stop) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  std::optional<double> t0;
  std::size_t emitted = 0;
  while (!stop.stop_requested()) {
    auto f = source.next();
    if (!f) break;
    if (!t0) t0 = f->t;
    if (rate > 0.0) {
      const auto due = start + std::chrono::duration_cast<Clock::duration>(
                                   std::chrono::duration<double>((f->t - *t0) / rate));
      while (Clock::now() < due && !stop.stop_requested()) {
        std::this_thread::sleep_for(
            std::min<Clock::duration>(due - Clock::now(), std::chrono::milliseconds(20)));
      }
      if (stop.stop_requested()) break;
    }
    ++emitted;
    if (!sink(*f)) break;
  }
  return emitted;
}

}  // namespace xlane::twin
