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

#include "xlane/model_io.hpp"

#include <fstream>
#include <map>
#include <numeric>

#include "binary_io.hpp"

namespace xlane {

namespace {

constexpr char kMagic[4] = {'X', 'L', 'M', '1'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename Derived>
TensorView view(std::string name, Eigen::PlainObjectBase<Derived>& m) {
  return {std::move(name), m.data(),
          {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())}};
}

struct StoredTensor {
  std::vector<std::uint64_t> shape;
  std::vector<double> values;
};

}  // namespace

std::size_t TensorView::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::uint64_t b) { return a * b; });
}

std::vector<TensorView> trainable_tensors(LnLstmParamsd& p) {
  return {view("w_in", p.w_in),
          view("w_rec", p.w_rec),
          view("gate_bias", p.gate_bias),
          view("ln_in.gain", p.ln_in.gain),
          view("ln_in.bias", p.ln_in.bias),
          view("ln_rec.gain", p.ln_rec.gain),
          view("ln_rec.bias", p.ln_rec.bias),
          view("ln_cell.gain", p.ln_cell.gain),
          view("ln_cell.bias", p.ln_cell.bias),
          view("head_w", p.head_w),
          view("head_b", p.head_b)};
}

void save_model(const LnLstmParamsd& params, const std::filesystem::path& path) {
  params.validate();
  LnLstmParamsd p = params;
  std::vector<TensorView> tensors = trainable_tensors(p);
  tensors.push_back(view("scaler.mean", p.scaler.mean));
  tensors.push_back(view("scaler.inv_scale", p.scaler.inv_scale));
  std::vector<double> meta = {
      static_cast<double>(p.hidden),  p.ln_in.var_eps,
      p.ln_rec.var_eps,               p.ln_cell.var_eps,
      p.ln_in.enabled ? 1.0 : 0.0,    p.ln_rec.enabled ? 1.0 : 0.0,
      p.ln_cell.enabled ? 1.0 : 0.0};
  tensors.push_back({"meta", meta.data(), {meta.size()}});

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path.string());
  out.write(kMagic, sizeof(kMagic));
  io::write<std::uint32_t>(out, kFormatVersion);
  io::write<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    io::write<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) io::write<std::uint64_t>(out, d);
    for (std::size_t i = 0; i < t.size(); ++i) io::write<double>(out, t.data[i]);
  }
  if (!out) throw Error("failed writing model file " + path.string());
}

LnLstmParamsd load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read model file " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw ParseError("bad magic, expected XLM1", 0);
  }
  const auto version = io::read<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw ParseError("unsupported model format version " + std::to_string(version), 4);
  }
  const auto count = io::read<std::uint32_t>(in);
  std::map<std::string, StoredTensor> stored;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = io::read<std::uint16_t>(in);
    std::string name(name_len, '\0');
    const auto offset = static_cast<std::size_t>(in.tellg());
    if (!in.read(name.data(), name_len)) throw ParseError("truncated tensor name", offset);
    StoredTensor t;
    const auto rank = io::read<std::uint32_t>(in);
    if (rank > 8) throw ParseError("implausible tensor rank", offset);
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.shape.push_back(io::read<std::uint64_t>(in));
      n *= t.shape.back();
    }
    if (n > (std::size_t{1} << 28)) throw ParseError("implausible tensor size", offset);
    t.values.resize(n);
    for (double& v : t.values) v = io::read<double>(in);
    stored.emplace(std::move(name), std::move(t));
  }
  auto take = [&](const std::string& name) -> const StoredTensor& {
    auto it = stored.find(name);
    if (it == stored.end()) throw ParseError("model file lacks tensor '" + name + "'", 0);
    return it->second;
  };
  const StoredTensor& meta = take("meta");
  if (meta.values.size() != 7) throw ParseError("malformed meta tensor", 0);
  LnLstmParamsd p = LnLstmParamsd::zeros(static_cast<int>(meta.values[0]));
  p.ln_in.var_eps = meta.values[1];
  p.ln_rec.var_eps = meta.values[2];
  p.ln_cell.var_eps = meta.values[3];
  p.ln_in.enabled = meta.values[4] != 0.0;
  p.ln_rec.enabled = meta.values[5] != 0.0;
  p.ln_cell.enabled = meta.values[6] != 0.0;
  std::vector<TensorView> targets = trainable_tensors(p);
  targets.push_back(view("scaler.mean", p.scaler.mean));
  targets.push_back(view("scaler.inv_scale", p.scaler.inv_scale));
  for (auto& t : targets) {
    const StoredTensor& s = take(t.name);
    if (s.shape != t.shape) throw ShapeError("tensor '" + t.name + "' has unexpected shape");
    std::copy(s.values.begin(), s.values.end(), t.data);
  }
  p.validate();
  return p;
}

}  // namespace xlane
