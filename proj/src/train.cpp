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

#include "xlane/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "xlane/model_io.hpp"

namespace xlane {

namespace {

const std::vector<std::size_t>& training_rows(const Dataset& data,
                                              std::vector<std::size_t>& fallback) {
  if (!data.train.empty()) return data.train;
  fallback = data.all_indices();
  return fallback;
}

void fill_uniform(Matrix<double>& m, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
}

}  // namespace

LnLstmParamsd initialize(const Dataset& data, const TrainConfig& cfg) {
  if (cfg.hidden < 1) throw ValidationError("hidden width must be >= 1");
  const int h = cfg.hidden;
  std::mt19937_64 rng(cfg.seed);
  LnLstmParamsd p = LnLstmParamsd::zeros(h);
  fill_uniform(p.w_in, std::sqrt(6.0 / (kInputDim + 4 * h)), rng);
  fill_uniform(p.w_rec, std::sqrt(6.0 / (h + 4 * h)), rng);
  fill_uniform(p.head_w, std::sqrt(6.0 / (h + kClasses)), rng);
  p.gate_bias.segment(kForgetGate * h, h).setOnes();

  std::vector<std::size_t> fallback;
  const auto& rows = training_rows(data, fallback);
  if (!rows.empty()) {
    InputVector<double> sum = InputVector<double>::Zero();
    InputVector<double> sq = InputVector<double>::Zero();
    double n = 0.0;
    for (std::size_t i : rows) {
      const auto& f = data.items[i].window.frames;
      for (int k = 0; k < kFrames; ++k) {
        sum += f.row(k).transpose();
        sq += f.row(k).transpose().cwiseProduct(f.row(k).transpose());
        n += 1.0;
      }
    }
    p.scaler.mean = sum / n;
    const InputVector<double> var =
        (sq / n - p.scaler.mean.cwiseProduct(p.scaler.mean)).cwiseMax(0.0);
    for (int j = 0; j < kInputDim; ++j) {
      const double sd = std::sqrt(var(j));
      p.scaler.inv_scale(j) = sd > 1e-6 ? 1.0 / sd : 1.0;
    }
  }
  return p;
}

double accuracy(const Dataset& data, const std::vector<std::size_t>& idx,
                const LnLstmParamsd& p) {
  if (idx.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i : idx) {
    const auto& item = data.items[i];
    if (forward<double>(item.window.frames, p).first.predicted_class == item.label) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

LnLstmParamsd train(const Dataset& data, const TrainConfig& cfg,
                    TrainReport* report,
                    const std::function<void(int, double)>& on_epoch) {
  LnLstmParamsd p = initialize(data, cfg);
  std::vector<std::size_t> fallback;
  std::vector<std::size_t> order = training_rows(data, fallback);
  if (order.empty() && cfg.epochs > 0) throw ValidationError("train: no training rows");

  std::vector<TensorView> params = trainable_tensors(p);
  std::vector<Eigen::VectorXd> m1, m2;
  for (const auto& t : params) {
    m1.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.size())));
    m2.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.size())));
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  long step = 0;
  const auto batch = static_cast<std::size_t>(std::max(1, cfg.batch_size));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      LnLstmParamsd grad = p.zeros_like();
      double loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& item = data.items[order[b]];
        std::pair<PredictionOutput<double>, ActivationTrace<double>> fwd;
        try {
          fwd = forward<double>(item.window.frames, p);
        } catch (const NumericError& e) {
          std::ostringstream msg;
          msg << "training diverged at epoch " << epoch << ", step " << step << ", row "
              << order[b] << ": " << e.what();
          throw TrainingDiverged(msg.str());
        }
        const auto& [out, trace] = fwd;
        const int y = static_cast<int>(item.label);
        loss -= std::log(std::max(out.probabilities(y), 1e-300));
        ClassVectord dlogits = out.probabilities;
        dlogits(y) -= 1.0;
        auto g = backward<double>(trace, p, dlogits, true);
        auto dst = trainable_tensors(grad);
        auto src = trainable_tensors(g.params);
        for (std::size_t t = 0; t < dst.size(); ++t) {
          for (std::size_t e = 0; e < dst[t].size(); ++e) dst[t].data[e] += src[t].data[e];
        }
      }
      const double n = static_cast<double>(end - start);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: loss is not finite at epoch " << epoch
            << ", batch starting at row " << start << ", step " << step;
        throw TrainingDiverged(msg.str());
      }
      epoch_loss += loss;
      auto gviews = trainable_tensors(grad);
      double norm2 = 0.0;
      for (auto& t : gviews) {
        Eigen::Map<Eigen::VectorXd> v(t.data, static_cast<Eigen::Index>(t.size()));
        v /= n;
        norm2 += v.squaredNorm();
      }
      const double norm = std::sqrt(norm2);
      if (!std::isfinite(norm)) {
        throw TrainingDiverged("training diverged: non-finite gradient norm at epoch " +
                               std::to_string(epoch));
      }
      const double scale = norm > cfg.grad_clip ? cfg.grad_clip / norm : 1.0;
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t t = 0; t < params.size(); ++t) {
        const auto size = static_cast<Eigen::Index>(params[t].size());
        Eigen::Map<Eigen::VectorXd> w(params[t].data, size);
        Eigen::Map<Eigen::VectorXd> g(gviews[t].data, size);
        m1[t] = kBeta1 * m1[t] + (1.0 - kBeta1) * scale * g;
        m2[t] = kBeta2 * m2[t] + (1.0 - kBeta2) * (scale * g).cwiseAbs2();
        w.array() -= cfg.learning_rate * (m1[t].array() / bc1) /
                     ((m2[t].array() / bc2).sqrt() + kAdamEps);
      }
    }
    const double mean_loss = epoch_loss / static_cast<double>(order.size());
    if (report != nullptr) report->epoch_loss.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch, mean_loss);
  }
  if (report != nullptr) {
    report->train_accuracy = accuracy(data, order, p);
    report->val_accuracy = accuracy(data, data.val, p);
  }
  return p;
}

}  // namespace xlane
