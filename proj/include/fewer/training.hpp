// Copyright (c) 2026 The fewer authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// MSE training with Adam, per-epoch cosine annealing and early stopping on
// dev MSE. All randomness (shuffling, dropout) comes from one generator
// seeded by TrainConfig::seed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fewer/autodiff.hpp"
#include "fewer/error.hpp"
#include "fewer/features.hpp"
#include "fewer/hash.hpp"
#include "fewer/manifest.hpp"
#include "fewer/metrics.hpp"
#include "fewer/model.hpp"
#include "fewer/table.hpp"

namespace fewer {

struct TrainConfig {
  double lr_max = 1e-3;
  double lr_min = 0.0;
  std::size_t t_max_epochs = 15;
  std::size_t max_epochs = 40;
  std::size_t patience = 5;  // 0 disables early stopping
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double dropout = kDefaultDropout;

  void validate() const {
    if (!(lr_max >= 0.0) || !std::isfinite(lr_max)) {
      throw ConfigError("lr_max must be finite and non-negative");
    }
    if (!(lr_min >= 0.0) || lr_min > lr_max) {
      throw ConfigError("lr_min must lie in [0, lr_max]");
    }
    if (t_max_epochs < 1) throw ConfigError("t_max_epochs must be at least 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  }

  /// Stable text form; its hash is stored in model files.
  std::string canonical() const {
    return format("lr_max=%.17g;lr_min=%.17g;t_max=%zu;max_epochs=%zu;patience=%zu;"
                  "batch=%zu;seed=%llu;dropout=%.17g",
                  lr_max, lr_min, t_max_epochs, max_epochs, patience, batch_size,
                  static_cast<unsigned long long>(seed), dropout);
  }
};

/// Cosine annealing without restarts; flat at lr_min after t_max epochs.
inline double cosine_lr(double epoch, const TrainConfig& cfg) {
  if (epoch < 0.0) throw ParameterError("cosine_lr: negative epoch");
  const double t_max = static_cast<double>(cfg.t_max_epochs);
  const double t = std::min(epoch, t_max);
  return cfg.lr_min +
         0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + std::cos(std::numbers::pi * t / t_max));
}

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// Bias-corrected Adam update applied in place.
inline void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                      AdamState& state, double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters vs " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.emplace_back(p->rows(), p->cols());
      state.second_moment.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks a different parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    if (!p.same_shape(g) || !p.same_shape(m)) {
      throw ShapeError("adam_step: gradient shape " + g.shape_string() +
                       " does not match parameter " + p.shape_string());
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

/// One training or evaluation example. Feature matrices are frames × dim.
struct Example {
  std::string id;
  Tensor speech;
  Tensor text;
  double target = 0.0;
};

/// Reads both feature files of every pair; targets are the scored WERs.
inline std::vector<Example> load_examples(std::span<const ScoredPair> pairs) {
  std::vector<Example> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.record.id, read_features(p.record.speech_feature_path).to_tensor(),
                   read_features(p.record.text_feature_path).to_tensor(), p.wer});
  }
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;  // 0-based; lr is the rate used during this epoch
  double train_mse = 0.0;
  double dev_mse = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  EstimatorModel model;  // best-dev snapshot
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_dev_mse = 0.0;
};

inline void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,train_mse,dev_mse,lr\n";
  for (const auto& h : history) {
    out << format("%zu,%.17g,%.17g,%.17g\n", h.epoch, h.train_mse, h.dev_mse, h.lr);
  }
}

/// Eval-mode estimates, one example at a time through the inference path.
inline std::vector<double> predict(const EstimatorModel& m,
                                   std::span<const Example> examples) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(estimate(m, ex.speech, ex.text));
  return out;
}

namespace detail {

inline std::vector<double> targets_of(std::span<const Example> examples) {
  std::vector<double> t;
  t.reserve(examples.size());
  for (const auto& ex : examples) t.push_back(ex.target);
  return t;
}

inline void check_examples(std::span<const Example> examples, const EstimatorModel& m,
                           const char* split) {
  if (examples.empty()) throw DataError(std::string("train: empty ") + split + " split");
  for (const auto& ex : examples) {
    if (ex.speech.cols() != m.config.speech_dim || ex.text.cols() != m.config.text_dim) {
      throw DataError(std::string("train: ") + split + " example '" + ex.id +
                      "' has feature dims " + std::to_string(ex.speech.cols()) + "/" +
                      std::to_string(ex.text.cols()) + ", model expects " +
                      std::to_string(m.config.speech_dim) + "/" +
                      std::to_string(m.config.text_dim));
    }
    if (ex.speech.rows() == 0 || ex.text.rows() == 0) {
      throw DataError(std::string("train: ") + split + " example '" + ex.id +
                      "' has an empty sequence");
    }
    if (!(ex.target >= 0.0 && ex.target <= 1.0)) {
      throw DataError(std::string("train: ") + split + " example '" + ex.id +
                      "' target outside [0, 1]");
    }
  }
}

/// Loss node for one minibatch. Average pooling has no parameters, so pooled
/// rows are precomputed and the head runs on the whole batch at once; the
/// BiLSTM path runs each utterance on the shared tape.
inline Var batch_loss(Tape& tape, const BoundModel& bound,
                      std::span<const Example> examples,
                      std::span<const std::size_t> batch,
                      const std::vector<Tensor>* pooled, std::mt19937_64& rng) {
  const EstimatorModel& m = *bound.model;
  if (pooled != nullptr) {
    const std::size_t d = m.config.aggregated_dim();
    Tensor x(batch.size(), d);
    Tensor y(batch.size(), 1);
    for (std::size_t r = 0; r < batch.size(); ++r) {
      const Tensor& row = (*pooled)[batch[r]];
      std::copy(row.values().begin(), row.values().end(), x.row(r).begin());
      y[r] = examples[batch[r]].target;
    }
    Var est = head_forward(bound, tape.constant(std::move(x)), Mode::train, rng);
    Var diff = sub(est, tape.constant(std::move(y)));
    return mean(mul(diff, diff));
  }
  Var total;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Example& ex = examples[batch[r]];
    Var est = estimate(tape, bound, ex.speech, ex.text, Mode::train, rng);
    Var diff = sub(est, tape.constant(Tensor(1, 1, ex.target)));
    Var sq = mul(diff, diff);
    total = r == 0 ? sq : add(total, sq);
  }
  return scale(total, 1.0 / static_cast<double>(batch.size()));
}

}  // namespace detail

/// Trains `model` on `train_set`, selecting the epoch with the lowest dev MSE.
/// Stops at `max_epochs` or after `patience` epochs without improvement.
inline TrainResult train(EstimatorModel model, std::span<const Example> train_set,
                         std::span<const Example> dev_set, const TrainConfig& cfg) {
  cfg.validate();
  detail::check_examples(train_set, model, "train");
  detail::check_examples(dev_set, model, "dev");
  model.config.dropout = cfg.dropout;
  model.training_config_hash = Fnv1a().update(cfg.canonical()).hex();

  std::optional<std::vector<Tensor>> pooled;
  if (model.config.aggregator == Aggregator::avg_pool) {
    pooled.emplace();
    pooled->reserve(train_set.size());
    for (const auto& ex : train_set) pooled->push_back(aggregate(model, ex.speech, ex.text));
  }

  std::mt19937_64 rng(cfg.seed);
  AdamState adam;
  const auto params = model.parameters();
  const auto dev_targets = detail::targets_of(dev_set);

  TrainResult result;
  result.model = model;
  result.best_dev_mse = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cosine_lr(static_cast<double>(epoch), cfg);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      Tape tape;
      const BoundModel bound = bind(tape, model);
      Var loss = detail::batch_loss(tape, bound, train_set, batch,
                                    pooled ? &*pooled : nullptr, rng);
      const double loss_value = loss.value()[0];
      if (!std::isfinite(loss_value)) {
        throw NumericError(format("train: non-finite loss at epoch %zu, batch starting "
                                  "at %zu (lr %.3g, batch size %zu)",
                                  epoch, start, lr, batch.size()));
      }
      loss_sum += loss_value * static_cast<double>(batch.size());
      const Gradients grads = tape.backward(loss);
      std::vector<Tensor> g;
      g.reserve(params.size());
      for (const Var& p : bound.params) g.push_back(grads.of(p));
      adam_step(params, g, adam, lr);
    }
    if (!model.all_finite()) {
      throw NumericError(format("train: parameters became non-finite in epoch %zu", epoch));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_mse = loss_sum / static_cast<double>(train_set.size());
    rec.dev_mse = mse_loss(predict(model, dev_set), dev_targets);
    if (!std::isfinite(rec.dev_mse)) {
      throw NumericError(format("train: non-finite dev MSE at epoch %zu", epoch));
    }
    result.history.push_back(rec);

    if (rec.dev_mse < result.best_dev_mse) {
      result.best_dev_mse = rec.dev_mse;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace fewer
