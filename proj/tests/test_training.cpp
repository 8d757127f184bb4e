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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fewer/training.hpp"
#include "test_util.hpp"

namespace fewer {
namespace {

using testing::random_tensor;

std::vector<Example> toy_examples(std::size_t n, std::size_t ds, std::size_t dt,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    Example ex;
    ex.id = "e" + std::to_string(i);
    ex.speech = random_tensor(2 + rng() % 6, ds, rng);
    ex.text = random_tensor(1 + rng() % 3, dt, rng);
    const Tensor pooled = kernels::mean_pool(ex.speech);
    ex.target = 1.0 / (1.0 + std::exp(-(2.0 * pooled[0] - pooled[1])));
    out.push_back(std::move(ex));
  }
  return out;
}

ModelConfig small_config(Aggregator agg = Aggregator::avg_pool) {
  ModelConfig c;
  c.aggregator = agg;
  c.speech_dim = 4;
  c.text_dim = 3;
  return c;
}

TEST(CosineLr, EndpointsAndSymmetry) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cosine_lr(0, cfg), 1e-3);
  EXPECT_NEAR(cosine_lr(15, cfg), 0.0, 1e-18);
  EXPECT_NEAR(cosine_lr(7.5, cfg), 5e-4, 1e-15);
  EXPECT_NEAR(cosine_lr(7, cfg) + cosine_lr(8, cfg), 1e-3, 1e-15);
  EXPECT_NEAR(cosine_lr(30, cfg), 0.0, 1e-18);
  EXPECT_THROW(cosine_lr(-1, cfg), ParameterError);
}

TEST(CosineLr, NonIncreasingAndBounded) {
  TrainConfig cfg;
  cfg.lr_min = 1e-5;
  double prev = cosine_lr(0, cfg);
  for (int e = 1; e <= 40; ++e) {
    const double lr = cosine_lr(e, cfg);
    EXPECT_LE(lr, prev);
    EXPECT_GE(lr, cfg.lr_min);
    prev = lr;
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Tensor p = Tensor::row_vector({1.0, -2.0});
  std::vector<Tensor*> params{&p};
  std::vector<Tensor> grads{Tensor(1, 2)};
  AdamState s;
  for (int i = 0; i < 5; ++i) adam_step(params, grads, s, 1e-3);
  EXPECT_EQ(p, Tensor::row_vector({1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByLearningRateAgainstSign) {
  Tensor p = Tensor::row_vector({0.0, 0.0, 0.0});
  std::vector<Tensor*> params{&p};
  std::vector<Tensor> grads{Tensor::row_vector({3.0, -0.5, 1e-3})};
  AdamState s;
  adam_step(params, grads, s, 1e-3);
  EXPECT_NEAR(p[0], -1e-3, 1e-9);
  EXPECT_NEAR(p[1], 1e-3, 1e-9);
  EXPECT_NEAR(p[2], -1e-3, 1e-8);
}

TEST(Adam, OpposingGradientsNearlyCancel) {
  Tensor p(1, 1);
  std::vector<Tensor*> params{&p};
  AdamState s;
  adam_step(params, std::vector<Tensor>{Tensor(1, 1, 2.0)}, s, 1e-3);
  adam_step(params, std::vector<Tensor>{Tensor(1, 1, -2.0)}, s, 1e-3);
  EXPECT_LT(std::abs(p[0]), 1e-3);
}

TEST(Adam, MismatchRejected) {
  Tensor p(1, 2);
  std::vector<Tensor*> params{&p};
  AdamState s;
  EXPECT_THROW(adam_step(params, std::vector<Tensor>{}, s, 1e-3), ShapeError);
  EXPECT_THROW(adam_step(params, std::vector<Tensor>{Tensor(2, 1)}, s, 1e-3), ShapeError);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.dropout = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.lr_min = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  const auto data = toy_examples(20, 4, 3, 1);
  const EstimatorModel init = init_model(small_config(), 3);
  TrainConfig cfg;
  cfg.lr_max = 0.0;
  cfg.max_epochs = 2;
  const TrainResult r = train(init, data, data, cfg);
  const auto a = init.parameters();
  const auto b = r.model.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i], *b[i]);
}

TEST(Train, DeterministicForFixedSeed) {
  const auto data = toy_examples(40, 4, 3, 2);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 5;
  const auto a = train(init_model(small_config(), 5), data, data, cfg);
  const auto b = train(init_model(small_config(), 5), data, data, cfg);
  EXPECT_EQ(encode_model(a.model), encode_model(b.model));
  cfg.seed = 6;
  const auto c = train(init_model(small_config(), 5), data, data, cfg);
  EXPECT_NE(encode_model(a.model), encode_model(c.model));
}

TEST(Train, OverfitsSmallSet) {
  const auto data = toy_examples(50, 4, 3, 3);
  TrainConfig cfg;
  cfg.lr_max = 3e-3;
  cfg.t_max_epochs = 150;
  cfg.max_epochs = 150;
  cfg.patience = 0;
  cfg.batch_size = 10;
  cfg.dropout = 0.0;
  const TrainResult r = train(init_model(small_config(), 1), data, data, cfg);
  EXPECT_LT(r.best_dev_mse, 1e-3);
  EXPECT_NEAR(mse_loss(predict(r.model, data), detail::targets_of(data)), r.best_dev_mse,
              1e-15);
}

TEST(Train, BestSnapshotAndHistory) {
  const auto train_set = toy_examples(60, 4, 3, 4);
  const auto dev_set = toy_examples(20, 4, 3, 5);
  TrainConfig cfg;
  cfg.max_epochs = 12;
  cfg.patience = 3;
  cfg.batch_size = 16;
  const TrainResult r = train(init_model(small_config(), 2), train_set, dev_set, cfg);
  ASSERT_FALSE(r.history.empty());
  EXPECT_LE(r.history.size(), cfg.max_epochs);
  double best = r.history.front().dev_mse;
  for (const auto& h : r.history) best = std::min(best, h.dev_mse);
  EXPECT_EQ(r.best_dev_mse, best);
  EXPECT_LE(r.best_dev_mse, r.history.back().dev_mse);
  EXPECT_EQ(r.history[r.best_epoch].dev_mse, best);
  for (std::size_t e = 0; e < r.history.size(); ++e) {
    EXPECT_EQ(r.history[e].epoch, e);
    EXPECT_DOUBLE_EQ(r.history[e].lr, cosine_lr(static_cast<double>(e), cfg));
  }
  EXPECT_FALSE(r.model.training_config_hash.empty());

  std::ostringstream csv;
  write_history_csv(csv, r.history);
  EXPECT_EQ(csv.str().rfind("epoch,train_mse,dev_mse,lr\n", 0), 0u);
}

TEST(Train, PatienceStopsEarly) {
  const auto train_set = toy_examples(30, 4, 3, 6);
  const auto dev_set = toy_examples(10, 4, 3, 7);
  TrainConfig cfg;
  cfg.lr_max = 0.0;
  cfg.max_epochs = 40;
  cfg.patience = 2;
  const TrainResult r = train(init_model(small_config(), 2), train_set, dev_set, cfg);
  EXPECT_EQ(r.history.size(), 3u);
  EXPECT_EQ(r.best_epoch, 0u);
}

TEST(Train, InvalidInputsRejected) {
  const auto data = toy_examples(5, 4, 3, 8);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  EXPECT_THROW(train(init_model(small_config(), 1), {}, data, cfg), DataError);
  EXPECT_THROW(train(init_model(small_config(), 1), data, {}, cfg), DataError);
  auto bad = data;
  bad[0].target = 1.5;
  EXPECT_THROW(train(init_model(small_config(), 1), bad, data, cfg), DataError);
  auto wrong_dim = data;
  wrong_dim[1].speech = Tensor(3, 5);
  EXPECT_THROW(train(init_model(small_config(), 1), wrong_dim, data, cfg), DataError);
}

TEST(Train, BiLstmReducesLoss) {
  const auto data = toy_examples(24, 4, 3, 9);
  TrainConfig cfg;
  cfg.lr_max = 3e-3;
  cfg.max_epochs = 6;
  cfg.patience = 0;
  cfg.batch_size = 8;
  const TrainResult r = train(init_model(small_config(Aggregator::bilstm), 4), data, data, cfg);
  EXPECT_LT(r.history.back().train_mse, r.history.front().train_mse);
  EXPECT_TRUE(r.model.lstm.has_value());
}

}  // namespace
}  // namespace fewer
