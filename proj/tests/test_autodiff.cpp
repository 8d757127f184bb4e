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

#include <cmath>
#include <functional>
#include <random>

#include "fewer/autodiff.hpp"
#include "gradient_cases.hpp"
#include "test_util.hpp"

namespace fewer {
namespace {

using testing::random_tensor;

TEST(Autodiff, LeafGradientIsOne) {
  Tape tape;
  Var x = tape.leaf(Tensor(1, 1, 3.0));
  EXPECT_EQ(tape.backward(x).of(x)[0], 1.0);
}

TEST(Autodiff, RepeatedUseAccumulates) {
  Tape tape;
  Var x = tape.leaf(Tensor(1, 1, 3.0));
  EXPECT_EQ(tape.backward(add(x, x)).of(x)[0], 2.0);
}

TEST(Autodiff, NonScalarLossRejected) {
  Tape tape;
  Var x = tape.leaf(Tensor(1, 2));
  EXPECT_THROW(tape.backward(x), ShapeError);
}

TEST(Autodiff, MatmulGradientHandCase) {
  Tape tape;
  Var a = tape.leaf(Tensor::row_vector({1, 2}));
  Var b = tape.leaf(Tensor::from_rows({{3}, {4}}));
  const Gradients g = tape.backward(sum(matmul(a, b)));
  EXPECT_EQ(g.of(a), Tensor::row_vector({3, 4}));
  EXPECT_EQ(g.of(b), Tensor::from_rows({{1}, {2}}));
}

TEST(Autodiff, SigmoidDerivativeAtZero) {
  Tape tape;
  Var x = tape.leaf(Tensor(1, 1, 0.0));
  EXPECT_DOUBLE_EQ(tape.backward(sigmoid(x)).of(x)[0], 0.25);
}

TEST(Autodiff, MeanPoolDistributesEvenly) {
  Tape tape;
  Var x = tape.leaf(Tensor(4, 3, 1.0));
  const Tensor g = tape.backward(sum(mean_pool(x))).of(x);
  for (double v : g.values()) EXPECT_EQ(v, 0.25);
}

TEST(Autodiff, ConcatRoutesGradientByColumnRange) {
  Tape tape;
  Var a = tape.leaf(Tensor::row_vector({1}));
  Var b = tape.leaf(Tensor::row_vector({2, 3}));
  Var c = concat_cols(a, b);
  const Gradients g = tape.backward(sum(mul(c, tape.constant(Tensor::row_vector({5, 6, 7})))));
  EXPECT_EQ(g.of(a), Tensor::row_vector({5}));
  EXPECT_EQ(g.of(b), Tensor::row_vector({6, 7}));
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
  Tape tape;
  Var x = tape.leaf(Tensor(1, 2, 1.0));
  Var c = tape.constant(Tensor(1, 2, 2.0));
  const Gradients g = tape.backward(sum(mul(x, c)));
  EXPECT_FALSE(g.has(c));
  EXPECT_TRUE(g.has(x));
}

TEST(Autodiff, ParamsAreBorrowedNotCopied) {
  Tensor w(1, 2, 1.0);
  Tape tape;
  Var p = tape.param(w);
  EXPECT_EQ(&p.value(), &w);
}

TEST(Autodiff, MixedTapesRejected) {
  Tape t1, t2;
  Var a = t1.leaf(Tensor(1, 1));
  Var b = t2.leaf(Tensor(1, 1));
  EXPECT_THROW(add(a, b), Error);
}

TEST(Autodiff, BinaryShapeMismatch) {
  Tape tape;
  Var a = tape.leaf(Tensor(1, 2));
  Var b = tape.leaf(Tensor(1, 3));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(a, b), ShapeError);
}

TEST(Dropout, EvalModeAndZeroRateAreIdentity) {
  std::mt19937_64 rng(1);
  Tape tape;
  Var x = tape.leaf(Tensor::row_vector({1, 2, 3}));
  EXPECT_EQ(dropout(x, 0.5, Mode::eval, rng).id(), x.id());
  EXPECT_EQ(dropout(x, 0.0, Mode::train, rng).id(), x.id());
}

TEST(Dropout, RateOutsideRangeRejected) {
  std::mt19937_64 rng(1);
  Tape tape;
  Var x = tape.leaf(Tensor(1, 3));
  EXPECT_THROW(dropout(x, 1.0, Mode::train, rng), ParameterError);
  EXPECT_THROW(dropout(x, -0.1, Mode::train, rng), ParameterError);
}

TEST(Dropout, MonteCarloMeanMatchesInput) {
  // Each output entry is x/(1-p) with probability 1-p, else 0; its standard
  // deviation is x·sqrt(p/(1-p)). The sample mean over N trials must sit
  // within 3σ/sqrt(N) of x.
  constexpr int kTrials = 10000;
  constexpr double kRate = 0.5;
  std::mt19937_64 rng(2024);
  const Tensor x = Tensor::row_vector({1.0, -2.0, 0.5, 4.0});
  Tensor total(1, 4);
  for (int t = 0; t < kTrials; ++t) {
    Tape tape;
    const Tensor& y = dropout(tape.leaf(x), kRate, Mode::train, rng).value();
    for (std::size_t i = 0; i < 4; ++i) total[i] += y[i];
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double sigma = std::abs(x[i]) * std::sqrt(kRate / (1.0 - kRate));
    EXPECT_NEAR(total[i] / kTrials, x[i], 3.0 * sigma / std::sqrt(double(kTrials)));
  }
}

TEST(Dropout, GradientFollowsMask) {
  std::mt19937_64 rng(5);
  Tape tape;
  Var x = tape.leaf(Tensor(1, 200, 1.0));
  Var y = dropout(x, 0.3, Mode::train, rng);
  const Tensor g = tape.backward(sum(y)).of(x);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(g[i], y.value()[i]);
}

class GradientCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradientCheck, EveryOpMatchesFiniteDifferences) {
  const auto seed = static_cast<std::uint64_t>(GetParam());
  for (const auto& [name, err] : testing::op_gradient_errors(seed)) {
    EXPECT_LE(err, testing::kGradTolerance) << name << " seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientCheck, ::testing::Range(0, 100));

TEST(Autodiff, BackwardIsBitDeterministic) {
  auto run = [] {
    std::mt19937_64 rng(77);
    const Tensor x = random_tensor(4, 6, rng);
    const Tensor w = random_tensor(6, 3, rng);
    Tape tape;
    Var p = tape.param(w);
    Var h = layer_norm(relu(matmul(tape.constant(x), p)), tape.constant(Tensor(1, 3, 1.0)),
                       tape.constant(Tensor(1, 3)));
    Var d = dropout(h, 0.1, Mode::train, rng);
    return tape.backward(mean(mul(d, d))).of(p);
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace fewer
