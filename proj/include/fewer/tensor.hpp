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

// Dense row-major 2-D tensor of doubles and the tape-free kernels shared by
// the inference path and the autodiff tape.

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fewer/error.hpp"

namespace fewer {

class Tensor {
 public:
  Tensor() = default;

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
  }

  /// 1×n row vector.
  static Tensor row_vector(std::initializer_list<double> values) {
    return Tensor(1, values.size(), std::vector<double>(values));
  }

  static Tensor from_rows(
      std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged rows in from_rows");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(r, c, std::move(data));
  }

  static Tensor identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_row_vector() const noexcept { return rows_ == 1; }
  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace kernels {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

inline ConstMap as_eigen(const Tensor& t) {
  return ConstMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}
inline Map as_eigen(Tensor& t) {
  return Map(t.values().data(), static_cast<Eigen::Index>(t.rows()),
             static_cast<Eigen::Index>(t.cols()));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

/// a[m×k] · b[k×n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ (" + a.shape_string() +
                     " * " + b.shape_string() + ")");
  }
  Tensor out(a.rows(), b.cols());
  if (a.cols() == 0) return out;
  as_eigen(out).noalias() = as_eigen(a) * as_eigen(b);
  return out;
}

/// a · bᵀ
inline Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_bt: inner dimensions differ");
  Tensor out(a.rows(), b.rows());
  as_eigen(out).noalias() = as_eigen(a) * as_eigen(b).transpose();
  return out;
}

/// aᵀ · b
inline Tensor matmul_at(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_at: inner dimensions differ");
  Tensor out(a.cols(), b.cols());
  as_eigen(out).noalias() = as_eigen(a).transpose() * as_eigen(b);
  return out;
}

/// out += a (same shape).
inline void accumulate(Tensor& out, const Tensor& a) {
  require_same_shape(out, a, "accumulate");
  auto o = out.values();
  auto v = a.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += v[i];
}

template <typename F>
Tensor map(const Tensor& x, F&& f) {
  Tensor out(x.rows(), x.cols());
  auto in = x.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(in[i]);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F&& f) {
  require_same_shape(a, b, op);
  Tensor out(a.rows(), a.cols());
  auto x = a.values();
  auto y = b.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i], y[i]);
  return out;
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ReLU subgradient at 0 is 0.
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}
inline Tensor sub(const Tensor& a, const Tensor& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}
inline Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, "mul", [](double x, double y) { return x * y; });
}
inline Tensor relu(const Tensor& x) {
  return map(x, [](double v) { return relu(v); });
}
inline Tensor sigmoid(const Tensor& x) {
  return map(x, [](double v) { return sigmoid(v); });
}
inline Tensor tanh(const Tensor& x) {
  return map(x, [](double v) { return std::tanh(v); });
}

/// x[B×n] + bias[1×n], bias added to every row.
inline Tensor add_row(const Tensor& x, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError("add_row: bias " + bias.shape_string() +
                     " does not broadcast over " + x.shape_string());
  }
  Tensor out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  return out;
}

/// Exact running sum kept as non-overlapping partials (Shewchuk's algorithm).
class ExactSum {
 public:
  void add(double x) {
    std::size_t n = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[n++] = lo;
      x = hi;
    }
    partials_.resize(n);
    partials_.push_back(x);
  }

  /// Sign of the exact sum: the largest partial dominates the rest.
  int sign() const {
    for (auto it = partials_.rbegin(); it != partials_.rend(); ++it) {
      if (*it != 0.0) return *it > 0.0 ? 1 : -1;
    }
    return 0;
  }

  /// Sum of the partials, smallest first; within a few ulps of the exact sum.
  double approx() const {
    double s = 0.0;
    for (double p : partials_) s += p;
    return s;
  }

 private:
  std::vector<double> partials_;
};

/// Correctly rounded (ties to even) value of sum / count. Independent of the
/// order in which terms were added.
inline double exact_quotient(const ExactSum& sum, double count) {
  double q = sum.approx() / count;
  if (!std::isfinite(q)) return q;
  // Sign of S − n·(q + half_gap), each product split exactly with fma.
  auto side = [&](double half_gap) {
    ExactSum d = sum;
    for (double a : {q, half_gap}) {
      const double p = a * count;
      d.add(-p);
      d.add(-std::fma(a, count, -p));
    }
    return d.sign();
  };
  auto even = [](double v) {
    int e;
    const double m = std::frexp(v, &e);
    return std::fmod(std::ldexp(m, 53), 2.0) == 0.0;
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 8; ++iter) {
    const double up = std::nextafter(q, kInf);
    const double down = std::nextafter(q, -kInf);
    const int above = side((up - q) / 2);
    const int below = side((down - q) / 2);
    if (above > 0) {
      q = up;
    } else if (below < 0) {
      q = down;
    } else {
      if (above == 0 && !even(q)) return up;
      if (below == 0 && !even(q)) return down;
      return q;
    }
  }
  return q;
}

/// Column-wise mean over rows (frames), correctly rounded. Exact for constant
/// columns and invariant to frame order and to repeating every frame.
inline Tensor mean_pool(const Tensor& x) {
  if (x.rows() == 0) throw DataError("mean_pool: empty sequence");
  std::vector<ExactSum> sums(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) sums[c].add(row[c]);
  }
  Tensor out(1, x.cols());
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) out[c] = exact_quotient(sums[c], n);
  return out;
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != 1 || b.rows() != 1) {
    throw ShapeError("concat_cols: inputs must be row vectors, got " +
                     a.shape_string() + " and " + b.shape_string());
  }
  if (a.cols() == 0 || b.cols() == 0) {
    throw ShapeError("concat_cols: empty operand");
  }
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  data.insert(data.end(), a.values().begin(), a.values().end());
  data.insert(data.end(), b.values().begin(), b.values().end());
  const std::size_t n = data.size();
  return Tensor(1, n, std::move(data));
}

inline Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.cols() || count == 0) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     x.shape_string());
  }
  Tensor out(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

inline Tensor take_row(const Tensor& x, std::size_t r) {
  if (r >= x.rows()) throw ShapeError("take_row: row index out of range");
  auto src = x.row(r);
  return Tensor(1, x.cols(), std::vector<double>(src.begin(), src.end()));
}

/// Per-row layer normalisation statistics: normalised values and 1/sqrt(var+eps).
struct LayerNormCache {
  Tensor normalized;
  std::vector<double> inv_std;
};

inline LayerNormCache layer_norm_stats(const Tensor& x, double eps) {
  if (x.cols() < 2) {
    throw DataError("layer_norm: need at least 2 features, got " +
                    std::to_string(x.cols()));
  }
  if (!(eps >= 0.0)) throw ParameterError("layer_norm: eps must be non-negative");
  LayerNormCache cache{Tensor(x.rows(), x.cols()), std::vector<double>(x.rows())};
  const double n = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    cache.inv_std[r] = inv;
    auto out = cache.normalized.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean) * inv;
  }
  return cache;
}

inline Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                         double eps) {
  if (gain.rows() != 1 || gain.cols() != x.cols() || !gain.same_shape(bias)) {
    throw ShapeError("layer_norm: gain/bias must be 1x" + std::to_string(x.cols()));
  }
  Tensor out = layer_norm_stats(x, eps).normalized;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = row[c] * gain[c] + bias[c];
  }
  return out;
}

}  // namespace kernels
}  // namespace fewer
