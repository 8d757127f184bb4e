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

// Reverse-mode automatic differentiation over 2-D tensors.
//
// A Tape records every operation in execution order. Node inputs always refer
// to earlier nodes, so the node list is already a topological order and the
// backward pass is a single reverse sweep. Parameters are borrowed rather than
// copied: the tape keeps a pointer to the caller's tensor, which must outlive
// the tape. One tape belongs to one thread.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fewer/error.hpp"
#include "fewer/tensor.hpp"

namespace fewer {

enum class Mode { train, eval };

enum class Unary { relu, sigmoid, tanh };
enum class Binary { add, mul, sub };

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradients produced by one backward sweep, indexed by node id. Nodes that
/// do not depend on any differentiable leaf have an empty gradient.
class Gradients {
 public:
  explicit Gradients(std::vector<Tensor> grads) : grads_(std::move(grads)) {}

  const Tensor& of(Var v) const { return grads_.at(v.id()); }
  bool has(Var v) const { return !grads_.at(v.id()).empty(); }

 private:
  std::vector<Tensor> grads_;
};

class Tape {
 public:
  enum class Op : std::uint8_t {
    leaf,
    matmul,
    add,
    sub,
    mul,
    relu,
    sigmoid,
    tanh,
    layer_norm,
    mean_pool,
    concat_cols,
    dropout,
    add_row,
    sum,
    mean,
    scale,
    slice_cols,
    take_row,
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf owning its value.
  Var leaf(Tensor value) { return push_leaf(std::move(value), nullptr, true); }
  /// Differentiable leaf borrowing a caller-owned parameter tensor.
  Var param(const Tensor& value) { return push_leaf(Tensor{}, &value, true); }
  /// Non-differentiable input borrowing a caller-owned tensor.
  Var constant(const Tensor& value) { return push_leaf(Tensor{}, &value, false); }
  /// Non-differentiable input owning its value.
  Var constant(Tensor&& value) { return push_leaf(std::move(value), nullptr, false); }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Tensor& value(Var v) const { return nodes_.at(v.id()).get(); }
  Op op(Var v) const { return nodes_.at(v.id()).op; }
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }

  /// Reverse accumulation from a 1×1 loss node.
  Gradients backward(Var loss) const;

  // Node construction used by the op functions below.
  struct Node {
    Op op = Op::leaf;
    std::array<std::size_t, 3> inputs{};
    std::uint8_t input_count = 0;
    bool requires_grad = false;
    Tensor value;
    const Tensor* borrowed = nullptr;
    Tensor aux;                  // dropout mask, layer-norm normalised values
    std::vector<double> aux_vec;  // layer-norm inverse std per row
    double scalar = 0.0;
    std::size_t offset = 0;

    const Tensor& get() const { return borrowed ? *borrowed : value; }
  };

  Var push(Node node) {
    for (std::uint8_t i = 0; i < node.input_count; ++i) {
      if (node.inputs[i] >= nodes_.size()) {
        throw ShapeError("tape: node input refers to a later node");
      }
      node.requires_grad = node.requires_grad || nodes_[node.inputs[i]].requires_grad;
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
  }

  void check_owner(Var v) const {
    if (v.tape() != this || v.id() >= nodes_.size()) {
      throw ShapeError("tape: variable belongs to a different tape");
    }
  }

 private:
  Var push_leaf(Tensor owned, const Tensor* borrowed, bool requires_grad) {
    Node n;
    n.op = Op::leaf;
    n.value = std::move(owned);
    n.borrowed = borrowed;
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const {
  if (tape_ == nullptr) throw ShapeError("Var: unbound variable");
  return tape_->value(*this);
}

namespace detail {

inline Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ShapeError("autodiff: operands live on different tapes");
  }
  a.tape()->check_owner(a);
  a.tape()->check_owner(b);
  return *a.tape();
}

inline Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw ShapeError("autodiff: unbound variable");
  a.tape()->check_owner(a);
  return *a.tape();
}

inline Tape::Node unary_node(Tape::Op op, Var x, Tensor value) {
  Tape::Node n;
  n.op = op;
  n.inputs[0] = x.id();
  n.input_count = 1;
  n.value = std::move(value);
  return n;
}

inline Tape::Node binary_node(Tape::Op op, Var a, Var b, Tensor value) {
  Tape::Node n;
  n.op = op;
  n.inputs[0] = a.id();
  n.inputs[1] = b.id();
  n.input_count = 2;
  n.value = std::move(value);
  return n;
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  return t.push(detail::binary_node(Tape::Op::matmul, a, b,
                                    kernels::matmul(a.value(), b.value())));
}

inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  return t.push(detail::binary_node(Tape::Op::add, a, b,
                                    kernels::add(a.value(), b.value())));
}

inline Var sub(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  return t.push(detail::binary_node(Tape::Op::sub, a, b,
                                    kernels::sub(a.value(), b.value())));
}

inline Var mul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  return t.push(detail::binary_node(Tape::Op::mul, a, b,
                                    kernels::mul(a.value(), b.value())));
}

inline Var relu(Var x) {
  return detail::tape_of(x).push(
      detail::unary_node(Tape::Op::relu, x, kernels::relu(x.value())));
}

inline Var sigmoid(Var x) {
  return detail::tape_of(x).push(
      detail::unary_node(Tape::Op::sigmoid, x, kernels::sigmoid(x.value())));
}

inline Var tanh(Var x) {
  return detail::tape_of(x).push(
      detail::unary_node(Tape::Op::tanh, x, kernels::tanh(x.value())));
}

inline Var elementwise(Var x, Unary kind) {
  switch (kind) {
    case Unary::relu: return relu(x);
    case Unary::sigmoid: return sigmoid(x);
    case Unary::tanh: return tanh(x);
  }
  throw ParameterError("elementwise: unknown unary kind");
}

inline Var elementwise(Var a, Var b, Binary kind) {
  switch (kind) {
    case Binary::add: return add(a, b);
    case Binary::mul: return mul(a, b);
    case Binary::sub: return sub(a, b);
  }
  throw ParameterError("elementwise: unknown binary kind");
}

/// x[B×n] + bias[1×n] broadcast over rows.
inline Var add_row(Var x, Var bias) {
  Tape& t = detail::same_tape(x, bias);
  return t.push(detail::binary_node(Tape::Op::add_row, x, bias,
                                    kernels::add_row(x.value(), bias.value())));
}

/// Row-wise layer normalisation with population variance.
inline Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
  Tape& t = detail::same_tape(x, gain);
  detail::same_tape(x, bias);
  const Tensor& g = gain.value();
  const Tensor& b = bias.value();
  if (g.rows() != 1 || g.cols() != x.value().cols() || !g.same_shape(b)) {
    throw ShapeError("layer_norm: gain/bias must be 1x" +
                     std::to_string(x.value().cols()));
  }
  auto cache = kernels::layer_norm_stats(x.value(), eps);
  Tensor out = cache.normalized;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = row[c] * g[c] + b[c];
  }
  Tape::Node n;
  n.op = Tape::Op::layer_norm;
  n.inputs = {x.id(), gain.id(), bias.id()};
  n.input_count = 3;
  n.value = std::move(out);
  n.aux = std::move(cache.normalized);
  n.aux_vec = std::move(cache.inv_std);
  n.scalar = eps;
  return t.push(std::move(n));
}

inline Var mean_pool(Var x) {
  return detail::tape_of(x).push(
      detail::unary_node(Tape::Op::mean_pool, x, kernels::mean_pool(x.value())));
}

inline Var concat_cols(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  auto n = detail::binary_node(Tape::Op::concat_cols, a, b,
                               kernels::concat_cols(a.value(), b.value()));
  n.offset = a.value().cols();
  return t.push(std::move(n));
}

/// Inverted dropout. Eval mode and rate 0 return `x` itself without touching
/// the generator.
inline Var dropout(Var x, double rate, Mode mode, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout: rate must lie in [0, 1), got " +
                         std::to_string(rate));
  }
  Tape& t = detail::tape_of(x);
  if (mode == Mode::eval || rate == 0.0) return x;
  const Tensor& in = x.value();
  Tensor mask(in.rows(), in.cols());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.values()) m = uniform(rng) >= rate ? keep_scale : 0.0;
  auto n = detail::unary_node(Tape::Op::dropout, x, kernels::mul(in, mask));
  n.aux = std::move(mask);
  return t.push(std::move(n));
}

/// Sum of all entries, 1×1.
inline Var sum(Var x) {
  const Tensor& in = x.value();
  double s = 0.0;
  for (double v : in.values()) s += v;
  return detail::tape_of(x).push(
      detail::unary_node(Tape::Op::sum, x, Tensor(1, 1, s)));
}

/// Mean of all entries, 1×1.
inline Var mean(Var x) {
  const Tensor& in = x.value();
  if (in.empty()) throw ShapeError("mean: empty tensor");
  double s = 0.0;
  for (double v : in.values()) s += v;
  return detail::tape_of(x).push(detail::unary_node(
      Tape::Op::mean, x, Tensor(1, 1, s / static_cast<double>(in.size()))));
}

inline Var scale(Var x, double factor) {
  auto n = detail::unary_node(Tape::Op::scale, x,
                              kernels::map(x.value(), [factor](double v) {
                                return v * factor;
                              }));
  n.scalar = factor;
  return detail::tape_of(x).push(std::move(n));
}

inline Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  auto n = detail::unary_node(Tape::Op::slice_cols, x,
                              kernels::slice_cols(x.value(), begin, count));
  n.offset = begin;
  return detail::tape_of(x).push(std::move(n));
}

inline Var take_row(Var x, std::size_t r) {
  auto n = detail::unary_node(Tape::Op::take_row, x, kernels::take_row(x.value(), r));
  n.offset = r;
  return detail::tape_of(x).push(std::move(n));
}

inline Gradients Tape::backward(Var loss) const {
  check_owner(loss);
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  std::vector<Tensor> grads(nodes_.size());
  grads[loss.id()] = Tensor(1, 1, 1.0);

  auto wants = [&](std::size_t id) { return nodes_[id].requires_grad; };
  auto send = [&](std::size_t id, Tensor g) {
    if (!wants(id)) return;
    if (grads[id].empty()) {
      grads[id] = std::move(g);
    } else {
      kernels::accumulate(grads[id], g);
    }
  };
  // Zero-initialised gradient buffer for in-place sparse accumulation.
  auto slot = [&](std::size_t id) -> Tensor& {
    if (grads[id].empty()) {
      const Tensor& x = nodes_[id].get();
      grads[id] = Tensor(x.rows(), x.cols());
    }
    return grads[id];
  };

  for (std::size_t k = loss.id() + 1; k-- > 0;) {
    const Node& n = nodes_[k];
    if (grads[k].empty() || !n.requires_grad || n.op == Op::leaf) continue;
    const Tensor& g = grads[k];
    const std::size_t a = n.inputs[0];
    const std::size_t b = n.inputs[1];
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::matmul:
        if (wants(a)) send(a, kernels::matmul_bt(g, nodes_[b].get()));
        if (wants(b)) send(b, kernels::matmul_at(nodes_[a].get(), g));
        break;
      case Op::add:
        send(a, g);
        send(b, g);
        break;
      case Op::sub:
        send(a, g);
        if (wants(b)) send(b, kernels::map(g, [](double v) { return -v; }));
        break;
      case Op::mul:
        if (wants(a)) send(a, kernels::mul(g, nodes_[b].get()));
        if (wants(b)) send(b, kernels::mul(g, nodes_[a].get()));
        break;
      case Op::relu:
        send(a, kernels::zip(g, nodes_[a].get(), "relu'", [](double gv, double x) {
               return x > 0.0 ? gv : 0.0;
             }));
        break;
      case Op::sigmoid:
        send(a, kernels::zip(g, n.value, "sigmoid'", [](double gv, double s) {
               return gv * s * (1.0 - s);
             }));
        break;
      case Op::tanh:
        send(a, kernels::zip(g, n.value, "tanh'", [](double gv, double t) {
               return gv * (1.0 - t * t);
             }));
        break;
      case Op::layer_norm: {
        const std::size_t gain_id = n.inputs[1];
        const std::size_t bias_id = n.inputs[2];
        const Tensor& gain = nodes_[gain_id].get();
        const Tensor& xhat = n.aux;
        const std::size_t rows = g.rows();
        const std::size_t cols = g.cols();
        const double inv_n = 1.0 / static_cast<double>(cols);
        if (wants(a)) {
          Tensor dx(rows, cols);
          std::vector<double> dxhat(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_d = 0.0;
            double mean_dx = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              dxhat[c] = g(r, c) * gain[c];
              mean_d += dxhat[c];
              mean_dx += dxhat[c] * xhat(r, c);
            }
            mean_d *= inv_n;
            mean_dx *= inv_n;
            for (std::size_t c = 0; c < cols; ++c) {
              dx(r, c) = n.aux_vec[r] * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
            }
          }
          send(a, std::move(dx));
        }
        if (wants(gain_id) || wants(bias_id)) {
          Tensor dgain(1, cols);
          Tensor dbias(1, cols);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              dgain[c] += g(r, c) * xhat(r, c);
              dbias[c] += g(r, c);
            }
          }
          send(gain_id, std::move(dgain));
          send(bias_id, std::move(dbias));
        }
        break;
      }
      case Op::mean_pool: {
        const Tensor& x = nodes_[a].get();
        Tensor dx(x.rows(), x.cols());
        const double inv = 1.0 / static_cast<double>(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          for (std::size_t c = 0; c < x.cols(); ++c) dx(r, c) = g[c] * inv;
        }
        send(a, std::move(dx));
        break;
      }
      case Op::concat_cols: {
        const std::size_t left = n.offset;
        if (wants(a)) send(a, kernels::slice_cols(g, 0, left));
        if (wants(b)) send(b, kernels::slice_cols(g, left, g.cols() - left));
        break;
      }
      case Op::dropout:
        send(a, kernels::mul(g, n.aux));
        break;
      case Op::add_row: {
        send(a, g);
        if (wants(b)) {
          Tensor db(1, g.cols());
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < g.cols(); ++c) db[c] += g(r, c);
          }
          send(b, std::move(db));
        }
        break;
      }
      case Op::sum: {
        const Tensor& x = nodes_[a].get();
        send(a, Tensor(x.rows(), x.cols(), g[0]));
        break;
      }
      case Op::mean: {
        const Tensor& x = nodes_[a].get();
        send(a, Tensor(x.rows(), x.cols(), g[0] / static_cast<double>(x.size())));
        break;
      }
      case Op::scale: {
        const double f = n.scalar;
        send(a, kernels::map(g, [f](double v) { return v * f; }));
        break;
      }
      case Op::slice_cols: {
        if (!wants(a)) break;
        Tensor& dx = slot(a);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < g.cols(); ++c) dx(r, n.offset + c) += g(r, c);
        }
        break;
      }
      case Op::take_row: {
        if (!wants(a)) break;
        Tensor& dx = slot(a);
        for (std::size_t c = 0; c < g.cols(); ++c) dx(n.offset, c) += g[c];
        break;
      }
    }
  }
  return Gradients(std::move(grads));
}

}  // namespace fewer
