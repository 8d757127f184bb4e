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

// Two-tower WER estimator.
//
// Speech and text feature sequences are each reduced to one vector by an
// aggregator, concatenated, and fed to an MLP head:
//
//   hidden (x2): affine -> ReLU -> layer norm -> dropout      widths 600, 32
//   output:      affine -> sigmoid                            width 1
//
// Aggregators: average pooling on both towers, or (baseline) a single-layer
// BiLSTM over speech frames whose final forward and backward hidden states
// are concatenated, with the text tower still average-pooled.
//
// Every forward computation exists twice: a tape-free path used for
// inference and benchmarking, and a taped path used for training. Both call
// the same kernels in the same order, so their outputs are bit-identical.

#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fewer/autodiff.hpp"
#include "fewer/error.hpp"
#include "fewer/features.hpp"
#include "fewer/tensor.hpp"

namespace fewer {

enum class Aggregator : std::uint32_t { avg_pool = 0, bilstm = 1 };

inline const char* to_string(Aggregator a) {
  return a == Aggregator::avg_pool ? "avg_pool" : "bilstm";
}

inline Aggregator parse_aggregator(std::string_view s) {
  if (s == "avg" || s == "avg_pool") return Aggregator::avg_pool;
  if (s == "bilstm") return Aggregator::bilstm;
  throw ConfigError("unknown aggregator '" + std::string(s) + "' (avg|bilstm)");
}

inline constexpr std::array<std::size_t, 2> kHiddenWidths{600, 32};
inline constexpr double kDefaultDropout = 0.1;
inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kForgetGateBias = 1.0;

struct ModelConfig {
  Aggregator aggregator = Aggregator::avg_pool;
  std::size_t speech_dim = 0;
  std::size_t text_dim = 0;
  double dropout = kDefaultDropout;
  double norm_eps = kLayerNormEps;

  /// Width of the concatenated tower outputs.
  std::size_t aggregated_dim() const {
    return aggregator == Aggregator::bilstm ? 2 * speech_dim + text_dim
                                            : speech_dim + text_dim;
  }
};

/// One LSTM direction. Gate blocks are packed along columns in the order
/// input, forget, cell candidate, output.
struct LstmDirection {
  Tensor w_input;   // dim × 4h
  Tensor w_hidden;  // h × 4h
  Tensor bias;      // 1 × 4h

  std::size_t hidden() const { return w_hidden.rows(); }
};

struct BiLstm {
  LstmDirection forward;
  LstmDirection backward;
};

struct DenseLayer {
  Tensor weight;  // in × out
  Tensor bias;    // 1 × out
  Tensor norm_gain;  // 1 × out, empty for the output layer
  Tensor norm_bias;
  bool normalized() const { return !norm_gain.empty(); }
};

struct EstimatorModel {
  ModelConfig config;
  std::optional<BiLstm> lstm;
  std::vector<DenseLayer> layers;
  std::uint64_t seed = 0;
  std::string training_config_hash;

  /// Every learnable tensor in a fixed order (LSTM forward, LSTM backward,
  /// then each dense layer's weight, bias, gain, norm bias).
  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> out;
    if (lstm) {
      for (LstmDirection* d : {&lstm->forward, &lstm->backward}) {
        out.insert(out.end(), {&d->w_input, &d->w_hidden, &d->bias});
      }
    }
    for (auto& l : layers) {
      out.insert(out.end(), {&l.weight, &l.bias});
      if (l.normalized()) out.insert(out.end(), {&l.norm_gain, &l.norm_bias});
    }
    return out;
  }

  std::vector<const Tensor*> parameters() const {
    auto mutable_params = const_cast<EstimatorModel*>(this)->parameters();
    return {mutable_params.begin(), mutable_params.end()};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* t : parameters()) n += t->size();
    return n;
  }

  bool all_finite() const {
    for (const Tensor* t : parameters()) {
      if (!t->all_finite()) return false;
    }
    return true;
  }
};

namespace detail {

inline Tensor uniform_tensor(std::size_t rows, std::size_t cols, double bound,
                             std::mt19937_64& rng) {
  Tensor t(rows, cols);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline double fan_in_bound(std::size_t fan_in) {
  return std::sqrt(1.0 / static_cast<double>(fan_in));
}

inline LstmDirection init_lstm_direction(std::size_t dim, std::size_t hidden,
                                         std::mt19937_64& rng) {
  LstmDirection d;
  d.w_input = uniform_tensor(dim, 4 * hidden, fan_in_bound(dim), rng);
  d.w_hidden = uniform_tensor(hidden, 4 * hidden, fan_in_bound(hidden), rng);
  d.bias = Tensor(1, 4 * hidden);
  for (std::size_t c = hidden; c < 2 * hidden; ++c) d.bias[c] = kForgetGateBias;
  return d;
}

}  // namespace detail

/// Weights ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in)); biases 0 except the LSTM
/// forget gate (1.0); layer-norm gain 1 and bias 0.
inline EstimatorModel init_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.speech_dim < 1 || config.text_dim < 1) {
    throw ConfigError("init_model: feature dimensions must be at least 1");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    throw ConfigError("init_model: dropout must lie in [0, 1)");
  }
  EstimatorModel m;
  m.config = config;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  if (config.aggregator == Aggregator::bilstm) {
    BiLstm lstm;
    lstm.forward = detail::init_lstm_direction(config.speech_dim, config.speech_dim, rng);
    lstm.backward = detail::init_lstm_direction(config.speech_dim, config.speech_dim, rng);
    m.lstm = std::move(lstm);
  }
  std::size_t in = config.aggregated_dim();
  std::vector<std::size_t> widths(kHiddenWidths.begin(), kHiddenWidths.end());
  widths.push_back(1);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::size_t out = widths[i];
    DenseLayer l;
    l.weight = detail::uniform_tensor(in, out, detail::fan_in_bound(in), rng);
    l.bias = Tensor(1, out);
    if (i + 1 < widths.size()) {
      l.norm_gain = Tensor(1, out, 1.0);
      l.norm_bias = Tensor(1, out);
    }
    m.layers.push_back(std::move(l));
    in = out;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Tape-free path.

/// Column mean over frames.
inline Tensor aggregate_avg(const Tensor& frames) { return kernels::mean_pool(frames); }

inline Tensor aggregate_avg(const FeatureSequence& seq) {
  return aggregate_avg(seq.to_tensor());
}

/// Final hidden state of one LSTM direction; `reverse` runs last frame first.
inline Tensor lstm_final_state(const LstmDirection& p, const Tensor& frames,
                               bool reverse) {
  if (frames.rows() == 0) throw DataError("lstm: empty sequence");
  if (frames.cols() != p.w_input.rows()) {
    throw ShapeError("lstm: input dim " + std::to_string(frames.cols()) +
                     " does not match weights " + p.w_input.shape_string());
  }
  const std::size_t h = p.hidden();
  const std::size_t steps = frames.rows();
  const Tensor proj = kernels::add_row(kernels::matmul(frames, p.w_input), p.bias);
  Tensor hidden(1, h);
  Tensor cell(1, h);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    const Tensor pre =
        kernels::add(kernels::take_row(proj, t), kernels::matmul(hidden, p.w_hidden));
    const Tensor i = kernels::sigmoid(kernels::slice_cols(pre, 0, h));
    const Tensor f = kernels::sigmoid(kernels::slice_cols(pre, h, h));
    const Tensor g = kernels::tanh(kernels::slice_cols(pre, 2 * h, h));
    const Tensor o = kernels::sigmoid(kernels::slice_cols(pre, 3 * h, h));
    cell = kernels::add(kernels::mul(f, cell), kernels::mul(i, g));
    hidden = kernels::mul(o, kernels::tanh(cell));
  }
  return hidden;
}

/// [forward state at the last frame, backward state at the first frame].
inline Tensor aggregate_bilstm(const Tensor& frames, const BiLstm& lstm) {
  return kernels::concat_cols(lstm_final_state(lstm.forward, frames, false),
                              lstm_final_state(lstm.backward, frames, true));
}

namespace detail {

inline void check_towers(const EstimatorModel& m, const Tensor& speech,
                         const Tensor& text) {
  if (speech.rows() == 0 || text.rows() == 0) {
    throw DataError("estimate: empty feature sequence");
  }
  if (speech.cols() != m.config.speech_dim || text.cols() != m.config.text_dim) {
    throw ShapeError("estimate: feature dims " + std::to_string(speech.cols()) + "/" +
                     std::to_string(text.cols()) + " do not match model " +
                     std::to_string(m.config.speech_dim) + "/" +
                     std::to_string(m.config.text_dim));
  }
}

inline Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate,
                           std::mt19937_64& rng) {
  Tensor mask(rows, cols);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.values()) m = uniform(rng) >= rate ? keep_scale : 0.0;
  return mask;
}

}  // namespace detail

/// Concatenated tower outputs, 1 × aggregated_dim.
inline Tensor aggregate(const EstimatorModel& m, const Tensor& speech,
                        const Tensor& text) {
  detail::check_towers(m, speech, text);
  const Tensor s = m.config.aggregator == Aggregator::bilstm
                       ? aggregate_bilstm(speech, *m.lstm)
                       : aggregate_avg(speech);
  return kernels::concat_cols(s, aggregate_avg(text));
}

/// MLP head over B × aggregated_dim rows; returns B × 1 estimates.
inline Tensor head_forward(const EstimatorModel& m, const Tensor& x, Mode mode,
                           std::mt19937_64* rng = nullptr) {
  if (x.cols() != m.config.aggregated_dim()) {
    throw ShapeError("head: input width " + std::to_string(x.cols()) +
                     ", expected " + std::to_string(m.config.aggregated_dim()));
  }
  Tensor a = x;
  for (const DenseLayer& l : m.layers) {
    Tensor z = kernels::add_row(kernels::matmul(a, l.weight), l.bias);
    if (!l.normalized()) {
      a = kernels::sigmoid(z);
      break;
    }
    a = kernels::layer_norm(kernels::relu(z), l.norm_gain, l.norm_bias,
                            m.config.norm_eps);
    if (mode == Mode::train && m.config.dropout > 0.0) {
      if (rng == nullptr) throw ParameterError("head: train mode needs a generator");
      a = kernels::mul(a, detail::dropout_mask(a.rows(), a.cols(), m.config.dropout, *rng));
    }
  }
  return a;
}

/// WER estimate in (0, 1) for one utterance and its hypothesis.
inline double estimate(const EstimatorModel& m, const Tensor& speech, const Tensor& text,
                       Mode mode = Mode::eval, std::mt19937_64* rng = nullptr) {
  return head_forward(m, aggregate(m, speech, text), mode, rng)[0];
}

inline double estimate(const EstimatorModel& m, const FeatureSequence& speech,
                       const FeatureSequence& text, Mode mode = Mode::eval,
                       std::mt19937_64* rng = nullptr) {
  return estimate(m, speech.to_tensor(), text.to_tensor(), mode, rng);
}

// ---------------------------------------------------------------------------
// Taped path.

/// Model parameters bound to a tape, in `parameters()` order.
struct BoundModel {
  const EstimatorModel* model = nullptr;
  std::vector<Var> params;

  // Accessors into `params` following the layout of parameters().
  struct LstmVars {
    Var w_input, w_hidden, bias;
  };
  LstmVars lstm(bool backward) const {
    const std::size_t base = backward ? 3 : 0;
    return {params[base], params[base + 1], params[base + 2]};
  }
  struct LayerVars {
    Var weight, bias, gain, norm_bias;
    bool normalized;
  };
  LayerVars layer(std::size_t i) const {
    std::size_t k = model->lstm ? 6 : 0;
    for (std::size_t j = 0; j < i; ++j) k += model->layers[j].normalized() ? 4 : 2;
    if (model->layers[i].normalized()) {
      return {params[k], params[k + 1], params[k + 2], params[k + 3], true};
    }
    return {params[k], params[k + 1], Var{}, Var{}, false};
  }
};

inline BoundModel bind(Tape& tape, const EstimatorModel& m) {
  BoundModel b;
  b.model = &m;
  for (const Tensor* p : m.parameters()) b.params.push_back(tape.param(*p));
  return b;
}

inline Var lstm_final_state(Tape& tape, const BoundModel::LstmVars& p, Var frames,
                            bool reverse) {
  const Tensor& x = frames.value();
  if (x.rows() == 0) throw DataError("lstm: empty sequence");
  const std::size_t h = p.w_hidden.value().rows();
  const std::size_t steps = x.rows();
  Var proj = add_row(matmul(frames, p.w_input), p.bias);
  Var hidden = tape.constant(Tensor(1, h));
  Var cell = tape.constant(Tensor(1, h));
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    Var pre = add(take_row(proj, t), matmul(hidden, p.w_hidden));
    Var i = sigmoid(slice_cols(pre, 0, h));
    Var f = sigmoid(slice_cols(pre, h, h));
    Var g = tanh(slice_cols(pre, 2 * h, h));
    Var o = sigmoid(slice_cols(pre, 3 * h, h));
    cell = add(mul(f, cell), mul(i, g));
    hidden = mul(o, tanh(cell));
  }
  return hidden;
}

inline Var aggregate(Tape& tape, const BoundModel& b, Var speech, Var text) {
  detail::check_towers(*b.model, speech.value(), text.value());
  Var s = b.model->config.aggregator == Aggregator::bilstm
              ? concat_cols(lstm_final_state(tape, b.lstm(false), speech, false),
                            lstm_final_state(tape, b.lstm(true), speech, true))
              : mean_pool(speech);
  return concat_cols(s, mean_pool(text));
}

inline Var head_forward(const BoundModel& b, Var x, Mode mode, std::mt19937_64& rng) {
  const EstimatorModel& m = *b.model;
  if (x.value().cols() != m.config.aggregated_dim()) {
    throw ShapeError("head: input width mismatch");
  }
  Var a = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto l = b.layer(i);
    Var z = add_row(matmul(a, l.weight), l.bias);
    if (!l.normalized) return sigmoid(z);
    a = layer_norm(relu(z), l.gain, l.norm_bias, m.config.norm_eps);
    a = dropout(a, m.config.dropout, mode, rng);
  }
  return a;
}

/// 1×1 estimate node for one utterance.
inline Var estimate(Tape& tape, const BoundModel& b, const Tensor& speech,
                    const Tensor& text, Mode mode, std::mt19937_64& rng) {
  Var x = aggregate(tape, b, tape.constant(speech), tape.constant(text));
  return head_forward(b, x, mode, rng);
}

// ---------------------------------------------------------------------------
// Model files.
//
//   "FEWM" | u32 version | u32 aggregator | u32 speech_dim | u32 text_dim
//   | u32 layer count | per layer: u32 in, u32 out, u32 normalized
//   | f64 dropout | f64 norm_eps | u64 seed | u32 n + n bytes config hash
//   | u32 tensor count | per tensor: u32 rows, u32 cols, rows*cols f64
//
// All integers and floats little-endian.

inline constexpr std::array<char, 4> kModelMagic{'F', 'E', 'W', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const unsigned char> bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(source_ + ": truncated model file reading " + what +
                        " at byte offset " + std::to_string(pos_));
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    const std::uint32_t v = get_u32(bytes_.data() + pos_);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }
  const std::string& source() const { return source_; }

 private:
  std::span<const unsigned char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<char> encode_model(const EstimatorModel& m) {
  detail::ByteWriter w;
  w.raw(kModelMagic.data(), kModelMagic.size());
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(m.config.aggregator));
  w.u32(static_cast<std::uint32_t>(m.config.speech_dim));
  w.u32(static_cast<std::uint32_t>(m.config.text_dim));
  w.u32(static_cast<std::uint32_t>(m.layers.size()));
  for (const auto& l : m.layers) {
    w.u32(static_cast<std::uint32_t>(l.weight.rows()));
    w.u32(static_cast<std::uint32_t>(l.weight.cols()));
    w.u32(l.normalized() ? 1u : 0u);
  }
  w.f64(m.config.dropout);
  w.f64(m.config.norm_eps);
  w.u64(m.seed);
  w.u32(static_cast<std::uint32_t>(m.training_config_hash.size()));
  w.raw(m.training_config_hash.data(), m.training_config_hash.size());
  const auto params = m.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Tensor* t : params) {
    w.u32(static_cast<std::uint32_t>(t->rows()));
    w.u32(static_cast<std::uint32_t>(t->cols()));
    for (double v : t->values()) w.f64(v);
  }
  return w.bytes();
}

inline EstimatorModel decode_model(std::span<const unsigned char> bytes,
                                   const std::string& source = "<buffer>") {
  detail::ByteReader r(bytes, source);
  const std::string magic = r.str(4, "magic");
  if (!std::equal(kModelMagic.begin(), kModelMagic.end(), magic.begin())) {
    throw FormatError(source + ": bad magic at byte offset 0 (expected FEWM)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kModelVersion) {
    throw FormatError(source + ": unsupported model version " + std::to_string(version) +
                      " (expected " + std::to_string(kModelVersion) + ")");
  }
  ModelConfig cfg;
  const std::uint32_t agg = r.u32("aggregator");
  if (agg > 1) throw FormatError(source + ": unknown aggregator id " + std::to_string(agg));
  cfg.aggregator = static_cast<Aggregator>(agg);
  cfg.speech_dim = r.u32("speech_dim");
  cfg.text_dim = r.u32("text_dim");
  if (cfg.speech_dim == 0 || cfg.text_dim == 0) {
    throw FormatError(source + ": zero feature dimension in header");
  }
  const std::uint32_t n_layers = r.u32("layer count");
  struct Shape {
    std::uint32_t in, out, normalized;
  };
  std::vector<Shape> shapes;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    shapes.push_back({r.u32("layer in"), r.u32("layer out"), r.u32("layer norm flag")});
  }
  cfg.dropout = r.f64("dropout");
  cfg.norm_eps = r.f64("norm eps");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0) || !(cfg.norm_eps >= 0.0)) {
    throw FormatError(source + ": dropout or norm eps out of range in header");
  }

  // Rebuild the expected architecture and check the header against it.
  EstimatorModel m = init_model(cfg, 0);
  if (shapes.size() != m.layers.size()) {
    throw FormatError(source + ": expected " + std::to_string(m.layers.size()) +
                      " dense layers, header has " + std::to_string(shapes.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& l = m.layers[i];
    if (shapes[i].in != l.weight.rows() || shapes[i].out != l.weight.cols() ||
        (shapes[i].normalized != 0) != l.normalized()) {
      throw FormatError(source + ": layer " + std::to_string(i) +
                        " shape does not match the architecture");
    }
  }
  m.seed = r.u64("seed");
  const std::uint32_t hash_len = r.u32("config hash length");
  m.training_config_hash = r.str(hash_len, "config hash");
  const std::uint32_t n_tensors = r.u32("tensor count");
  auto params = m.parameters();
  if (n_tensors != params.size()) {
    throw FormatError(source + ": expected " + std::to_string(params.size()) +
                      " parameter tensors, file has " + std::to_string(n_tensors));
  }
  for (Tensor* t : params) {
    const std::size_t at = r.pos();
    const std::uint32_t rows = r.u32("tensor rows");
    const std::uint32_t cols = r.u32("tensor cols");
    if (rows != t->rows() || cols != t->cols()) {
      throw FormatError(source + ": tensor at byte offset " + std::to_string(at) +
                        " is " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", expected " + t->shape_string());
    }
    for (double& v : t->values()) v = r.f64("tensor data");
  }
  if (r.pos() != r.size()) {
    throw FormatError(source + ": trailing data at byte offset " + std::to_string(r.pos()));
  }
  if (!m.all_finite()) throw FormatError(source + ": non-finite parameter values");
  return m;
}

inline void save_model(const EstimatorModel& m, const std::filesystem::path& path) {
  const auto bytes = encode_model(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

inline EstimatorModel load_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  return decode_model(bytes, path.string());
}

}  // namespace fewer
