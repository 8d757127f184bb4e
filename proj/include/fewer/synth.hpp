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

// Synthetic datasets that exercise the full pipeline without real encoders.
//
// Each utterance draws a latent mean per tower; frames are that mean plus unit
// Gaussian noise. The target WER is logistic(w · x + b) plus label noise,
// where x is the concatenation of the pooled *stored* (float32) features, so
// an average-pooling estimator can represent the target exactly. The hidden
// (w, b) are written next to the manifest for oracle checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "fewer/error.hpp"
#include "fewer/features.hpp"
#include "fewer/manifest.hpp"
#include "fewer/table.hpp"
#include "fewer/tensor.hpp"

namespace fewer {

struct SynthConfig {
  std::size_t n_train = 0;
  std::size_t n_dev = 0;
  std::size_t n_test = 0;
  std::size_t speech_dim = 32;
  std::size_t text_dim = 16;
  std::uint64_t seed = 0;
  std::size_t speech_frames_min = 20;
  std::size_t speech_frames_max = 500;
  std::size_t text_frames_min = 3;
  std::size_t text_frames_max = 40;
  double frame_seconds = 0.02;
  double noise_sigma = 0.02;
  double weight_scale = 1.5;  // w ~ N(0, weight_scale² / (speech_dim + text_dim))
  double bias = -1.0;
  std::size_t utterances_per_speaker = 25;

  void validate() const {
    if (speech_dim < 2 || text_dim < 2) throw ConfigError("synth: dims must be at least 2");
    if (speech_frames_min < 1 || speech_frames_min > speech_frames_max ||
        text_frames_min < 1 || text_frames_min > text_frames_max) {
      throw ConfigError("synth: frame ranges must satisfy 1 <= min <= max");
    }
    if (!(frame_seconds > 0.0)) throw ConfigError("synth: frame_seconds must be positive");
    if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be non-negative");
    if (utterances_per_speaker < 1) {
      throw ConfigError("synth: utterances_per_speaker must be at least 1");
    }
  }

  std::size_t total() const { return n_train + n_dev + n_test; }
};

struct SynthHidden {
  std::vector<double> weights;  // speech_dim + text_dim
  double bias = 0.0;
  double noise_sigma = 0.0;
};

struct SynthResult {
  std::vector<ScoredPair> pairs;  // feature paths as written (absolute)
  SynthHidden hidden;
  std::filesystem::path manifest_path;
  std::filesystem::path scored_path;
  std::filesystem::path hidden_path;
};

/// Noise-free target for pooled features `x` (1 × (speech_dim + text_dim)).
inline double synth_clean_target(const SynthHidden& h, const Tensor& x) {
  if (x.size() != h.weights.size()) {
    throw ShapeError("synth: pooled width " + std::to_string(x.size()) + " vs " +
                     std::to_string(h.weights.size()) + " weights");
  }
  double z = h.bias;
  for (std::size_t i = 0; i < x.size(); ++i) z += h.weights[i] * x[i];
  return kernels::sigmoid(z);
}

namespace detail {

inline FeatureSequence synth_sequence(std::size_t frames, std::size_t dim,
                                      std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> latent(dim);
  for (double& v : latent) v = normal(rng);
  FeatureSequence seq;
  seq.dim = static_cast<std::uint32_t>(dim);
  seq.frames = static_cast<std::uint32_t>(frames);
  seq.values.resize(frames * dim);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t d = 0; d < dim; ++d) {
      seq.values[t * dim + d] = static_cast<float>(latent[d] + normal(rng));
    }
  }
  return seq;
}

}  // namespace detail

/// Writes `out_dir/feats/*.few`, `manifest.jsonl`, `scored.jsonl` and
/// `hidden.json`. Manifests store feature paths relative to `out_dir`.
inline SynthResult synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "feats");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t width = cfg.speech_dim + cfg.text_dim;
  SynthResult res;
  res.hidden.bias = cfg.bias;
  res.hidden.noise_sigma = cfg.noise_sigma;
  res.hidden.weights.resize(width);
  const double w_std = cfg.weight_scale / std::sqrt(static_cast<double>(width));
  for (double& w : res.hidden.weights) w = w_std * normal(rng);

  std::uniform_int_distribution<std::size_t> speech_len(cfg.speech_frames_min,
                                                        cfg.speech_frames_max);
  std::uniform_int_distribution<std::size_t> text_len(cfg.text_frames_min,
                                                      cfg.text_frames_max);
  std::exponential_distribution<double> exponential(1.0);
  const std::size_t speakers =
      std::max<std::size_t>(1, cfg.total() / cfg.utterances_per_speaker);

  std::vector<UtteranceRecord> relative;
  for (std::size_t i = 0; i < cfg.total(); ++i) {
    const Split split = i < cfg.n_train                 ? Split::train
                        : i < cfg.n_train + cfg.n_dev ? Split::dev
                                                        : Split::test;
    const std::size_t ts = speech_len(rng);
    const std::size_t tt = text_len(rng);
    const FeatureSequence speech = detail::synth_sequence(ts, cfg.speech_dim, rng);
    const FeatureSequence text = detail::synth_sequence(tt, cfg.text_dim, rng);
    const Tensor pooled = kernels::concat_cols(kernels::mean_pool(speech.to_tensor()),
                                               kernels::mean_pool(text.to_tensor()));
    const double noise = cfg.noise_sigma * normal(rng);
    const double target = std::clamp(synth_clean_target(res.hidden, pooled) + noise, 0.0, 1.0);

    UtteranceRecord r;
    r.id = format("synth-%06zu", i);
    r.speaker = format("spk%03zu", i % speakers);
    r.duration = static_cast<double>(ts) * cfg.frame_seconds;
    r.split = split;
    std::vector<double> logprobs;
    for (std::size_t k = 0; k < tt; ++k) {
      r.hypothesis += (k ? " w" : "w") + std::to_string(k);
      logprobs.push_back(-target * exponential(rng));
    }
    r.token_logprobs = std::move(logprobs);
    r.speech_feature_path = "feats/" + r.id + ".speech.few";
    r.text_feature_path = "feats/" + r.id + ".text.few";
    write_features(speech, out_dir / r.speech_feature_path);
    write_features(text, out_dir / r.text_feature_path);
    relative.push_back(r);

    ScoredPair p;
    p.record = r;
    p.wer = target;
    p.record.speech_feature_path = (out_dir / r.speech_feature_path).string();
    p.record.text_feature_path = (out_dir / r.text_feature_path).string();
    res.pairs.push_back(std::move(p));
  }

  res.manifest_path = out_dir / "manifest.jsonl";
  res.scored_path = out_dir / "scored.jsonl";
  res.hidden_path = out_dir / "hidden.json";
  save_manifest(relative, res.manifest_path);
  std::vector<ScoredPair> scored;
  for (std::size_t i = 0; i < relative.size(); ++i) {
    scored.push_back({relative[i], std::nullopt, res.pairs[i].wer});
  }
  save_scored(scored, res.scored_path);

  nlohmann::ordered_json hidden;
  hidden["seed"] = cfg.seed;
  hidden["speech_dim"] = cfg.speech_dim;
  hidden["text_dim"] = cfg.text_dim;
  hidden["bias"] = res.hidden.bias;
  hidden["noise_sigma"] = res.hidden.noise_sigma;
  hidden["weights"] = res.hidden.weights;
  std::ofstream out(res.hidden_path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + res.hidden_path.string() + " for writing");
  out << hidden.dump(2) << '\n';
  return res;
}

inline SynthHidden load_synth_hidden(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    SynthHidden h;
    h.weights = j.at("weights").get<std::vector<double>>();
    h.bias = j.at("bias").get<double>();
    h.noise_sigma = j.at("noise_sigma").get<double>();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace fewer
