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

// Word error rate scoring: edit-distance alignment, clamping, corpus-level
// aggregates and the confidence-score baseline.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fewer/error.hpp"

namespace fewer {

struct ErrorCounts {
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t reference_words = 0;

  std::int64_t errors() const noexcept {
    return substitutions + insertions + deletions;
  }

  ErrorCounts& operator+=(const ErrorCounts& o) noexcept {
    substitutions += o.substitutions;
    insertions += o.insertions;
    deletions += o.deletions;
    reference_words += o.reference_words;
    return *this;
  }

  friend bool operator==(const ErrorCounts&, const ErrorCounts&) = default;
};

/// Splits on whitespace. With `normalize` set, ASCII letters are lowercased
/// first; any other text normalisation is expected upstream.
inline std::vector<std::string> tokenize(std::string_view text, bool normalize = true) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(normalize ? static_cast<char>(std::tolower(
                                      static_cast<unsigned char>(ch)))
                                : ch);
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// Minimum-edit alignment of `hypothesis` against `reference` with unit
/// costs. On equal-cost paths the backtrace prefers substitution (or match),
/// then insertion, then deletion; the total is path-independent.
inline ErrorCounts word_error_counts(std::span<const std::string> reference,
                                     std::span<const std::string> hypothesis) {
  if (reference.empty()) {
    throw DataError("word_error_counts: empty reference, WER is undefined");
  }
  const std::size_t n = reference.size();
  const std::size_t m = hypothesis.size();
  const std::size_t w = m + 1;
  std::vector<std::uint32_t> cost((n + 1) * w);
  for (std::size_t i = 0; i <= n; ++i) cost[i * w] = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) cost[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag =
          cost[(i - 1) * w + j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0u : 1u);
      const std::uint32_t ins = cost[i * w + j - 1] + 1;
      const std::uint32_t del = cost[(i - 1) * w + j] + 1;
      cost[i * w + j] = std::min({diag, ins, del});
    }
  }

  ErrorCounts counts;
  counts.reference_words = static_cast<std::int64_t>(n);
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = cost[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (cost[(i - 1) * w + j - 1] + (same ? 0u : 1u) == here) {
        if (!same) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && cost[i * w + j - 1] + 1 == here) {
      ++counts.insertions;
      --j;
      continue;
    }
    ++counts.deletions;
    --i;
  }
  return counts;
}

inline ErrorCounts word_error_counts(std::string_view reference,
                                     std::string_view hypothesis,
                                     bool normalize = true) {
  const auto ref = tokenize(reference, normalize);
  const auto hyp = tokenize(hypothesis, normalize);
  return word_error_counts(std::span<const std::string>(ref),
                           std::span<const std::string>(hyp));
}

/// (S+I+D)/N, optionally clamped into [0, 1].
inline double wer(const ErrorCounts& counts, bool clamp = true) {
  if (counts.reference_words <= 0) {
    throw DataError("wer: reference has no words, WER is undefined");
  }
  const double value = static_cast<double>(counts.errors()) /
                       static_cast<double>(counts.reference_words);
  return clamp ? std::clamp(value, 0.0, 1.0) : value;
}

/// Corpus WER weighted by reference words: total errors over total words.
inline double weighted_wer_by_words(std::span<const ErrorCounts> counts) {
  ErrorCounts total;
  for (const auto& c : counts) total += c;
  if (total.reference_words <= 0) {
    throw DataError("weighted_wer_by_words: no reference words");
  }
  return wer(total, /*clamp=*/false);
}

struct TimedEstimate {
  double estimate = 0.0;
  double duration = 0.0;  // seconds
};

/// Duration-weighted mean of per-utterance estimates.
inline double weighted_estimate_by_duration(std::span<const TimedEstimate> items) {
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& it : items) {
    if (!(it.duration > 0.0) || !std::isfinite(it.duration)) {
      throw DataError("weighted_estimate_by_duration: non-positive duration");
    }
    weighted += it.estimate * it.duration;
    total += it.duration;
  }
  if (!(total > 0.0)) {
    throw DataError("weighted_estimate_by_duration: no duration");
  }
  return weighted / total;
}

/// Relative gap between the word-weighted target and the duration-weighted
/// estimate.
inline double werr(double target_wrd, double estimate_dur) {
  if (target_wrd == 0.0) throw DataError("werr: target WER is zero");
  return std::abs(target_wrd - estimate_dur) / target_wrd;
}

enum class ConfidenceMode {
  literal,           // 1 - mean(log p); exceeds 1 for any uncertain token
  mean_probability,  // 1 - exp(mean(log p))
};

inline double confidence_score(std::span<const double> token_logprobs,
                               ConfidenceMode mode = ConfidenceMode::literal) {
  if (token_logprobs.empty()) throw DataError("confidence_score: no tokens");
  double total = 0.0;
  for (double lp : token_logprobs) {
    if (!(lp <= 0.0)) {
      throw DataError("confidence_score: log-probability must be <= 0");
    }
    total += lp;
  }
  const double mean_lp = total / static_cast<double>(token_logprobs.size());
  return mode == ConfidenceMode::literal ? 1.0 - mean_lp : 1.0 - std::exp(mean_lp);
}

}  // namespace fewer
