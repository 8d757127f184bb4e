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

// Dataset curation: duration filtering, zero-WER balancing and corpus
// statistics.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "fewer/error.hpp"
#include "fewer/manifest.hpp"
#include "fewer/table.hpp"
#include "fewer/wer.hpp"

namespace fewer {

inline constexpr double kNoDurationLimit = std::numeric_limits<double>::infinity();

/// Keeps records whose duration is at most `max_seconds` (inclusive).
template <typename Record>
std::vector<Record> filter_by_duration(std::span<const Record> records,
                                       double max_seconds) {
  if (!(max_seconds > 0.0)) {
    throw ParameterError("filter_by_duration: max_seconds must be positive");
  }
  std::vector<Record> kept;
  for (const auto& r : records) {
    double d;
    if constexpr (std::is_same_v<Record, ScoredPair>) {
      d = r.record.duration;
    } else {
      d = r.duration;
    }
    if (d <= max_seconds) kept.push_back(r);
  }
  return kept;
}

inline std::vector<UtteranceRecord> filter_by_duration(
    const std::vector<UtteranceRecord>& records, double max_seconds) {
  return filter_by_duration(std::span<const UtteranceRecord>(records), max_seconds);
}

inline std::vector<ScoredPair> filter_by_duration(const std::vector<ScoredPair>& records,
                                                  double max_seconds) {
  return filter_by_duration(std::span<const ScoredPair>(records), max_seconds);
}

/// Bin k covers [k/bins, (k+1)/bins); the last bin is closed at 1.
inline std::size_t wer_bin(double wer, std::size_t bins) {
  if (!(wer >= 0.0 && wer <= 1.0)) {
    throw DataError("WER " + std::to_string(wer) + " outside [0, 1]; clamp first");
  }
  const double n = static_cast<double>(bins);
  auto edge = [n](std::size_t k) { return static_cast<double>(k) / n; };
  std::size_t k = std::min(static_cast<std::size_t>(wer * n), bins - 1);
  while (k > 0 && wer < edge(k)) --k;
  while (k + 1 < bins && wer >= edge(k + 1)) ++k;
  return k;
}

struct BalancePlan {
  std::vector<std::size_t> histogram;
  std::size_t second_bin = 0;  // second most frequent
  std::size_t third_bin = 0;   // third most frequent
  std::size_t zero_count = 0;  // pairs with WER exactly 0
  std::size_t keep_zero = 0;   // min(zero_count, c2 + c3)
};

/// Histogram ranking behind zero-WER balancing. Ties in frequency go to the
/// lower bin index.
inline BalancePlan plan_zero_wer_balance(std::span<const ScoredPair> scored,
                                         std::size_t bins = 100) {
  if (bins < 3) throw ParameterError("balance_zero_wer: need at least 3 bins");
  BalancePlan plan;
  plan.histogram.assign(bins, 0);
  for (const auto& p : scored) {
    ++plan.histogram[wer_bin(p.wer, bins)];
    if (p.wer == 0.0) ++plan.zero_count;
  }
  const auto non_empty = std::count_if(plan.histogram.begin(), plan.histogram.end(),
                                       [](std::size_t c) { return c > 0; });
  if (non_empty < 3) {
    throw DataError("balance_zero_wer: fewer than 3 non-empty WER bins (" +
                    std::to_string(non_empty) + "), balancing is undefined");
  }
  std::vector<std::size_t> order(bins);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return plan.histogram[a] > plan.histogram[b];
  });
  plan.second_bin = order[1];
  plan.third_bin = order[2];
  plan.keep_zero = std::min(plan.zero_count, plan.histogram[plan.second_bin] +
                                                 plan.histogram[plan.third_bin]);
  return plan;
}

/// Caps the number of zero-WER pairs at the combined size of the second and
/// third most frequent histogram bins. The retained zero-WER pairs are a
/// uniform random subset drawn from `seed`; every other pair is kept and the
/// input order is preserved.
inline std::vector<ScoredPair> balance_zero_wer(std::span<const ScoredPair> scored,
                                                std::size_t bins, std::uint64_t seed) {
  const BalancePlan plan = plan_zero_wer_balance(scored, bins);
  std::vector<std::size_t> zeros;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].wer == 0.0) zeros.push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < plan.keep_zero; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, zeros.size() - 1);
    std::swap(zeros[i], zeros[pick(rng)]);
  }
  std::vector<char> keep(scored.size(), 1);
  for (std::size_t i = plan.keep_zero; i < zeros.size(); ++i) keep[zeros[i]] = 0;

  std::vector<ScoredPair> out;
  out.reserve(scored.size() - (zeros.size() - plan.keep_zero));
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (keep[i]) out.push_back(scored[i]);
  }
  return out;
}

inline std::vector<ScoredPair> balance_zero_wer(const std::vector<ScoredPair>& scored,
                                                std::size_t bins, std::uint64_t seed) {
  return balance_zero_wer(std::span<const ScoredPair>(scored), bins, seed);
}

struct DatasetStats {
  std::size_t segments = 0;
  double total_hours = 0.0;
  double avg_duration = 0.0;  // seconds
  std::optional<double> avg_words;  // reference words; needs error counts
  double avg_wer = 0.0;
  double std_wer = 0.0;  // population standard deviation
  std::optional<double> wer_wrd;
};

inline DatasetStats compute_stats(std::span<const ScoredPair> scored) {
  if (scored.empty()) throw DataError("compute_stats: empty dataset");
  DatasetStats s;
  s.segments = scored.size();
  const double n = static_cast<double>(scored.size());
  double seconds = 0.0;
  double wer_sum = 0.0;
  bool have_counts = true;
  std::int64_t words = 0;
  for (const auto& p : scored) {
    seconds += p.record.duration;
    wer_sum += p.wer;
    if (p.counts) {
      words += p.counts->reference_words;
    } else {
      have_counts = false;
    }
  }
  s.total_hours = seconds / 3600.0;
  s.avg_duration = seconds / n;
  s.avg_wer = wer_sum / n;
  double sq = 0.0;
  for (const auto& p : scored) sq += (p.wer - s.avg_wer) * (p.wer - s.avg_wer);
  s.std_wer = std::sqrt(sq / n);
  if (have_counts) {
    s.avg_words = static_cast<double>(words) / n;
    std::vector<ErrorCounts> counts;
    counts.reserve(scored.size());
    for (const auto& p : scored) counts.push_back(*p.counts);
    s.wer_wrd = weighted_wer_by_words(counts);
  }
  return s;
}

inline DatasetStats compute_stats(const std::vector<ScoredPair>& scored) {
  return compute_stats(std::span<const ScoredPair>(scored));
}

/// Aligned table with the columns of a corpus statistics summary.
inline std::string render_stats_table(
    const std::vector<std::pair<std::string, DatasetStats>>& rows) {
  TextTable t({"Dataset", "#Seg.", "Total Dur. (h)", "Avg. Dur.", "Avg. #Wrd.",
               "Avg. WER", "Std. Dev. of WER", "WER_wrd"});
  for (const auto& [name, s] : rows) {
    t.add_row({name, std::to_string(s.segments), format("%.2f", s.total_hours),
               format("%.2f", s.avg_duration),
               s.avg_words ? format("%.2f", *s.avg_words) : "n/a", percent(s.avg_wer),
               percent(s.std_wer), s.wer_wrd ? percent(*s.wer_wrd) : "n/a"});
  }
  return t.render();
}

}  // namespace fewer
