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

// Inference timing. The single-stream protocol measures feature loading,
// aggregation and the feedforward head separately with a monotonic clock and
// reports the real-time factor. Throughput mode (several workers) is a
// separate report and never merged into single-stream numbers.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fewer/error.hpp"
#include "fewer/features.hpp"
#include "fewer/hash.hpp"
#include "fewer/manifest.hpp"
#include "fewer/model.hpp"
#include "fewer/table.hpp"

namespace fewer {

using BenchClock = std::chrono::steady_clock;

/// Smallest observable tick of BenchClock, in seconds.
inline double clock_resolution() {
  double best = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 16; ++trial) {
    const auto t0 = BenchClock::now();
    auto t1 = BenchClock::now();
    while (t1 == t0) t1 = BenchClock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

struct StageSeconds {
  double feature_load = 0.0;
  double aggregation = 0.0;
  double feedforward = 0.0;

  double estimator() const { return aggregation + feedforward; }
  double sum() const { return feature_load + aggregation + feedforward; }
};

struct TimingReport {
  std::string aggregator;
  std::string dataset_hash;
  std::size_t utterances = 0;
  std::size_t batch_size = 1;
  std::size_t warmup = 0;
  StageSeconds stages;
  double total_seconds = 0.0;  // wall time of the measured pass
  double audio_total_seconds = 0.0;
  double rtf = 0.0;
  double clock_resolution = 0.0;
};

/// Processing time over audio time.
inline double real_time_factor(double processing_seconds, double audio_seconds) {
  if (!(audio_seconds > 0.0)) throw DataError("real_time_factor: audio duration must be positive");
  if (!(processing_seconds >= 0.0)) {
    throw DataError("real_time_factor: processing time must be non-negative");
  }
  return processing_seconds / audio_seconds;
}

/// Identity of a benchmark dataset: ids, durations and order.
inline std::string dataset_hash(std::span<const UtteranceRecord> records) {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(records.size()));
  for (const auto& r : records) h.update(r.id).update(r.duration);
  return h.hex();
}

struct BenchOptions {
  std::size_t warmup = 2;
  std::size_t batch_size = 1;
};

namespace detail {

inline double seconds_since(BenchClock::time_point t0) {
  return std::chrono::duration<double>(BenchClock::now() - t0).count();
}

/// One pass over `records`; stage times accumulate into `stages`.
inline void bench_pass(const EstimatorModel& m, std::span<const UtteranceRecord> records,
                       std::size_t batch_size, StageSeconds& stages,
                       std::vector<double>* sink) {
  const std::size_t d = m.config.aggregated_dim();
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t end = std::min(records.size(), start + batch_size);
    Tensor x(end - start, d);
    for (std::size_t i = start; i < end; ++i) {
      auto t0 = BenchClock::now();
      const Tensor speech = read_features(records[i].speech_feature_path).to_tensor();
      const Tensor text = read_features(records[i].text_feature_path).to_tensor();
      stages.feature_load += seconds_since(t0);

      t0 = BenchClock::now();
      const Tensor row = aggregate(m, speech, text);
      stages.aggregation += seconds_since(t0);
      std::copy(row.values().begin(), row.values().end(), x.row(i - start).begin());
    }
    const auto t0 = BenchClock::now();
    const Tensor est = head_forward(m, x, Mode::eval);
    stages.feedforward += seconds_since(t0);
    if (sink != nullptr) sink->insert(sink->end(), est.values().begin(), est.values().end());
  }
}

}  // namespace detail

/// Single-stream timing of the estimator over `records` after `warmup`
/// unmeasured passes. Estimates from the measured pass go to `estimates`
/// when given.
inline TimingReport bench_estimator(const EstimatorModel& m,
                                    std::span<const UtteranceRecord> records,
                                    const BenchOptions& opts = {},
                                    std::vector<double>* estimates = nullptr) {
  if (records.empty()) throw DataError("bench: empty dataset");
  if (opts.batch_size < 1) throw ConfigError("bench: batch size must be at least 1");
  TimingReport rep;
  rep.aggregator = to_string(m.config.aggregator);
  rep.dataset_hash = dataset_hash(records);
  rep.utterances = records.size();
  rep.batch_size = opts.batch_size;
  rep.warmup = opts.warmup;
  rep.clock_resolution = clock_resolution();
  for (const auto& r : records) rep.audio_total_seconds += r.duration;

  for (std::size_t w = 0; w < opts.warmup; ++w) {
    StageSeconds ignored;
    detail::bench_pass(m, records, opts.batch_size, ignored, nullptr);
  }
  if (estimates != nullptr) estimates->clear();
  const auto t0 = BenchClock::now();
  detail::bench_pass(m, records, opts.batch_size, rep.stages, estimates);
  rep.total_seconds = detail::seconds_since(t0);
  rep.rtf = real_time_factor(rep.total_seconds, rep.audio_total_seconds);
  return rep;
}

struct ThroughputReport {
  std::string dataset_hash;
  std::size_t utterances = 0;
  std::size_t workers = 1;
  double wall_seconds = 0.0;
  double utterances_per_second = 0.0;
  double rtf = 0.0;
};

/// Multi-worker throughput: workers pull utterances from a shared counter and
/// run load + estimate independently. The model is shared read-only.
inline ThroughputReport bench_throughput(const EstimatorModel& m,
                                         std::span<const UtteranceRecord> records,
                                         std::size_t workers) {
  if (records.empty()) throw DataError("bench: empty dataset");
  if (workers < 1) throw ConfigError("bench: workers must be at least 1");
  ThroughputReport rep;
  rep.dataset_hash = dataset_hash(records);
  rep.utterances = records.size();
  rep.workers = workers;
  double audio = 0.0;
  for (const auto& r : records) audio += r.duration;

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(workers);
  const auto t0 = BenchClock::now();
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < records.size(); i = next++) {
            const Tensor speech = read_features(records[i].speech_feature_path).to_tensor();
            const Tensor text = read_features(records[i].text_feature_path).to_tensor();
            (void)estimate(m, speech, text);
          }
        } catch (...) {
          failures[w] = std::current_exception();
          next = records.size();
        }
      });
    }
  }
  rep.wall_seconds = detail::seconds_since(t0);
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  rep.utterances_per_second =
      static_cast<double>(records.size()) / std::max(rep.wall_seconds, 1e-12);
  rep.rtf = real_time_factor(rep.wall_seconds, audio);
  return rep;
}

/// a / b, or a lower bound on it when b is below the clock resolution.
struct Ratio {
  double value = 0.0;
  bool lower_bound = false;

  std::string to_string() const {
    return lower_bound ? format(">%.0f", value) : format("%.2fx", value);
  }
};

inline Ratio time_ratio(double a, double b, double resolution) {
  if (b < resolution) return {a / std::max(resolution, 1e-12), true};
  return {a / b, false};
}

struct Comparison {
  Ratio feature_load;
  Ratio aggregation;
  Ratio feedforward;
  Ratio estimator;  // aggregation + feedforward
  Ratio total;
  double reduction = 0.0;  // 1 - b.total / a.total
};

/// Speedup of `b` over `a` (ratios are a / b). Both reports must come from
/// the same dataset.
inline Comparison compare(const TimingReport& a, const TimingReport& b) {
  if (a.dataset_hash != b.dataset_hash) {
    throw DataError("compare: reports come from different datasets (" + a.dataset_hash +
                    " vs " + b.dataset_hash + ")");
  }
  const double res = std::max(a.clock_resolution, b.clock_resolution);
  Comparison c;
  c.feature_load = time_ratio(a.stages.feature_load, b.stages.feature_load, res);
  c.aggregation = time_ratio(a.stages.aggregation, b.stages.aggregation, res);
  c.feedforward = time_ratio(a.stages.feedforward, b.stages.feedforward, res);
  c.estimator = time_ratio(a.stages.estimator(), b.stages.estimator(), res);
  c.total = time_ratio(a.total_seconds, b.total_seconds, res);
  c.reduction = a.total_seconds > 0.0 ? 1.0 - b.total_seconds / a.total_seconds : 0.0;
  return c;
}

inline nlohmann::ordered_json timing_to_json(const TimingReport& r) {
  return {{"aggregator", r.aggregator},
          {"dataset_hash", r.dataset_hash},
          {"utterances", r.utterances},
          {"batch_size", r.batch_size},
          {"warmup", r.warmup},
          {"feature_load_seconds", r.stages.feature_load},
          {"aggregation_seconds", r.stages.aggregation},
          {"feedforward_seconds", r.stages.feedforward},
          {"total_seconds", r.total_seconds},
          {"audio_total_seconds", r.audio_total_seconds},
          {"rtf", r.rtf},
          {"clock_resolution_seconds", r.clock_resolution}};
}

inline TimingReport timing_from_json(const nlohmann::json& j) {
  try {
    TimingReport r;
    r.aggregator = j.at("aggregator").get<std::string>();
    r.dataset_hash = j.at("dataset_hash").get<std::string>();
    r.utterances = j.at("utterances").get<std::size_t>();
    r.batch_size = j.at("batch_size").get<std::size_t>();
    r.warmup = j.at("warmup").get<std::size_t>();
    r.stages.feature_load = j.at("feature_load_seconds").get<double>();
    r.stages.aggregation = j.at("aggregation_seconds").get<double>();
    r.stages.feedforward = j.at("feedforward_seconds").get<double>();
    r.total_seconds = j.at("total_seconds").get<double>();
    r.audio_total_seconds = j.at("audio_total_seconds").get<double>();
    r.rtf = j.at("rtf").get<double>();
    r.clock_resolution = j.at("clock_resolution_seconds").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("timing report: ") + e.what());
  }
}

inline nlohmann::ordered_json throughput_to_json(const ThroughputReport& r) {
  return {{"mode", "throughput"},
          {"dataset_hash", r.dataset_hash},
          {"utterances", r.utterances},
          {"workers", r.workers},
          {"wall_seconds", r.wall_seconds},
          {"utterances_per_second", r.utterances_per_second},
          {"rtf", r.rtf}};
}

/// Stage rows (feature loading, aggregation, feedforward, total, RTF) with one
/// column per system.
inline std::string render_timing_table(
    const std::vector<std::pair<std::string, TimingReport>>& systems) {
  std::vector<std::string> header{"Stage"};
  for (const auto& s : systems) header.push_back(s.first + " (s)");
  TextTable t(header);
  auto row = [&](const char* name, auto get) {
    std::vector<std::string> cells{name};
    for (const auto& s : systems) cells.push_back(get(s.second));
    t.add_row(std::move(cells));
  };
  row("Feature loading", [](const TimingReport& r) { return format("%.4f", r.stages.feature_load); });
  row("Aggregation", [](const TimingReport& r) { return format("%.4f", r.stages.aggregation); });
  row("Feedforward", [](const TimingReport& r) { return format("%.4f", r.stages.feedforward); });
  t.add_separator();
  row("Total", [](const TimingReport& r) { return format("%.4f", r.total_seconds); });
  row("RTF", [](const TimingReport& r) { return format("%.6f", r.rtf); });
  return t.render();
}

inline std::string render_comparison(const Comparison& c) {
  TextTable t({"Stage", "Speedup"});
  t.add_row({"Feature loading", c.feature_load.to_string()});
  t.add_row({"Aggregation", c.aggregation.to_string()});
  t.add_row({"Feedforward", c.feedforward.to_string()});
  t.add_row({"Estimator (agg. + ff.)", c.estimator.to_string()});
  t.add_row({"Total", c.total.to_string()});
  t.add_row({"Time reduction", percent(c.reduction)});
  return t.render();
}

}  // namespace fewer
