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

// Evaluation metrics and report rendering: RMSE, Pearson correlation,
// corpus-level weighted WER comparison, histograms and per-speaker means.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fewer/error.hpp"
#include "fewer/manifest.hpp"
#include "fewer/metrics.hpp"
#include "fewer/table.hpp"
#include "fewer/wer.hpp"

namespace fewer {

inline constexpr double kHistogramBinWidth = 0.02;

inline double rmse(std::span<const double> targets, std::span<const double> estimates) {
  return std::sqrt(mse_loss(estimates, targets));
}

/// Pearson correlation coefficient, clamped to [-1, 1] against rounding.
inline double pcc(std::span<const double> targets, std::span<const double> estimates) {
  if (targets.size() != estimates.size()) {
    throw DataError("pcc: " + std::to_string(targets.size()) + " targets vs " +
                    std::to_string(estimates.size()) + " estimates");
  }
  if (targets.size() < 2) throw DataError("pcc: need at least two pairs");
  const double mt = mean_of(targets);
  const double me = mean_of(estimates);
  const std::size_t n = targets.size();
  std::vector<double> cross(n), dt(n), de(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = targets[i] - mt;
    const double b = estimates[i] - me;
    cross[i] = a * b;
    dt[i] = a * a;
    de[i] = b * b;
  }
  const double st = pairwise_sum(dt);
  const double se = pairwise_sum(de);
  if (!(st > 0.0) || !(se > 0.0)) {
    throw DataError("pcc: zero variance in targets or estimates; correlation undefined");
  }
  const double r = pairwise_sum(cross) / (std::sqrt(st) * std::sqrt(se));
  return std::clamp(r, -1.0, 1.0);
}

/// Bin counts over [0, 1] with bins [k·w, (k+1)·w); the last bin is closed.
/// `bin_width` must divide 1 into a whole number of bins.
inline std::vector<std::size_t> histogram(std::span<const double> values,
                                          double bin_width = kHistogramBinWidth) {
  if (!(bin_width > 0.0 && bin_width <= 1.0)) {
    throw ParameterError("histogram: bin width must lie in (0, 1]");
  }
  const double count = std::round(1.0 / bin_width);
  if (std::abs(count * bin_width - 1.0) > 1e-9) {
    throw ParameterError("histogram: bin width must divide [0, 1] evenly");
  }
  const auto bins = static_cast<std::size_t>(count);
  std::vector<std::size_t> out(bins, 0);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError("histogram: value " + std::to_string(v) + " outside [0, 1]");
    }
    // Edges are k / bins so that a value equal to an edge lands exactly.
    std::size_t k = std::min(static_cast<std::size_t>(v * count), bins - 1);
    while (k > 0 && v < static_cast<double>(k) / count) --k;
    while (k + 1 < bins && v >= static_cast<double>(k + 1) / count) ++k;
    ++out[k];
  }
  return out;
}

struct SpeakerMean {
  std::string speaker;
  double mean_target = 0.0;
  double mean_estimate = 0.0;
  std::size_t count = 0;

  friend bool operator==(const SpeakerMean&, const SpeakerMean&) = default;
};

struct SpeakerSample {
  std::string speaker;
  double target = 0.0;
  double estimate = 0.0;
};

/// Unweighted per-speaker averages, sorted by speaker name.
inline std::vector<SpeakerMean> per_speaker_means(std::span<const SpeakerSample> samples) {
  if (samples.empty()) throw DataError("per_speaker_means: no samples");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& s : samples) {
    auto& g = groups[s.speaker];
    g.first.push_back(s.target);
    g.second.push_back(s.estimate);
  }
  std::vector<SpeakerMean> out;
  out.reserve(groups.size());
  for (const auto& [speaker, g] : groups) {
    out.push_back({speaker, mean_of(g.first), mean_of(g.second), g.first.size()});
  }
  return out;
}

struct EvalReport {
  std::size_t count = 0;
  double rmse = 0.0;
  double pcc = 0.0;
  std::optional<double> wer_wrd;  // needs error counts
  double est_dur = 0.0;
  std::optional<double> werr;
  std::vector<std::size_t> target_histogram;
  // Absent when some estimate falls outside [0, 1] (possible for confidence scores).
  std::optional<std::vector<std::size_t>> estimate_histogram;
  double bin_width = kHistogramBinWidth;
  std::vector<SpeakerMean> per_speaker;
};

/// Full metric set for aligned scored pairs and estimates.
inline EvalReport full_report(std::span<const ScoredPair> scored,
                              std::span<const double> estimates,
                              double bin_width = kHistogramBinWidth) {
  if (scored.empty() || estimates.empty()) throw DataError("full_report: empty input");
  if (scored.size() != estimates.size()) {
    throw DataError("full_report: " + std::to_string(scored.size()) + " pairs vs " +
                    std::to_string(estimates.size()) + " estimates");
  }
  EvalReport r;
  r.count = scored.size();
  r.bin_width = bin_width;
  std::vector<double> targets;
  std::vector<TimedEstimate> timed;
  std::vector<SpeakerSample> speakers;
  std::vector<ErrorCounts> counts;
  bool have_counts = true;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const auto& p = scored[i];
    if (!std::isfinite(estimates[i])) {
      throw NumericError("full_report: non-finite estimate for '" + p.record.id + "'");
    }
    targets.push_back(p.wer);
    timed.push_back({estimates[i], p.record.duration});
    speakers.push_back({p.record.speaker, p.wer, estimates[i]});
    if (p.counts) {
      counts.push_back(*p.counts);
    } else {
      have_counts = false;
    }
  }
  r.rmse = rmse(targets, estimates);
  r.pcc = pcc(targets, estimates);
  r.est_dur = weighted_estimate_by_duration(timed);
  if (have_counts) {
    r.wer_wrd = weighted_wer_by_words(counts);
    r.werr = werr(*r.wer_wrd, r.est_dur);
  }
  r.target_histogram = histogram(targets, bin_width);
  const bool in_range = std::all_of(estimates.begin(), estimates.end(),
                                    [](double e) { return e >= 0.0 && e <= 1.0; });
  if (in_range) r.estimate_histogram = histogram(estimates, bin_width);
  r.per_speaker = per_speaker_means(speakers);
  return r;
}

namespace detail {

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["count"] = r.count;
  j["rmse"] = r.rmse;
  j["pcc"] = r.pcc;
  j["wer_wrd"] = detail::optional_json(r.wer_wrd);
  j["est_dur"] = r.est_dur;
  j["werr"] = detail::optional_json(r.werr);
  j["bin_width"] = r.bin_width;
  j["target_histogram"] = r.target_histogram;
  j["estimate_histogram"] = detail::optional_json(r.estimate_histogram);
  auto& speakers = j["per_speaker"] = nlohmann::ordered_json::array();
  for (const auto& s : r.per_speaker) {
    speakers.push_back({{"speaker", s.speaker},
                        {"mean_target", s.mean_target},
                        {"mean_estimate", s.mean_estimate},
                        {"count", s.count}});
  }
  return j;
}

/// One row per system: RMSE, PCC, WER_wrd, estimated WER_dur, WERR.
inline std::string render_report_table(
    const std::vector<std::pair<std::string, EvalReport>>& rows) {
  TextTable t({"Model", "RMSE", "PCC", "WER_wrd", "WER_dur (est.)", "WERR"});
  for (const auto& [name, r] : rows) {
    t.add_row({name, format("%.4f", r.rmse), format("%.4f", r.pcc),
               r.wer_wrd ? percent(*r.wer_wrd) : "n/a", percent(r.est_dur),
               r.werr ? percent(*r.werr) : "n/a"});
  }
  return t.render();
}

inline void write_histogram_csv(std::ostream& out, const EvalReport& r) {
  out << "bin_start,bin_end,target_count,estimate_count\n";
  const std::size_t bins = r.target_histogram.size();
  for (std::size_t k = 0; k < bins; ++k) {
    const double lo = static_cast<double>(k) / static_cast<double>(bins);
    const double hi = static_cast<double>(k + 1) / static_cast<double>(bins);
    out << format("%.4f,%.4f,%zu,", lo, hi, r.target_histogram[k]);
    if (r.estimate_histogram) out << (*r.estimate_histogram)[k];
    out << '\n';
  }
}

inline void write_speaker_csv(std::ostream& out, const EvalReport& r) {
  out << "speaker,mean_target,mean_estimate,count\n";
  for (const auto& s : r.per_speaker) {
    // Speaker ids come from manifests; quote them for CSV safety.
    std::string quoted = "\"";
    for (char c : s.speaker) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    out << quoted << format(",%.17g,%.17g,%zu\n", s.mean_target, s.mean_estimate, s.count);
  }
}

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string svg_open(int width, int height, const std::string& title) {
  return format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "font-family=\"sans-serif\" font-size=\"11\">\n",
                width, height) +
         format("<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width, height) +
         format("<text x=\"%d\" y=\"16\" text-anchor=\"middle\">", width / 2) +
         svg_escape(title) + "</text>\n";
}

}  // namespace detail

/// Grouped bar chart of target and estimate histograms.
inline std::string histogram_svg(const EvalReport& r) {
  constexpr int kWidth = 760, kHeight = 320, kLeft = 40, kBottom = 30, kTop = 28;
  const std::size_t bins = r.target_histogram.size();
  std::size_t peak = 1;
  for (std::size_t k = 0; k < bins; ++k) {
    peak = std::max(peak, r.target_histogram[k]);
    if (r.estimate_histogram) peak = std::max(peak, (*r.estimate_histogram)[k]);
  }
  const double plot_w = kWidth - kLeft - 10;
  const double plot_h = kHeight - kTop - kBottom;
  const double slot = plot_w / static_cast<double>(bins);
  std::string svg = detail::svg_open(kWidth, kHeight, "WER histogram (target vs estimate)");
  auto bar = [&](std::size_t k, std::size_t c, double offset, const char* color) {
    const double h = plot_h * static_cast<double>(c) / static_cast<double>(peak);
    svg += format("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                  "fill=\"%s\"/>\n",
                  kLeft + slot * static_cast<double>(k) + offset, kTop + plot_h - h,
                  slot * 0.45, h, color);
  };
  for (std::size_t k = 0; k < bins; ++k) {
    bar(k, r.target_histogram[k], 0.0, "#4c72b0");
    if (r.estimate_histogram) bar(k, (*r.estimate_histogram)[k], slot * 0.5, "#dd8452");
  }
  svg += format("<line x1=\"%d\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                kLeft, kTop + plot_h, kLeft + plot_w, kTop + plot_h);
  for (int pct = 0; pct <= 100; pct += 20) {
    const double x = kLeft + plot_w * pct / 100.0;
    svg += format("<text x=\"%.2f\" y=\"%d\" text-anchor=\"middle\">%d%%</text>\n", x,
                  kHeight - 10, pct);
  }
  svg += format("<text x=\"4\" y=\"%d\">%zu</text>\n", kTop + 10, peak);
  svg += "</svg>\n";
  return svg;
}

/// Per-speaker mean target and estimate, speakers ordered by mean target.
inline std::string speaker_svg(const EvalReport& r) {
  constexpr int kWidth = 760, kHeight = 320, kLeft = 40, kBottom = 30, kTop = 28;
  std::vector<SpeakerMean> rows = r.per_speaker;
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.mean_target < b.mean_target;
  });
  double peak = 1e-12;
  for (const auto& s : rows) peak = std::max({peak, s.mean_target, s.mean_estimate});
  const double plot_w = kWidth - kLeft - 10;
  const double plot_h = kHeight - kTop - kBottom;
  const double step = plot_w / static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  std::string svg = detail::svg_open(kWidth, kHeight, "Average WER per speaker");
  auto polyline = [&](auto value, const char* color) {
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      svg += format("%.2f,%.2f ", kLeft + step * (static_cast<double>(i) + 0.5),
                    kTop + plot_h - plot_h * value(rows[i]) / peak);
    }
    svg += "\"/>\n";
  };
  polyline([](const SpeakerMean& s) { return s.mean_target; }, "#4c72b0");
  polyline([](const SpeakerMean& s) { return s.mean_estimate; }, "#dd8452");
  svg += format("<line x1=\"%d\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                kLeft, kTop + plot_h, kLeft + plot_w, kTop + plot_h);
  svg += format("<text x=\"4\" y=\"%d\">%s</text>\n", kTop + 10, percent(peak, 0).c_str());
  svg += format("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">speakers (%zu)</text>\n",
                kWidth / 2, kHeight - 10, rows.size());
  svg += "</svg>\n";
  return svg;
}

}  // namespace fewer
