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

// JSONL manifests. One object per line:
//   required: id, speaker, duration_sec, hypothesis, speech_feat, text_feat, split
//   optional: reference, token_logprobs
// Scored manifests add `wer` and, when the target came from an alignment,
// `substitutions`, `insertions`, `deletions`, `reference_words`.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "fewer/error.hpp"
#include "fewer/wer.hpp"

namespace fewer {

enum class Split { train, dev, test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  return std::nullopt;
}

struct UtteranceRecord {
  std::string id;
  std::string speaker;
  double duration = 0.0;  // seconds
  std::string hypothesis;
  std::optional<std::string> reference;
  std::optional<std::vector<double>> token_logprobs;
  std::string speech_feature_path;
  std::string text_feature_path;
  Split split = Split::train;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

/// A record with its target WER. `counts` is absent when the target did not
/// come from aligning a reference (e.g. synthetic data).
struct ScoredPair {
  UtteranceRecord record;
  std::optional<ErrorCounts> counts;
  double wer = 0.0;

  friend bool operator==(const ScoredPair&, const ScoredPair&) = default;
};

namespace detail {

inline const nlohmann::json& require_key(const nlohmann::json& obj, const char* key,
                                         std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw DataError("manifest line " + std::to_string(line) +
                    ": missing required field '" + key + "'");
  }
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  std::size_t line) {
  const auto& v = require_key(obj, key, line);
  if (!v.is_string()) {
    throw DataError("manifest line " + std::to_string(line) + ": field '" + key +
                    "' must be a string");
  }
  return v.get<std::string>();
}

inline double require_number(const nlohmann::json& obj, const char* key,
                             std::size_t line) {
  const auto& v = require_key(obj, key, line);
  if (!v.is_number()) {
    throw DataError("manifest line " + std::to_string(line) + ": field '" + key +
                    "' must be a number");
  }
  return v.get<double>();
}

}  // namespace detail

inline UtteranceRecord record_from_json(const nlohmann::json& obj, std::size_t line) {
  if (!obj.is_object()) {
    throw DataError("manifest line " + std::to_string(line) + ": not a JSON object");
  }
  UtteranceRecord r;
  r.id = detail::require_string(obj, "id", line);
  if (r.id.empty()) {
    throw DataError("manifest line " + std::to_string(line) + ": empty id");
  }
  r.speaker = detail::require_string(obj, "speaker", line);
  r.duration = detail::require_number(obj, "duration_sec", line);
  if (!(r.duration > 0.0) || !std::isfinite(r.duration)) {
    throw DataError("manifest line " + std::to_string(line) +
                    ": duration_sec must be positive");
  }
  r.hypothesis = detail::require_string(obj, "hypothesis", line);
  r.speech_feature_path = detail::require_string(obj, "speech_feat", line);
  r.text_feature_path = detail::require_string(obj, "text_feat", line);
  const auto split = parse_split(detail::require_string(obj, "split", line));
  if (!split) {
    throw DataError("manifest line " + std::to_string(line) +
                    ": split must be train, dev or test");
  }
  r.split = *split;
  if (auto it = obj.find("reference"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw DataError("manifest line " + std::to_string(line) +
                      ": reference must be a string");
    }
    r.reference = it->get<std::string>();
  }
  if (auto it = obj.find("token_logprobs"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw DataError("manifest line " + std::to_string(line) +
                      ": token_logprobs must be an array");
    }
    std::vector<double> lps;
    for (const auto& v : *it) {
      if (!v.is_number()) {
        throw DataError("manifest line " + std::to_string(line) +
                        ": token_logprobs entries must be numbers");
      }
      lps.push_back(v.get<double>());
    }
    r.token_logprobs = std::move(lps);
  }
  return r;
}

inline nlohmann::ordered_json record_to_json(const UtteranceRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["speaker"] = r.speaker;
  j["duration_sec"] = r.duration;
  j["hypothesis"] = r.hypothesis;
  if (r.reference) j["reference"] = *r.reference;
  if (r.token_logprobs) j["token_logprobs"] = *r.token_logprobs;
  j["speech_feat"] = r.speech_feature_path;
  j["text_feat"] = r.text_feature_path;
  j["split"] = to_string(r.split);
  return j;
}

inline nlohmann::ordered_json scored_to_json(const ScoredPair& p) {
  auto j = record_to_json(p.record);
  j["wer"] = p.wer;
  if (p.counts) {
    j["substitutions"] = p.counts->substitutions;
    j["insertions"] = p.counts->insertions;
    j["deletions"] = p.counts->deletions;
    j["reference_words"] = p.counts->reference_words;
  }
  return j;
}

inline ScoredPair scored_from_json(const nlohmann::json& obj, std::size_t line) {
  ScoredPair p;
  p.record = record_from_json(obj, line);
  p.wer = detail::require_number(obj, "wer", line);
  if (!std::isfinite(p.wer) || p.wer < 0.0) {
    throw DataError("manifest line " + std::to_string(line) +
                    ": wer must be finite and non-negative");
  }
  if (obj.contains("reference_words")) {
    ErrorCounts c;
    auto count = [&](const char* key) {
      const double v = detail::require_number(obj, key, line);
      if (v < 0 || v != std::floor(v)) {
        throw DataError("manifest line " + std::to_string(line) + ": field '" + key +
                        "' must be a non-negative integer");
      }
      return static_cast<std::int64_t>(v);
    };
    c.substitutions = count("substitutions");
    c.insertions = count("insertions");
    c.deletions = count("deletions");
    c.reference_words = count("reference_words");
    if (c.deletions > c.reference_words) {
      throw DataError("manifest line " + std::to_string(line) +
                      ": deletions exceed reference words");
    }
    p.counts = c;
  }
  return p;
}

namespace detail {

inline const std::string& item_id(const UtteranceRecord& r) { return r.id; }
inline const std::string& item_id(const ScoredPair& p) { return p.record.id; }

/// Reads JSONL, skipping blank lines, rejecting duplicate ids.
template <typename T, typename Parse>
std::vector<T> read_jsonl(std::istream& in, const std::string& source, Parse&& parse) {
  std::vector<T> out;
  std::unordered_map<std::string, std::size_t> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(source + ": parse error on line " + std::to_string(line) +
                      ": " + e.what());
    }
    T item = parse(obj, line);
    const std::string& id = item_id(item);
    if (auto [it, inserted] = seen.emplace(id, line); !inserted) {
      throw DataError(source + ": duplicate id '" + id + "' on line " +
                      std::to_string(line) + " (first seen on line " +
                      std::to_string(it->second) + ")");
    }
    out.push_back(std::move(item));
  }
  return out;
}

inline std::string resolve_feature_path(const std::filesystem::path& base,
                                        const std::string& p) {
  std::filesystem::path fp(p);
  if (fp.is_absolute() || base.empty()) return p;
  return (base / fp).lexically_normal().string();
}

inline std::filesystem::path manifest_base(const std::filesystem::path& manifest) {
  return std::filesystem::absolute(manifest).parent_path();
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace detail

inline std::vector<UtteranceRecord> parse_manifest(std::istream& in,
                                                   const std::string& source = "<stream>") {
  return detail::read_jsonl<UtteranceRecord>(in, source, record_from_json);
}

inline std::vector<ScoredPair> parse_scored(std::istream& in,
                                            const std::string& source = "<stream>") {
  return detail::read_jsonl<ScoredPair>(in, source, scored_from_json);
}

/// Loads a manifest. Relative feature paths are resolved against the
/// manifest's directory.
inline std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  auto records = parse_manifest(in, path.string());
  const auto base = detail::manifest_base(path);
  for (auto& r : records) {
    r.speech_feature_path = detail::resolve_feature_path(base, r.speech_feature_path);
    r.text_feature_path = detail::resolve_feature_path(base, r.text_feature_path);
  }
  return records;
}

inline std::vector<ScoredPair> load_scored(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  auto pairs = parse_scored(in, path.string());
  const auto base = detail::manifest_base(path);
  for (auto& p : pairs) {
    p.record.speech_feature_path =
        detail::resolve_feature_path(base, p.record.speech_feature_path);
    p.record.text_feature_path =
        detail::resolve_feature_path(base, p.record.text_feature_path);
  }
  return pairs;
}

inline void write_jsonl_line(std::ostream& out, const nlohmann::ordered_json& j) {
  out << j.dump() << '\n';
}

inline void save_manifest(const std::vector<UtteranceRecord>& records,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& r : records) write_jsonl_line(out, record_to_json(r));
}

inline void save_scored(const std::vector<ScoredPair>& pairs,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& p : pairs) write_jsonl_line(out, scored_to_json(p));
}

/// Scores one record against its reference. Throws DataError when the
/// record has no reference or the reference is empty.
inline ScoredPair score_record(const UtteranceRecord& r, bool clamp = true,
                               bool normalize = true) {
  if (!r.reference) throw DataError("record '" + r.id + "' has no reference");
  ScoredPair p;
  p.record = r;
  p.counts = word_error_counts(*r.reference, r.hypothesis, normalize);
  p.wer = wer(*p.counts, clamp);
  return p;
}

}  // namespace fewer
