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

// `fewer` command-line front end.
//
// Exit codes: 0 success, 2 data error, 3 config error, 4 numeric failure.
// Options may also come from `--config FILE` (key=value lines under a
// `[subcommand]` section, or `subcommand.key=value`); flags on the command
// line win. `--seed` falls back to the FEWER_SEED environment variable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fewer/fewer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;

void log(const std::string& msg) { std::cerr << "[fewer] " << msg << '\n'; }

void log_resolved(const CLI::App& sub) {
  log("resolved config for '" + sub.get_name() + "':");
  std::istringstream lines(sub.config_to_str(true, false));
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty()) std::cerr << "[fewer]   " << line << '\n';
  }
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw fewer::DataError("cannot open " + path.string() + " for writing");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

/// Splits scored pairs by their split tag.
std::map<fewer::Split, std::vector<fewer::ScoredPair>> by_split(
    const std::vector<fewer::ScoredPair>& pairs) {
  std::map<fewer::Split, std::vector<fewer::ScoredPair>> out;
  for (const auto& p : pairs) out[p.record.split].push_back(p);
  return out;
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string manifest, out, errors;
  bool clamp = true;
  bool normalize = true;
};

int run_score(const ScoreArgs& a) {
  const auto records = fewer::load_manifest(a.manifest);
  std::vector<fewer::ScoredPair> scored;
  std::vector<nlohmann::ordered_json> failures;
  for (const auto& r : records) {
    try {
      scored.push_back(fewer::score_record(r, a.clamp, a.normalize));
    } catch (const fewer::DataError& e) {
      failures.push_back({{"id", r.id}, {"error", e.what()}});
    }
  }
  for (const auto& f : failures) log("score: " + f.dump());
  if (!a.errors.empty()) {
    auto out = open_output(a.errors);
    for (const auto& f : failures) fewer::write_jsonl_line(out, f);
  }
  if (!records.empty() && scored.empty()) {
    throw fewer::DataError("score: no record could be scored (" +
                           std::to_string(failures.size()) + " failures)");
  }
  auto out = open_output(a.out);
  for (const auto& p : scored) fewer::write_jsonl_line(out, fewer::scored_to_json(p));
  log("score: wrote " + std::to_string(scored.size()) + " scored pairs, " +
      std::to_string(failures.size()) + " failures");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CurateArgs {
  std::string manifest, out, stats;
  double max_dur = 10.0;
  bool no_duration_filter = false;
  std::size_t bins = 100;
  std::uint64_t seed = 0;
  std::string balance_split = "train";
};

int run_curate(const CurateArgs& a) {
  if (a.balance_split != "none" && a.balance_split != "all" &&
      !fewer::parse_split(a.balance_split)) {
    throw fewer::ConfigError("--balance-split must be train, dev, test, all or none");
  }
  auto pairs = fewer::load_scored(a.manifest);
  const double limit = a.no_duration_filter ? fewer::kNoDurationLimit : a.max_dur;
  pairs = fewer::filter_by_duration(pairs, limit);
  log("curate: " + std::to_string(pairs.size()) + " pairs after duration filter");

  auto balance = [&](const std::vector<fewer::ScoredPair>& in, const char* label) {
    const auto plan = fewer::plan_zero_wer_balance(in, a.bins);
    log(fewer::format("curate: %s: %zu zero-WER pairs, bins %zu (%zu) and %zu (%zu), keeping %zu",
                      label, plan.zero_count, plan.second_bin,
                      plan.histogram[plan.second_bin], plan.third_bin,
                      plan.histogram[plan.third_bin], plan.keep_zero));
    return fewer::balance_zero_wer(in, a.bins, a.seed);
  };

  std::vector<fewer::ScoredPair> curated;
  if (a.balance_split == "none") {
    curated = pairs;
  } else if (a.balance_split == "all") {
    curated = balance(pairs, "all");
  } else {
    // Balance only the chosen split; others pass through. Output keeps input order.
    const fewer::Split target = *fewer::parse_split(a.balance_split);
    std::vector<fewer::ScoredPair> chosen;
    for (const auto& p : pairs) {
      if (p.record.split == target) chosen.push_back(p);
    }
    std::vector<fewer::ScoredPair> kept = chosen.empty() ? chosen : balance(chosen, a.balance_split.c_str());
    std::size_t k = 0;
    for (const auto& p : pairs) {
      if (p.record.split != target) {
        curated.push_back(p);
      } else if (k < kept.size() && kept[k].record.id == p.record.id) {
        curated.push_back(kept[k++]);
      }
    }
  }

  auto out = open_output(a.out);
  for (const auto& p : curated) fewer::write_jsonl_line(out, fewer::scored_to_json(p));

  std::vector<std::pair<std::string, fewer::DatasetStats>> rows;
  for (const auto& [split, group] : by_split(curated)) {
    rows.emplace_back(fewer::to_string(split), fewer::compute_stats(group));
  }
  const std::string table = rows.empty() ? "(no data)\n" : fewer::render_stats_table(rows);
  if (a.stats.empty()) {
    std::cout << table;
  } else {
    write_text(a.stats, table);
  }
  log("curate: wrote " + std::to_string(curated.size()) + " pairs");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string train, dev, test, out, history;
  std::string agg = "avg";
  fewer::TrainConfig cfg;
  std::vector<std::uint64_t> seeds;
};

fs::path seeded_path(const fs::path& base, std::uint64_t seed) {
  fs::path p = base;
  p += ".seed" + std::to_string(seed);
  return p;
}

int run_train(const TrainArgs& a) {
  a.cfg.validate();
  const auto aggregator = fewer::parse_aggregator(a.agg);
  const auto train_pairs = fewer::load_scored(a.train);
  const auto dev_pairs = fewer::load_scored(a.dev);
  const auto train_set = fewer::load_examples(train_pairs);
  const auto dev_set = fewer::load_examples(dev_pairs);
  std::vector<fewer::Example> test_set;
  if (!a.test.empty()) test_set = fewer::load_examples(fewer::load_scored(a.test));
  if (train_set.empty()) throw fewer::DataError("train: empty training split");

  fewer::ModelConfig mc;
  mc.aggregator = aggregator;
  mc.speech_dim = train_set.front().speech.cols();
  mc.text_dim = train_set.front().text.cols();
  mc.dropout = a.cfg.dropout;

  const bool multi = a.seeds.size() > 1;
  const std::vector<std::uint64_t> seeds = a.seeds.empty() ? std::vector{a.cfg.seed} : a.seeds;
  std::vector<double> dev_rmse, test_rmse, test_pcc;
  for (std::uint64_t seed : seeds) {
    fewer::TrainConfig cfg = a.cfg;
    cfg.seed = seed;
    log("train: seed " + std::to_string(seed) + ", " + std::to_string(train_set.size()) +
        " train / " + std::to_string(dev_set.size()) + " dev examples, aggregator " +
        fewer::to_string(aggregator));
    auto model = fewer::init_model(mc, seed);
    const auto result = fewer::train(std::move(model), train_set, dev_set, cfg);
    for (const auto& h : result.history) {
      log(fewer::format("epoch %2zu  lr %.3e  train_mse %.6f  dev_mse %.6f", h.epoch, h.lr,
                        h.train_mse, h.dev_mse));
    }
    log(fewer::format("train: best epoch %zu, dev RMSE %.6f", result.best_epoch,
                      std::sqrt(result.best_dev_mse)));
    dev_rmse.push_back(std::sqrt(result.best_dev_mse));

    const fs::path model_path = multi ? seeded_path(a.out, seed) : fs::path(a.out);
    if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
    fewer::save_model(result.model, model_path);
    if (!a.history.empty()) {
      auto out = open_output(multi ? seeded_path(a.history, seed) : fs::path(a.history));
      fewer::write_history_csv(out, result.history);
    }
    if (!test_set.empty()) {
      const auto est = fewer::predict(result.model, test_set);
      std::vector<double> tgt;
      for (const auto& ex : test_set) tgt.push_back(ex.target);
      test_rmse.push_back(fewer::rmse(tgt, est));
      test_pcc.push_back(fewer::pcc(tgt, est));
      log(fewer::format("train: test RMSE %.6f  PCC %.6f", test_rmse.back(), test_pcc.back()));
    }
  }

  auto mean_std = [](const std::vector<double>& v) {
    const double m = fewer::mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return fewer::format("%.4f ± %.4f", m, std::sqrt(s / static_cast<double>(v.size())));
  };
  std::vector<std::string> header{"Aggregator", "Seeds", "Dev RMSE"};
  if (!test_rmse.empty()) header.insert(header.end(), {"Test RMSE", "Test PCC"});
  fewer::TextTable table(header);
  std::vector<std::string> row{fewer::to_string(aggregator), std::to_string(seeds.size()),
                               mean_std(dev_rmse)};
  if (!test_rmse.empty()) row.insert(row.end(), {mean_std(test_rmse), mean_std(test_pcc)});
  table.add_row(row);
  std::cout << table.render();
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model, manifest, out;
  std::string estimator = "model";
  std::string confidence_mode = "literal";
};

int run_predict(const PredictArgs& a) {
  const auto records = fewer::load_manifest(a.manifest);
  auto out = open_output(a.out);
  if (a.estimator == "confidence") {
    fewer::ConfidenceMode mode;
    if (a.confidence_mode == "literal") {
      mode = fewer::ConfidenceMode::literal;
    } else if (a.confidence_mode == "mean-prob") {
      mode = fewer::ConfidenceMode::mean_probability;
    } else {
      throw fewer::ConfigError("--confidence-mode must be literal or mean-prob");
    }
    for (const auto& r : records) {
      if (!r.token_logprobs) {
        throw fewer::DataError("predict: record '" + r.id + "' has no token_logprobs");
      }
      nlohmann::ordered_json j;
      j["id"] = r.id;
      j["estimate"] = fewer::confidence_score(*r.token_logprobs, mode);
      fewer::write_jsonl_line(out, j);
    }
  } else if (a.estimator == "model") {
    if (a.model.empty()) throw fewer::ConfigError("predict: --model is required");
    const auto model = fewer::load_model(a.model);
    for (const auto& r : records) {
      const auto speech = fewer::read_features(r.speech_feature_path);
      const auto text = fewer::read_features(r.text_feature_path);
      nlohmann::ordered_json j;
      j["id"] = r.id;
      j["estimate"] = fewer::estimate(model, speech, text);
      fewer::write_jsonl_line(out, j);
    }
  } else {
    throw fewer::ConfigError("--estimator must be model or confidence");
  }
  log("predict: wrote " + std::to_string(records.size()) + " estimates");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string pred, scored, out, table, hist_csv, speaker_csv, svg_dir;
  std::string name = "estimator";
};

std::map<std::string, double> load_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw fewer::DataError("cannot open " + path.string());
  std::map<std::string, double> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      const auto id = j.at("id").get<std::string>();
      if (!out.emplace(id, j.at("estimate").get<double>()).second) {
        throw fewer::DataError(path.string() + ": duplicate id '" + id + "' on line " +
                               std::to_string(line));
      }
    } catch (const nlohmann::json::exception& e) {
      throw fewer::DataError(path.string() + " line " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

int run_eval(const EvalArgs& a) {
  const auto pairs = fewer::load_scored(a.scored);
  const auto preds = load_predictions(a.pred);
  std::vector<double> est;
  est.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = preds.find(p.record.id);
    if (it == preds.end()) {
      throw fewer::DataError("eval: no prediction for '" + p.record.id + "'");
    }
    est.push_back(it->second);
  }
  if (preds.size() != pairs.size()) {
    throw fewer::DataError("eval: " + std::to_string(preds.size()) + " predictions for " +
                           std::to_string(pairs.size()) + " scored pairs");
  }
  const auto report = fewer::full_report(pairs, est);
  if (!a.out.empty()) write_text(a.out, fewer::report_to_json(report).dump(2) + "\n");
  const std::string table = fewer::render_report_table({{a.name, report}});
  if (a.table.empty()) {
    std::cout << table;
  } else {
    write_text(a.table, table);
  }
  if (!a.hist_csv.empty()) {
    auto out = open_output(a.hist_csv);
    fewer::write_histogram_csv(out, report);
  }
  if (!a.speaker_csv.empty()) {
    auto out = open_output(a.speaker_csv);
    fewer::write_speaker_csv(out, report);
  }
  if (!a.svg_dir.empty()) {
    write_text(fs::path(a.svg_dir) / "histogram.svg", fewer::histogram_svg(report));
    write_text(fs::path(a.svg_dir) / "speakers.svg", fewer::speaker_svg(report));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string model, manifest, out, compare;
  std::size_t warmup = 2;
  std::size_t batch = 1;
  std::size_t workers = 0;
};

int run_bench(const BenchArgs& a) {
  const auto model = fewer::load_model(a.model);
  const auto records = fewer::load_manifest(a.manifest);
  const auto report = fewer::bench_estimator(model, records, {a.warmup, a.batch});
  nlohmann::ordered_json j = fewer::timing_to_json(report);

  std::vector<std::pair<std::string, fewer::TimingReport>> systems;
  std::optional<fewer::Comparison> cmp;
  if (!a.compare.empty()) {
    std::ifstream in(a.compare);
    if (!in) throw fewer::DataError("cannot open " + a.compare);
    nlohmann::json base_json;
    try {
      base_json = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw fewer::DataError(a.compare + ": " + e.what());
    }
    const auto base = fewer::timing_from_json(base_json.contains("single_stream")
                                                  ? base_json["single_stream"]
                                                  : base_json);
    cmp = fewer::compare(base, report);
    systems.emplace_back(base.aggregator + " (baseline)", base);
  }
  systems.emplace_back(report.aggregator, report);
  std::cout << fewer::render_timing_table(systems);
  if (cmp) std::cout << '\n' << fewer::render_comparison(*cmp);

  nlohmann::ordered_json doc;
  doc["single_stream"] = j;
  if (a.workers > 0) {
    const auto tp = fewer::bench_throughput(model, records, a.workers);
    doc["throughput"] = fewer::throughput_to_json(tp);
    std::cout << fewer::format("\nThroughput (%zu workers): %.2f utt/s, RTF %.6f\n",
                               tp.workers, tp.utterances_per_second, tp.rtf);
  }
  if (!a.out.empty()) write_text(a.out, doc.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_synth(const fewer::SynthConfig& cfg, const std::string& out_dir) {
  const auto res = fewer::synth_dataset(cfg, out_dir);
  log("synth: wrote " + std::to_string(res.pairs.size()) + " utterances to " + out_dir);
  return kExitOk;
}

int run_validate(const std::vector<std::string>& files) {
  for (const auto& f : files) {
    const auto h = fewer::validate_feature_file(f);
    std::cout << f << ": dim=" << h.dim << " frames=" << h.frames << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WER estimation from speech and text embeddings"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "key=value config file ([subcommand] sections)");
  app.require_subcommand(1);
  app.fallthrough();

  auto seed_option = [](CLI::App* sub, std::uint64_t& seed) {
    sub->add_option("--seed", seed, "Random seed")->envname("FEWER_SEED");
  };

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Compute per-utterance WER against references");
  score_cmd->add_option("--manifest", score.manifest, "Input manifest (JSONL)")->required();
  score_cmd->add_option("--out", score.out, "Scored manifest output")->required();
  score_cmd->add_option("--clamp", score.clamp, "Clamp WER into [0, 1]");
  score_cmd->add_option("--normalize", score.normalize, "Lowercase before tokenizing");
  score_cmd->add_option("--errors", score.errors, "Per-record failures (JSONL)");

  CurateArgs curate;
  auto* curate_cmd = app.add_subcommand("curate", "Duration filter, zero-WER balancing, statistics");
  curate_cmd->add_option("--manifest", curate.manifest, "Scored manifest (JSONL)")->required();
  curate_cmd->add_option("--out", curate.out, "Curated scored manifest")->required();
  curate_cmd->add_option("--max-dur", curate.max_dur, "Maximum duration in seconds (inclusive)")
      ->check(CLI::PositiveNumber);
  curate_cmd->add_flag("--no-duration-filter", curate.no_duration_filter, "Keep all durations");
  curate_cmd->add_option("--bins", curate.bins, "Histogram bins for balancing")
      ->check(CLI::Range(3, 1000000));
  curate_cmd->add_option("--balance-split", curate.balance_split,
                         "Split to balance: train, dev, test, all or none");
  curate_cmd->add_option("--stats", curate.stats, "Statistics table output (default stdout)");
  seed_option(curate_cmd, curate.seed);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train an estimator");
  train_cmd->add_option("--train", train.train, "Training scored manifest")->required();
  train_cmd->add_option("--dev", train.dev, "Development scored manifest")->required();
  train_cmd->add_option("--test", train.test, "Held-out scored manifest (reported only)");
  train_cmd->add_option("--agg", train.agg, "Aggregator: avg or bilstm");
  train_cmd->add_option("--lr", train.cfg.lr_max, "Peak learning rate");
  train_cmd->add_option("--tmax", train.cfg.t_max_epochs, "Cosine annealing period (epochs)");
  train_cmd->add_option("--max-epochs", train.cfg.max_epochs, "Epoch cap");
  train_cmd->add_option("--patience", train.cfg.patience, "Early-stopping patience (0 disables)");
  train_cmd->add_option("--batch", train.cfg.batch_size, "Minibatch size");
  train_cmd->add_option("--dropout", train.cfg.dropout, "Hidden-layer dropout rate");
  seed_option(train_cmd, train.cfg.seed);
  train_cmd->add_option("--seeds", train.seeds, "Train once per seed and report mean ± std")
      ->delimiter(',');
  train_cmd->add_option("--out", train.out, "Model file")->required();
  train_cmd->add_option("--history", train.history, "Per-epoch history CSV");

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Estimate WER for every record");
  predict_cmd->add_option("--model", predict.model, "Model file");
  predict_cmd->add_option("--manifest", predict.manifest, "Manifest (JSONL)")->required();
  predict_cmd->add_option("--out", predict.out, "Predictions output (JSONL)")->required();
  predict_cmd->add_option("--estimator", predict.estimator, "model or confidence");
  predict_cmd->add_option("--confidence-mode", predict.confidence_mode,
                          "literal (1 - mean logprob) or mean-prob (1 - exp(mean logprob))");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare predictions with targets");
  eval_cmd->add_option("--pred", eval.pred, "Predictions (JSONL)")->required();
  eval_cmd->add_option("--scored", eval.scored, "Scored manifest (JSONL)")->required();
  eval_cmd->add_option("--out", eval.out, "Report JSON");
  eval_cmd->add_option("--name", eval.name, "Row label in the table");
  eval_cmd->add_option("--table", eval.table, "Table output (default stdout)");
  eval_cmd->add_option("--hist-csv", eval.hist_csv, "Histogram CSV");
  eval_cmd->add_option("--speaker-csv", eval.speaker_csv, "Per-speaker CSV");
  eval_cmd->add_option("--svg-dir", eval.svg_dir, "Directory for SVG plots");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time the estimator and report RTF");
  bench_cmd->add_option("--model", bench.model, "Model file")->required();
  bench_cmd->add_option("--manifest", bench.manifest, "Manifest (JSONL)")->required();
  bench_cmd->add_option("--warmup", bench.warmup, "Unmeasured passes before timing");
  bench_cmd->add_option("--batch", bench.batch, "Batch size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--workers", bench.workers, "Also run throughput mode with N workers");
  bench_cmd->add_option("--out", bench.out, "Report JSON");
  bench_cmd->add_option("--compare", bench.compare, "Baseline report JSON to compare against");

  fewer::SynthConfig synth;
  std::string synth_dir;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--out-dir", synth_dir, "Output directory")->required();
  synth_cmd->add_option("--n-train", synth.n_train, "Training utterances");
  synth_cmd->add_option("--n-dev", synth.n_dev, "Development utterances");
  synth_cmd->add_option("--n-test", synth.n_test, "Test utterances");
  synth_cmd->add_option("--speech-dim", synth.speech_dim, "Speech feature dim");
  synth_cmd->add_option("--text-dim", synth.text_dim, "Text feature dim");
  synth_cmd->add_option("--speech-frames-min", synth.speech_frames_min);
  synth_cmd->add_option("--speech-frames-max", synth.speech_frames_max);
  synth_cmd->add_option("--text-frames-min", synth.text_frames_min);
  synth_cmd->add_option("--text-frames-max", synth.text_frames_max);
  synth_cmd->add_option("--noise", synth.noise_sigma, "Label noise standard deviation");
  seed_option(synth_cmd, synth.seed);

  std::vector<std::string> feature_files;
  auto* validate_cmd = app.add_subcommand("validate-features", "Check FEW1 feature files");
  validate_cmd->add_option("files", feature_files, "Feature files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) log_resolved(*sub);
    if (*score_cmd) return run_score(score);
    if (*curate_cmd) return run_curate(curate);
    if (*train_cmd) return run_train(train);
    if (*predict_cmd) return run_predict(predict);
    if (*eval_cmd) return run_eval(eval);
    if (*bench_cmd) return run_bench(bench);
    if (*synth_cmd) return run_synth(synth, synth_dir);
    if (*validate_cmd) return run_validate(feature_files);
  } catch (const fewer::ConfigError& e) {
    log(std::string("config error: ") + e.what());
    return kExitConfig;
  } catch (const fewer::ParameterError& e) {
    log(std::string("config error: ") + e.what());
    return kExitConfig;
  } catch (const fewer::NumericError& e) {
    log(std::string("numeric error: ") + e.what());
    return kExitNumeric;
  } catch (const fewer::Error& e) {
    log(std::string("data error: ") + e.what());
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    log(std::string("data error: ") + e.what());
    return kExitData;
  }
  return kExitConfig;
}
