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

// Acceptance checks. Each group prints one PASS/FAIL line per criterion and
// exits non-zero when any of them fails. With no argument every group runs.

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "../gradient_cases.hpp"
#include "../test_util.hpp"
#include "fewer/fewer.hpp"

namespace {

using namespace fewer;
using Clock = std::chrono::steady_clock;

// Tolerances and limits, pinned here rather than taken from the command line.
constexpr double kPercentPointTolerance = 0.01;
constexpr double kRtfTolerance = 1e-6;
constexpr double kGradientTolerance = testing::kGradTolerance;
constexpr double kLstmTolerance = 1e-10;
constexpr double kLearningRmseMax = 0.05;
constexpr double kLearningPccMin = 0.95;
constexpr double kAggregationSpeedupMin = 10.0;
constexpr double kEstimatorSpeedupMin = 3.0;
constexpr std::uint64_t kSeed = 2024;

int g_failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  if (!pass) ++g_failures;
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report_runtime(const std::string& name, Clock::time_point t0, double limit) {
  const double s = seconds_since(t0);
  report(s < limit, name + ".runtime", format("%.3f s (limit %.0f s)", s, limit));
}

void check_werr() {
  const auto t0 = Clock::now();
  struct Row {
    double wrd, dur, expected;
  };
  for (const Row& r : {Row{0.1088, 0.1039, 4.50}, Row{0.0840, 0.3185, 279.16},
                       Row{0.1088, 0.3334, 206.43}}) {
    const double got = werr(r.wrd, r.dur) * 100.0;
    report(std::abs(got - r.expected) <= kPercentPointTolerance,
           format("werr(%.2f%%, %.2f%%)", r.wrd * 100.0, r.dur * 100.0),
           format("%.4f%% (expected %.2f%% +/- %.2f pt)", got, r.expected,
                  kPercentPointTolerance));
  }
  report_runtime("werr", t0, 1.0);
}

void check_rtf() {
  const auto t0 = Clock::now();
  constexpr double kAudioSeconds = 5223.0;
  struct Row {
    double seconds, expected;
  };
  for (const Row& r : {Row{5.42, 0.001038}, Row{18.64, 0.003569}}) {
    const double got = real_time_factor(r.seconds, kAudioSeconds);
    report(std::abs(got - r.expected) <= kRtfTolerance,
           format("rtf(%.2f s / %.0f s)", r.seconds, kAudioSeconds),
           format("%.7f (expected %.6f +/- %.0e)", got, r.expected, kRtfTolerance));
  }
  report_runtime("rtf", t0, 1.0);
}

void check_edit_distance() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<std::size_t> ref_len(1, 40), hyp_len(0, 40), vocab(2, 12);
  std::size_t mismatches = 0;
  constexpr int kPairs = 1000;
  for (int i = 0; i < kPairs; ++i) {
    const std::size_t v = vocab(rng);
    const auto ref = testing::random_tokens(ref_len(rng), v, rng);
    const auto hyp = testing::random_tokens(hyp_len(rng), v, rng);
    const auto c = word_error_counts(ref, hyp);
    if (static_cast<std::size_t>(c.errors()) != testing::levenshtein_oracle(ref, hyp)) {
      ++mismatches;
    }
  }
  report(mismatches == 0, "edit_distance.oracle",
         format("%zu of %d random pairs differ from the DP oracle", mismatches, kPairs));
  report_runtime("edit_distance", t0, 10.0);
}

void check_gradients() {
  const auto t0 = Clock::now();
  constexpr int kCases = 100;
  std::map<std::string, double> worst;
  for (int seed = 0; seed < kCases; ++seed) {
    for (const auto& [name, err] : testing::op_gradient_errors(static_cast<std::uint64_t>(seed))) {
      worst[name] = std::max(worst[name], err);
    }
  }
  for (const auto& [name, err] : worst) {
    report(err <= kGradientTolerance, "gradients." + name,
           format("max relative error %.2e over %d cases (limit %.0e)", err, kCases,
                  kGradientTolerance));
  }

  double estimator_worst = 0.0;
  for (int seed = 0; seed < kCases; ++seed) {
    ModelConfig mc;
    mc.speech_dim = 10;
    mc.text_dim = 6;
    EstimatorModel m = init_model(mc, static_cast<std::uint64_t>(seed));
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 7919);
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (Tensor* p : m.parameters()) {
      for (double& v : p->values()) v += jitter(rng);
    }
    const Tensor speech = testing::random_tensor(2 + rng() % 20, 10, rng);
    const Tensor text = testing::random_tensor(1 + rng() % 5, 6, rng);
    const double target = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    estimator_worst = std::max(
        estimator_worst, testing::estimator_gradient_error(m, speech, text, target, Mode::train,
                                                           static_cast<std::uint64_t>(seed), 12));
  }
  report(estimator_worst <= kGradientTolerance, "gradients.avg_pool_estimator",
         format("max relative error %.2e over %d cases (limit %.0e)", estimator_worst, kCases,
                kGradientTolerance));
  report_runtime("gradients", t0, 60.0);
}

void check_bilstm() {
  const auto t0 = Clock::now();
  constexpr int kCases = 50;
  std::mt19937_64 rng(kSeed);
  double worst = 0.0;
  for (int i = 0; i < kCases; ++i) {
    const std::size_t dim = 1 + rng() % 16;
    const std::size_t frames = 1 + rng() % 50;
    ModelConfig mc;
    mc.aggregator = Aggregator::bilstm;
    mc.speech_dim = dim;
    mc.text_dim = 2;
    const EstimatorModel m = init_model(mc, rng());
    const Tensor x = testing::random_tensor(frames, dim, rng);
    const Tensor out = aggregate_bilstm(x, *m.lstm);
    const auto& f = m.lstm->forward;
    const auto& b = m.lstm->backward;
    const auto fwd = testing::lstm_oracle(x, f.w_input, f.w_hidden, f.bias, false);
    const auto bwd = testing::lstm_oracle(x, b.w_input, b.w_hidden, b.bias, true);
    for (std::size_t u = 0; u < dim; ++u) {
      worst = std::max({worst, std::abs(out[u] - fwd[u]), std::abs(out[dim + u] - bwd[u])});
    }
  }
  report(worst <= kLstmTolerance, "bilstm.oracle",
         format("max abs difference %.2e over %d cases (limit %.0e)", worst, kCases,
                kLstmTolerance));
  report_runtime("bilstm", t0, 30.0);
}

ScoredPair pair_with(std::size_t i, double wer) {
  ScoredPair p;
  p.record.id = "p" + std::to_string(i);
  p.record.duration = 1.0;
  p.wer = wer;
  return p;
}

std::size_t zero_count(const std::vector<ScoredPair>& v) {
  std::size_t n = 0;
  for (const auto& p : v) n += p.wer == 0.0 ? 1 : 0;
  return n;
}

void check_balancing() {
  const auto t0 = Clock::now();
  struct Case {
    const char* name;
    std::size_t zeros, c2, c3;
  };
  // c2 and c3 land in bins 10 and 25; one extra pair sits in bin 90.
  const Case cases[] = {{"capped", 500, 120, 80},
                        {"tied_bins", 400, 60, 60},
                        {"no_op", 30, 120, 80},
                        {"exact_boundary", 200, 120, 80}};
  for (const Case& c : cases) {
    std::vector<ScoredPair> v;
    std::size_t k = 0;
    for (std::size_t i = 0; i < c.zeros; ++i) v.push_back(pair_with(k++, 0.0));
    for (std::size_t i = 0; i < c.c2; ++i) v.push_back(pair_with(k++, 0.105));
    for (std::size_t i = 0; i < c.c3; ++i) v.push_back(pair_with(k++, 0.255));
    v.push_back(pair_with(k++, 0.905));
    const std::size_t expected = std::min(c.zeros, c.c2 + c.c3);
    const auto a = balance_zero_wer(v, 100, kSeed);
    const auto b = balance_zero_wer(v, 100, kSeed);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].record.id == b[i].record.id;
    report(zero_count(a) == expected && a.size() == v.size() - c.zeros + expected && same,
           std::string("balancing.") + c.name,
           format("kept %zu zero-WER pairs (expected min(%zu, %zu + %zu) = %zu), %s per seed",
                  zero_count(a), c.zeros, c.c2, c.c3, expected,
                  same ? "deterministic" : "NOT deterministic"));
  }

  // Random histograms against an independent count of the top bins.
  std::mt19937_64 rng(kSeed);
  std::size_t mismatches = 0, trials = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<ScoredPair> v;
    std::vector<std::size_t> hist(100, 0);
    const std::size_t n = 50 + rng() % 400;
    for (std::size_t i = 0; i < n; ++i) {
      const bool zero = rng() % 3 == 0;
      const std::size_t bin = zero ? 0 : rng() % 100;
      ++hist[bin];
      v.push_back(pair_with(i, zero ? 0.0 : (static_cast<double>(bin) + 0.5) / 100.0));
    }
    std::vector<std::size_t> sorted = hist;
    std::sort(sorted.rbegin(), sorted.rend());
    if (sorted[2] == 0) continue;
    ++trials;
    const std::size_t expected = std::min(zero_count(v), sorted[1] + sorted[2]);
    if (zero_count(balance_zero_wer(v, 100, static_cast<std::uint64_t>(t))) != expected) {
      ++mismatches;
    }
  }
  report(mismatches == 0, "balancing.random_histograms",
         format("%zu of %zu random histograms differ from min(n0, c2 + c3)", mismatches,
                trials));
  report_runtime("balancing", t0, 5.0);
}

void check_learning() {
  const auto t0 = Clock::now();
  testing::ScratchDir dir("accept-learning");
  SynthConfig sc;
  sc.n_train = 2000;
  sc.n_dev = 500;
  sc.n_test = 500;
  sc.speech_dim = 32;
  sc.text_dim = 16;
  sc.seed = kSeed;
  const SynthResult data = synth_dataset(sc, dir.path());
  std::vector<ScoredPair> split[3];
  for (const auto& p : data.pairs) split[static_cast<int>(p.record.split)].push_back(p);
  const auto train_set = load_examples(split[0]);
  const auto dev_set = load_examples(split[1]);
  const auto test_set = load_examples(split[2]);

  // Default recipe except for the minibatch size.
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.seed = kSeed;
  ModelConfig mc;
  mc.speech_dim = sc.speech_dim;
  mc.text_dim = sc.text_dim;
  const TrainResult r = train(init_model(mc, kSeed), train_set, dev_set, cfg);
  const auto est = predict(r.model, test_set);
  const auto targets = detail::targets_of(test_set);
  const double test_rmse = rmse(targets, est);
  const double test_pcc = pcc(targets, est);

  std::vector<double> oracle;
  for (const auto& ex : test_set) {
    oracle.push_back(synth_clean_target(
        data.hidden, kernels::concat_cols(kernels::mean_pool(ex.speech), kernels::mean_pool(ex.text))));
  }
  const std::string context =
      format("best epoch %zu of %zu, batch %zu, known-parameter RMSE %.4f", r.best_epoch,
             r.history.size(), cfg.batch_size, rmse(targets, oracle));
  report(test_rmse <= kLearningRmseMax, "learning.rmse",
         format("held-out RMSE %.4f (limit %.2f); %s", test_rmse, kLearningRmseMax,
                context.c_str()));
  report(test_pcc >= kLearningPccMin, "learning.pcc",
         format("held-out PCC %.4f (minimum %.2f)", test_pcc, kLearningPccMin));
  report_runtime("learning", t0, 300.0);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FEWER_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void check_determinism() {
  testing::ScratchDir dir("accept-determinism");
  const auto data = dir.path() / "data";
  int rc = run_cli("synth --out-dir " + data.string() +
                   " --n-train 200 --n-dev 50 --n-test 0 --speech-dim 16 --text-dim 8 --seed 5");
  std::vector<ScoredPair> split[3];
  if (rc == 0) {
    for (const auto& p : load_scored(data / "scored.jsonl")) {
      split[static_cast<int>(p.record.split)].push_back(p);
    }
    save_scored(split[0], dir.path() / "train.jsonl");
    save_scored(split[1], dir.path() / "dev.jsonl");
  }
  const std::string args = "train --train " + (dir.path() / "train.jsonl").string() + " --dev " +
                           (dir.path() / "dev.jsonl").string() +
                           " --max-epochs 5 --batch 16 --seed 9 --out ";
  for (const char* agg : {"avg", "bilstm"}) {
    const auto a = dir.path() / (std::string(agg) + "_a.bin");
    const auto b = dir.path() / (std::string(agg) + "_b.bin");
    const std::string extra = std::string(" --agg ") + agg;
    const int ra = rc == 0 ? run_cli(args + a.string() + extra) : rc;
    const int rb = rc == 0 ? run_cli(args + b.string() + extra) : rc;
    const std::string bytes_a = slurp(a);
    const bool same = ra == 0 && rb == 0 && !bytes_a.empty() && bytes_a == slurp(b);
    report(same, std::string("determinism.") + agg,
           format("two CLI training runs: exit %d/%d, %zu-byte model files %s", ra, rb,
                  bytes_a.size(), same ? "byte-identical" : "differ"));
  }
}

void check_speed() {
  testing::ScratchDir dir("accept-speed");
  SynthConfig sc;
  sc.n_test = 1000;
  sc.speech_dim = 1024;
  sc.text_dim = 1024;
  sc.speech_frames_min = 50;
  sc.speech_frames_max = 500;
  sc.seed = kSeed;
  const auto t_synth = Clock::now();
  const SynthResult data = synth_dataset(sc, dir.path());
  const auto records = load_manifest(data.manifest_path);
  std::cout << format("speed: generated %zu utterances in %.1f s", records.size(),
                      seconds_since(t_synth))
            << std::endl;

  ModelConfig mc;
  mc.speech_dim = sc.speech_dim;
  mc.text_dim = sc.text_dim;
  const EstimatorModel avg = init_model(mc, kSeed);
  mc.aggregator = Aggregator::bilstm;
  const EstimatorModel bilstm = init_model(mc, kSeed);

  // One measured pass each; a warm-up pass of the recurrent model would
  // double an already long run.
  const BenchOptions opts{0, 1};
  const TimingReport b = bench_estimator(bilstm, records, opts);
  const TimingReport a = bench_estimator(avg, records, opts);
  std::cout << render_timing_table({{"BiLSTM", b}, {"Avg. Pool.", a}});
  const Comparison c = compare(b, a);
  std::cout << render_comparison(c);

  report(c.aggregation.value >= kAggregationSpeedupMin, "speed.aggregation",
         format("avg_pool aggregation %s faster than bilstm (%.3f s vs %.3f s, minimum %.0fx)",
                c.aggregation.to_string().c_str(), a.stages.aggregation, b.stages.aggregation,
                kAggregationSpeedupMin));
  report(c.estimator.value >= kEstimatorSpeedupMin, "speed.estimator",
         format("avg_pool estimator path %s faster than bilstm (%.3f s vs %.3f s, minimum %.0fx)",
                c.estimator.to_string().c_str(), a.stages.estimator(), b.stages.estimator(),
                kEstimatorSpeedupMin));
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<void()>> groups = {
      {"werr", check_werr},
      {"rtf", check_rtf},
      {"edit_distance", check_edit_distance},
      {"gradients", check_gradients},
      {"bilstm", check_bilstm},
      {"balancing", check_balancing},
      {"learning", check_learning},
      {"determinism", check_determinism},
      {"speed", check_speed},
  };
  std::vector<std::string> selected(argv + 1, argv + argc);
  if (selected.empty()) {
    selected = {"werr",     "rtf",      "edit_distance", "gradients", "bilstm",
                "balancing", "learning", "determinism",   "speed"};
  }
  for (const auto& name : selected) {
    const auto it = groups.find(name);
    if (it == groups.end()) {
      std::cerr << "unknown group '" << name << "'\n";
      return 2;
    }
    try {
      it->second();
    } catch (const std::exception& e) {
      report(false, name, std::string("exception: ") + e.what());
    }
  }
  std::cout << (g_failures == 0 ? "all criteria passed" : format("%d criteria failed", g_failures))
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
