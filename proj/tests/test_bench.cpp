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

#include <gtest/gtest.h>

#include "fewer/bench.hpp"
#include "fewer/synth.hpp"
#include "test_util.hpp"

namespace fewer {
namespace {

constexpr double kTestSetSeconds = 5223.0;

TEST(Rtf, PublishedTimings) {
  EXPECT_NEAR(real_time_factor(5.42, kTestSetSeconds), 0.001038, 1e-6);
  EXPECT_NEAR(real_time_factor(18.64, kTestSetSeconds), 0.003569, 1e-6);
  EXPECT_EQ(real_time_factor(0.0, 1.0), 0.0);
  EXPECT_THROW(real_time_factor(1.0, 0.0), DataError);
  EXPECT_THROW(real_time_factor(-1.0, 1.0), DataError);
}

TimingReport report(double load, double agg, double ff, double total) {
  TimingReport r;
  r.dataset_hash = "h";
  r.stages = {load, agg, ff};
  r.total_seconds = total;
  r.clock_resolution = 1e-9;
  return r;
}

TEST(Compare, PublishedStageTimings) {
  // Feature extraction 2.72 + 0.93 s is shared by both systems.
  const TimingReport bilstm = report(3.65, 5.28, 9.71, 18.64);
  const TimingReport avg = report(3.65, 0.0, 1.77, 5.42);
  const Comparison c = compare(bilstm, avg);
  EXPECT_NEAR(c.total.value, 3.44, 0.005);
  EXPECT_FALSE(c.total.lower_bound);
  EXPECT_NEAR(c.reduction * 100.0, 70.92, 0.01);
  EXPECT_TRUE(c.aggregation.lower_bound);
  EXPECT_EQ(c.aggregation.to_string().front(), '>');
  EXPECT_NEAR(c.feature_load.value, 1.0, 1e-12);
  EXPECT_NEAR(c.estimator.value, (5.28 + 9.71) / 1.77, 1e-12);
  const std::string text = render_comparison(c);
  EXPECT_NE(text.find("3.44x"), std::string::npos);
  EXPECT_NE(text.find("70.92%"), std::string::npos);
}

TEST(Compare, DifferentDatasetsRejected) {
  TimingReport a = report(1, 1, 1, 3), b = report(1, 1, 1, 3);
  b.dataset_hash = "other";
  EXPECT_THROW(compare(a, b), DataError);
}

TEST(Ratio, Formatting) {
  EXPECT_EQ(time_ratio(2.0, 1.0, 1e-9).to_string(), "2.00x");
  EXPECT_EQ(time_ratio(5.0, 0.0, 1e-3).to_string(), ">5000");
}

TEST(DatasetHash, DependsOnIdsDurationsAndOrder) {
  std::vector<UtteranceRecord> r(2);
  r[0].id = "a";
  r[0].duration = 1.0;
  r[1].id = "b";
  r[1].duration = 2.0;
  const std::string h = dataset_hash(r);
  EXPECT_EQ(dataset_hash(r), h);
  std::swap(r[0], r[1]);
  EXPECT_NE(dataset_hash(r), h);
  std::swap(r[0], r[1]);
  r[1].duration = 2.5;
  EXPECT_NE(dataset_hash(r), h);
}

TEST(ClockResolution, PositiveAndSmall) {
  const double res = clock_resolution();
  EXPECT_GT(res, 0.0);
  EXPECT_LT(res, 1e-3);
}

class BenchRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::ScratchDir("bench");
    SynthConfig cfg;
    cfg.n_test = 12;
    cfg.speech_dim = 8;
    cfg.text_dim = 4;
    cfg.speech_frames_max = 40;
    cfg.seed = 3;
    const auto res = synth_dataset(cfg, dir_->path());
    records_ = new std::vector<UtteranceRecord>(load_manifest(res.manifest_path));
  }
  static void TearDownTestSuite() {
    delete records_;
    delete dir_;
  }
  static testing::ScratchDir* dir_;
  static std::vector<UtteranceRecord>* records_;
};

testing::ScratchDir* BenchRun::dir_ = nullptr;
std::vector<UtteranceRecord>* BenchRun::records_ = nullptr;

TEST_F(BenchRun, StagesAndEstimatesAreConsistent) {
  ModelConfig mc;
  mc.speech_dim = 8;
  mc.text_dim = 4;
  const EstimatorModel m = init_model(mc, 1);
  std::vector<double> est;
  const TimingReport r = bench_estimator(m, *records_, {1, 1}, &est);
  EXPECT_EQ(r.utterances, 12u);
  EXPECT_EQ(r.aggregator, "avg_pool");
  ASSERT_EQ(est.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    const auto s = read_features((*records_)[i].speech_feature_path);
    const auto t = read_features((*records_)[i].text_feature_path);
    EXPECT_EQ(est[i], estimate(m, s, t));
  }
  EXPECT_GE(r.total_seconds, r.stages.sum() * 0.999);
  double audio = 0.0;
  for (const auto& rec : *records_) audio += rec.duration;
  EXPECT_DOUBLE_EQ(r.audio_total_seconds, audio);
  EXPECT_DOUBLE_EQ(r.rtf, r.total_seconds / audio);

  const TimingReport back = timing_from_json(timing_to_json(r));
  EXPECT_EQ(back.dataset_hash, r.dataset_hash);
  EXPECT_EQ(back.stages.aggregation, r.stages.aggregation);
  const std::string table = render_timing_table({{"Avg. Pool.", r}, {"copy", back}});
  EXPECT_NE(table.find("RTF"), std::string::npos);
}

TEST_F(BenchRun, BatchedPassGivesSameEstimates) {
  ModelConfig mc;
  mc.aggregator = Aggregator::bilstm;
  mc.speech_dim = 8;
  mc.text_dim = 4;
  const EstimatorModel m = init_model(mc, 2);
  std::vector<double> one, four;
  bench_estimator(m, *records_, {0, 1}, &one);
  bench_estimator(m, *records_, {0, 4}, &four);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(one[i], four[i], 1e-12);
}

TEST_F(BenchRun, ThroughputCoversEveryUtterance) {
  ModelConfig mc;
  mc.speech_dim = 8;
  mc.text_dim = 4;
  const ThroughputReport r = bench_throughput(init_model(mc, 1), *records_, 3);
  EXPECT_EQ(r.utterances, 12u);
  EXPECT_EQ(r.workers, 3u);
  EXPECT_GT(r.utterances_per_second, 0.0);
  EXPECT_EQ(throughput_to_json(r)["mode"], "throughput");
}

TEST(Bench, EmptyDatasetRejected) {
  ModelConfig mc;
  mc.speech_dim = 2;
  mc.text_dim = 2;
  EXPECT_THROW(bench_estimator(init_model(mc, 1), std::vector<UtteranceRecord>{}), DataError);
}

}  // namespace
}  // namespace fewer
