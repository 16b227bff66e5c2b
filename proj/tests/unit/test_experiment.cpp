// Copyright 2026 The hcfgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace hcfgnn {
namespace {

using testing::slurp;
using testing::temp_dir;
using testing::tiny_config;

TEST(Improvement, Examples) {
  EXPECT_DOUBLE_EQ(improvement(2.0, 1.5), 0.25);
  EXPECT_DOUBLE_EQ(improvement(1.7, 1.7), 0.0);
  EXPECT_LT(improvement(1.0, 1.2), 0.0);
  EXPECT_EQ(improvement(0.0, 1.0), 0.0);
}

TEST(Experiment, ReportFilesAndInvariant) {
  const std::string dir = temp_dir("experiment_files");
  const MetricsReport m = run_experiment(tiny_config(), dir);
  EXPECT_GE(m.rmse, m.mae);
  EXPECT_EQ(m.rmse, m.run.test_rmse);
  const json j = json::parse(slurp(dir + "/report.json"));
  EXPECT_EQ(j["final"]["test_rmse"].get<double>(), m.rmse);
  EXPECT_EQ(j["provenance"]["config_hash"].get<std::string>(), config_hash(tiny_config()));
  EXPECT_EQ(j["rounds"].size(), 4u);
  const std::string trace = slurp(dir + "/trace.tsv");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 5);
  EXPECT_TRUE(std::filesystem::exists(dir + "/rounds.log"));
}

TEST(Experiment, OutputIsDeterministic) {
  const std::string a = temp_dir("experiment_det_a"), b = temp_dir("experiment_det_b");
  run_experiment(tiny_config(), a);
  run_experiment(tiny_config(), b);
  EXPECT_EQ(slurp(a + "/report.json"), slurp(b + "/report.json"));
  EXPECT_EQ(slurp(a + "/trace.tsv"), slurp(b + "/trace.tsv"));
}

TEST(Experiment, FailureNamesConfigAndSplit) {
  ExperimentConfig c = tiny_config();
  c.dataset.path = "/nonexistent/matrix.txt";
  try {
    run_experiment(c);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(config_hash(c)), std::string::npos);
    EXPECT_NE(msg.find("RT4"), std::string::npos);
  }
}

TEST(Sweep, SingleValueEqualsRun) {
  ExperimentConfig c = tiny_config();
  const SweepTable t = sweep(c, SweepAxis::kK, {2});
  ASSERT_EQ(t.points.size(), 1u);
  ASSERT_TRUE(t.points[0].ok);
  c.k = 2;
  const MetricsReport m = run_experiment(c);
  EXPECT_EQ(t.points[0].rmse, m.rmse);
  EXPECT_EQ(t.points[0].mae, m.mae);
}

TEST(Sweep, FailedPointIsRecordedAndSkipped) {
  const std::string dir = temp_dir("sweep_fail");
  // k = 24 equals the user count and is rejected; the other points still run.
  const SweepTable t = sweep(tiny_config(), SweepAxis::kK, {1, 24, 3}, dir);
  ASSERT_EQ(t.points.size(), 3u);
  EXPECT_TRUE(t.points[0].ok);
  EXPECT_FALSE(t.points[1].ok);
  EXPECT_FALSE(t.points[1].error.empty());
  EXPECT_TRUE(t.points[2].ok);
  const std::string tsv = slurp(dir + "/sweep_k.tsv");
  EXPECT_EQ(tsv.rfind("k\trmse\tmae\tstatus\n", 0), 0u);
  const std::string dat = slurp(dir + "/sweep_k.dat");
  EXPECT_EQ(std::count(dat.begin(), dat.end(), '\n'), 2);
  EXPECT_THROW(sweep(tiny_config(), SweepAxis::kK, {}), ConfigError);
}

TEST(Sweep, BatchAxisSetsBatch) {
  ExperimentConfig c = tiny_config();
  const SweepTable t = sweep(c, SweepAxis::kBatch, {12});
  c.batch = 12;
  EXPECT_EQ(t.points[0].rmse, run_experiment(c).rmse);
  EXPECT_EQ(parse_axis("batch"), SweepAxis::kBatch);
  EXPECT_THROW(parse_axis("dim"), ConfigError);
}

TEST(Ablation, GainsMatchVariantRuns) {
  const std::string dir = temp_dir("ablation");
  const ExperimentConfig c = tiny_config();
  const AblationTable t = ablation(c, dir);
  for (Variant v : {Variant::kFull, Variant::kWithout, Variant::kAll}) {
    ExperimentConfig cv = c;
    cv.variant = v;
    const double want = run_experiment(cv).rmse;
    const double got = v == Variant::kFull ? t.full.rmse : v == Variant::kWithout ? t.wo.rmse : t.all.rmse;
    EXPECT_EQ(got, want) << variant_name(v);
  }
  EXPECT_DOUBLE_EQ(t.rmse_gain_vs_wo(), improvement(t.wo.rmse, t.full.rmse));
  EXPECT_DOUBLE_EQ(t.mae_gain_vs_all(), improvement(t.all.mae, t.full.mae));
  EXPECT_TRUE(std::filesystem::exists(dir + "/ablation.tsv"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/wo/report.json"));
}

TEST(Experiment, SlicedHeadsRunAndDiffer) {
  ExperimentConfig c = tiny_config();
  const double fixed = run_experiment(c).rmse;
  c.similarity_heads = SimilarityHeads::kSlices;
  const MetricsReport sliced = run_experiment(c);
  EXPECT_TRUE(std::isfinite(sliced.rmse));
  EXPECT_NE(sliced.rmse, fixed);
  c.head_count = c.dim + 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace hcfgnn
