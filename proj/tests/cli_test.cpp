// Copyright 2026 The mncover Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "nlohmann/json.hpp"
#include "test_support.hpp"

namespace mncover {
namespace {

using testing::ReadBytes;
using testing::TempFile;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult RunCli(const std::string& args) {
  TempFile out("stdout.txt"), err("stderr.txt");
  const std::string cmd = std::string(MNCOVER_CLI_PATH) + " " + args + " > " +
                          out.path() + " 2> " + err.path();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = ReadBytes(out.path());
  r.err = ReadBytes(err.path());
  return r;
}

nlohmann::json ReadJson(const std::string& path) {
  return nlohmann::json::parse(ReadBytes(path));
}

// Model, suite and calibrated ranges written to disk by the CLI itself.
class CliPipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    suite_ = testing::SentenceSuite(40, 60, 10, 3);
    SaveSuite(suite_, suite_file_.path());
    const RunResult gen = RunCli(
        "gen-traces --suite " + suite_file_.path() + " --out " + traces_.path() +
        " --vocab 60 --hidden 8 --heads 2 --layers 2 --max-len 12 --seed 5"
        " --bins 6 --model-out " + model_.path());
    ASSERT_EQ(gen.exit_code, 0) << gen.err;
    const RunResult cal =
        RunCli("calibrate --traces " + traces_.path() + " --out " + ranges_.path());
    ASSERT_EQ(cal.exit_code, 0) << cal.err;
  }

  std::string Engine() const {
    return " --ranges " + ranges_.path();
  }

  TestSuite suite_;
  TempFile suite_file_{"suite.jsonl"}, traces_{"traces.bin"},
      model_{"model.json"}, ranges_{"ranges.bin"};
};

TEST_F(CliPipelineTest, MatchesInProcessRun) {
  TinyModelConfig cfg;
  cfg.vocab_size = 60;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.layers = 2;
  cfg.max_len = 12;
  cfg.seed = 5;
  auto model = std::make_shared<TinyModel>(TinyModel::Generate(cfg));
  const ModelProfile profile = model->Profile(6);
  std::vector<ActivationTrace> traces;
  for (const auto& in : suite_) traces.push_back(Forward(*model, in.tokens, in.id));
  auto ranges = std::make_shared<NeuronRanges>(Calibrate(traces, profile));
  const CoverageEngine engine(profile, ranges);
  const FilterOutcome want = Filter(suite_, engine, ModelTraceSource(model));

  TempFile report("filter.json");
  for (const std::string& source :
       {" --traces " + traces_.path(), " --model " + model_.path() + " --bins 6"}) {
    const RunResult r = RunCli("filter --suite " + suite_file_.path() + source +
                               Engine() + " --out " + report.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = ReadJson(report.path());
    EXPECT_EQ(j["kept"].get<std::vector<std::uint64_t>>(), want.kept);
    EXPECT_EQ(j["report"]["cover"].get<double>(), want.final_report.cover);
    EXPECT_EQ(j["report"]["mncover"].get<double>(), want.final_report.mncover);
    EXPECT_EQ(j["size_reduction"].get<double>(), want.size_reduction);
  }

  // Threshold 0 keeps everything the whole suite covers.
  const CoverageState full = IngestSuite(suite_, engine, ModelTraceSource(model));
  EXPECT_EQ(engine.Report(full).cover, want.final_report.cover);
  const RunResult cover = RunCli("cover --traces " + traces_.path() + Engine() +
                                 " --out " + report.path());
  ASSERT_EQ(cover.exit_code, 0) << cover.err;
  EXPECT_EQ(ReadJson(report.path())["cover"].get<double>(), want.final_report.cover);
}

TEST_F(CliPipelineTest, DuplicatedSuiteReducesByNinetyPercent) {
  TestSuite dup;
  for (std::uint64_t i = 0; i < 10; ++i) {
    TestInput in = suite_[0];
    in.id = i;
    dup.Add(in);
  }
  TempFile dup_file("dup.jsonl"), report("filter.json");
  SaveSuite(dup, dup_file.path());
  const RunResult r = RunCli("filter --suite " + dup_file.path() + " --model " +
                             model_.path() + " --bins 6" + Engine() +
                             " --threshold 0 --out " + report.path());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = ReadJson(report.path());
  EXPECT_EQ(j["size_reduction"].get<double>(), 0.9);
  EXPECT_EQ(j["kept_count"].get<int>(), 1);
}

TEST_F(CliPipelineTest, EmptyTraceFileHasZeroCoverage) {
  TempFile empty("empty.bin"), report("cover.json");
  WriteTraces(empty.path(), TraceReader(traces_.path()).profile(), {});
  const RunResult r = RunCli("cover --traces " + empty.path() + Engine() +
                             " --out " + report.path());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = ReadJson(report.path());
  EXPECT_EQ(j["cover"].get<double>(), 0.0);
  EXPECT_EQ(j["mncover"].get<double>(), 0.0);
  EXPECT_EQ(j["traces"].get<int>(), 0);
}

TEST_F(CliPipelineTest, OutputsAreByteIdenticalAcrossRuns) {
  TempFile a1("a1"), a2("a2"), b1("b1"), b2("b2"), c1("c1"), c2("c2");
  const std::string filter = "filter --suite " + suite_file_.path() + " --traces " +
                             traces_.path() + Engine() +
                             " --threshold 0.001 --shuffle --seed 4";
  ASSERT_EQ(RunCli(filter + " --out " + a1.path() + " --curve " + b1.path()).exit_code, 0);
  ASSERT_EQ(RunCli(filter + " --out " + a2.path() + " --curve " + b2.path()).exit_code, 0);
  EXPECT_EQ(ReadBytes(a1.path()), ReadBytes(a2.path()));
  EXPECT_EQ(ReadBytes(b1.path()), ReadBytes(b2.path()));

  const std::string augment = "augment --suite " + suite_file_.path() + " --model " +
                              model_.path() + " --bins 6" + Engine() + " --seed 8";
  ASSERT_EQ(RunCli(augment + " --out " + a1.path() + " --log " + b1.path() +
                   " --report " + c1.path()).exit_code, 0);
  ASSERT_EQ(RunCli(augment + " --out " + a2.path() + " --log " + b2.path() +
                   " --report " + c2.path()).exit_code, 0);
  EXPECT_EQ(ReadBytes(a1.path()), ReadBytes(a2.path()));
  EXPECT_EQ(ReadBytes(b1.path()), ReadBytes(b2.path()));
  EXPECT_EQ(ReadBytes(c1.path()), ReadBytes(c2.path()));
  EXPECT_FALSE(ReadBytes(b1.path()).empty());

  // Shard count does not show in the output.
  const std::string cover = "cover --traces " + traces_.path() + Engine();
  ASSERT_EQ(RunCli(cover + " --out " + a1.path() + " --state " + b1.path()).exit_code, 0);
  ASSERT_EQ(RunCli(cover + " --shards 3 --out " + a2.path() + " --state " + b2.path())
                .exit_code, 0);
  EXPECT_EQ(ReadBytes(a1.path()), ReadBytes(a2.path()));
  EXPECT_EQ(ReadBytes(b1.path()), ReadBytes(b2.path()));
}

TEST_F(CliPipelineTest, CompareWritesOneRowPerSuite) {
  TempFile csv("compare.csv"), report("compare.json");
  const RunResult r = RunCli("compare --suite " + suite_file_.path() + " --suite " +
                             suite_file_.path() + " --traces " + traces_.path() +
                             Engine() + " --csv " + csv.path() + " --out " + report.path());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = ReadJson(report.path());
  ASSERT_EQ(j["suites"].size(), 2u);
  EXPECT_EQ(j["suites"][1]["cumulative"]["cover"], j["suites"][0]["individual"]["cover"]);
  std::istringstream rows(ReadBytes(csv.path()));
  std::string line;
  int n = 0;
  while (std::getline(rows, line)) ++n;
  EXPECT_EQ(n, 3);
}

TEST_F(CliPipelineTest, ErrorsHaveDistinctExitCodes) {
  const RunResult unknown =
      RunCli("cover --traces " + traces_.path() + Engine() + " --bogus");
  const RunResult missing = RunCli("cover --traces /nonexistent/t.bin" + Engine());
  const RunResult digest = RunCli("filter --suite " + suite_file_.path() + " --model " +
                                  model_.path() + Engine());  // default bins 10
  EXPECT_NE(unknown.exit_code, 0);
  EXPECT_NE(missing.exit_code, 0);
  EXPECT_NE(digest.exit_code, 0);
  EXPECT_NE(unknown.exit_code, missing.exit_code);
  EXPECT_NE(unknown.exit_code, digest.exit_code);
  EXPECT_NE(missing.exit_code, digest.exit_code);
  EXPECT_EQ(missing.err.rfind("error code=not_found ", 0), 0u) << missing.err;
  EXPECT_EQ(digest.err.rfind("error code=digest_mismatch ", 0), 0u) << digest.err;
  EXPECT_EQ(unknown.err.rfind("error code=usage ", 0), 0u) << unknown.err;
  for (const auto* r : {&unknown, &missing, &digest}) {
    EXPECT_EQ(std::count(r->err.begin(), r->err.end(), '\n'), 1) << r->err;
    EXPECT_TRUE(r->out.empty());
  }
}

TEST_F(CliPipelineTest, AugmentRequiresModel) {
  const RunResult r = RunCli("augment --suite " + suite_file_.path() + Engine());
  EXPECT_EQ(r.exit_code, 2);
}

}  // namespace
}  // namespace mncover
