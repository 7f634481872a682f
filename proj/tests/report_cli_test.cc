// Copyright 2026 The rcsim Authors
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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "rcsim/cli.h"
#include "rcsim/report.h"
#include "test_util.h"

namespace rcsim {
namespace {

namespace fs = std::filesystem;

SummaryRow Row(const std::string& wl, const std::string& policy, double mem, double p50, uint64_t seed = 0) {
  SummaryRow r;
  r.workload = wl;
  r.policy = policy;
  r.seed = seed;
  r.mem_gb_min = mem;
  r.e2e_p50 = p50;
  r.e2e_p99 = p50;
  return r;
}

TEST(ReportTest, QuarterOfBaselineIsSeventyFivePercent) {
  const auto rows = Compare({{Row("w", "faas-peak", 100, 10), Row("w", "adaptive", 25, 5)}});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].policy, "adaptive");
  EXPECT_DOUBLE_EQ(rows[0].reduction_pct, 75);
  EXPECT_DOUBLE_EQ(rows[0].speedup, 2);
  EXPECT_DOUBLE_EQ(rows[1].reduction_pct, 0);
  EXPECT_DOUBLE_EQ(rows[1].speedup, 1);
}

TEST(ReportTest, MatchesHandComputedTable) {
  // Two seeds per policy, split across two files.
  const std::vector<std::vector<SummaryRow>> in = {
      {Row("q", "faas-peak", 300, 10, 1), Row("q", "adaptive", 90, 8, 1), Row("q", "always-remote", 150, 12, 1)},
      {Row("q", "faas-peak", 500, 14, 2), Row("q", "adaptive", 110, 10, 2), Row("q", "always-remote", 250, 16, 2)}};
  // Means: base 400 / 12, adaptive 100 / 9, always-remote 200 / 14.
  const std::map<std::string, std::pair<double, double>> want = {
      {"adaptive", {75, 12.0 / 9}}, {"always-remote", {50, 12.0 / 14}}, {"faas-peak", {0, 1}}};
  const auto rows = Compare(in);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.reduction_pct, want.at(r.policy).first, 1e-12) << r.policy;
    EXPECT_NEAR(r.speedup, want.at(r.policy).second, 1e-12) << r.policy;
    EXPECT_DOUBLE_EQ(r.base_mem_gb_min, 400);
  }
}

TEST(ReportTest, KeyMismatch) {
  auto code = [](const std::vector<std::vector<SummaryRow>>& in) {
    try {
      Compare(in);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code({{Row("a", "faas-peak", 1, 1)}, {Row("b", "faas-peak", 1, 1)}}), ErrorCode::kKeyMismatch);
  EXPECT_EQ(code({{Row("a", "adaptive", 1, 1)}}), ErrorCode::kKeyMismatch);
}

TEST(ReportTest, SummaryCsvRoundTrip) {
  SummaryRow r = Row("w", "adaptive", 1.5, 2.25, 3);
  r.used_gb_min = 1.25;
  r.cpu_core_s = 10;
  r.local_frac = 0.5;
  r.recoveries = 2;
  std::stringstream s;
  WriteSummaryCsv(s, {r});
  EXPECT_EQ(s.str().substr(0, s.str().find('\n')), kSummaryHeader);
  const auto back = ParseSummaryCsv(s);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].policy, "adaptive");
  EXPECT_EQ(back[0].seed, 3u);
  EXPECT_EQ(back[0].mem_gb_min, 1.5);
  EXPECT_EQ(back[0].recoveries, 2);
  std::istringstream bad("workload,policy\nx,y\n");
  EXPECT_THROW(ParseSummaryCsv(bad), Error);
}

TEST(CliTest, ParseSeedsAndFailures) {
  EXPECT_EQ(ParseSeeds("1..3"), (std::vector<uint64_t>{1, 2, 3}));
  EXPECT_EQ(ParseSeeds("4,2"), (std::vector<uint64_t>{4, 2}));
  EXPECT_EQ(ParseSeeds("7"), std::vector<uint64_t>{7});
  EXPECT_THROW(ParseSeeds("3..1"), Error);
  EXPECT_THROW(ParseSeeds("x"), Error);
  const FailureSpec f = ParseFailInject("2:c1@0.5");
  EXPECT_EQ(f.invocation, 2);
  EXPECT_EQ(f.component, "c1");
  EXPECT_EQ(f.after_start_s, 0.5);
  EXPECT_EQ(ParseFailInject("c0@1").invocation, 0);
  EXPECT_THROW(ParseFailInject("c0"), Error);
}

TEST(CliTest, LoggingEnv) {
  EXPECT_NO_THROW(ConfigureLogging(nullptr));
  EXPECT_NO_THROW(ConfigureLogging("info"));
  EXPECT_THROW(ConfigureLogging("loud"), Error);
  ConfigureLogging("off");
}

class CliRunTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rcsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "cluster.json") << ClusterConfig::Uniform(1, 2, {16, 32 * kGiB}).ToJson().dump();
    auto spec = testing::DagSpec("small", 3, testing::ChainEdges(3), 1, 512);
    testing::AddData(spec, "D", 256, {0, 2}, 128);
    nlohmann::json bundle = {{"apps", {spec}},
                             {"trace", {{{"app", "small"}, {"arrival_s", 0}, {"scale", 1}},
                                        {{"app", "small"}, {"arrival_s", 1}, {"scale", 2}}}}};
    std::ofstream(dir_ / "small.json") << bundle.dump();
  }
  void TearDown() override { fs::remove_all(dir_); }

  ExperimentMatrix Matrix(const std::string& out) const {
    ExperimentMatrix m;
    m.cluster = dir_ / "cluster.json";
    m.workloads = {dir_ / "small.json"};
    m.policies = {"adaptive", "faas-peak"};
    m.seeds = {1};
    m.out = dir_ / out;
    m.jobs = 2;
    return m;
  }

  static std::map<std::string, std::string> ReadAll(const fs::path& d) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(d)) {
      std::ifstream in(e.path(), std::ios::binary);
      std::stringstream s;
      s << in.rdbuf();
      files[e.path().filename().string()] = s.str();
    }
    return files;
  }

  fs::path dir_;
};

TEST_F(CliRunTest, TwoPoliciesOneSeed) {
  CmdRun(Matrix("out"));
  const auto files = ReadAll(dir_ / "out");
  EXPECT_TRUE(files.count("small.adaptive.s1.report.json"));
  EXPECT_TRUE(files.count("small.faas-peak.s1.report.json"));
  EXPECT_TRUE(files.count("small.adaptive.s1.events.jsonl"));
  const auto rows = LoadSummaryCsv(dir_ / "out" / "summary.csv");
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_EQ(r.workload, "small");

  std::ostringstream table;
  CmdCompare({dir_ / "out" / "summary.csv"}, dir_ / "cmp", table);
  EXPECT_NE(table.str().find("adaptive"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "cmp" / "savings.csv"));
}

TEST_F(CliRunTest, RerunIsByteIdentical) {
  CmdRun(Matrix("a"));
  ExperimentMatrix m = Matrix("b");
  m.jobs = 1;
  CmdRun(m);
  EXPECT_EQ(ReadAll(dir_ / "a"), ReadAll(dir_ / "b"));
}

TEST_F(CliRunTest, ConfigErrorWritesNothing) {
  ExperimentMatrix m = Matrix("bad");
  m.policies.push_back("best-effort");
  try {
    CmdRun(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
  EXPECT_TRUE(!fs::exists(dir_ / "bad") || fs::is_empty(dir_ / "bad"));
}

TEST_F(CliRunTest, ExitCodes) {
  auto run = [](std::vector<std::string> args) {
    args.insert(args.begin(), "rcsim");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return CliMain(static_cast<int>(argv.size()), argv.data());
  };
  const std::string cluster = (dir_ / "cluster.json").string();
  const std::string wl = (dir_ / "small.json").string();
  const std::string out = (dir_ / "cli").string();
  EXPECT_EQ(run({"run", "--cluster", cluster, "--workload", wl, "--policy", "adaptive", "--seeds", "1", "--out",
                 out}),
            0);
  EXPECT_EQ(run({"run", "--bogus"}), 1);
  EXPECT_EQ(run({"run", "--cluster", cluster, "--workload", wl, "--policy", "nope", "--seeds", "1", "--out", out}),
            2);
  EXPECT_EQ(run({"run", "--cluster", (dir_ / "missing.json").string(), "--workload", wl, "--policy", "adaptive",
                 "--seeds", "1", "--out", out}),
            3);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kDeadlock), 4);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kKeyMismatch), 5);
}

}  // namespace
}  // namespace rcsim
