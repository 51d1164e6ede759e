// Copyright 2026 The attachfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "attachfuzz/experiment.h"
#include "gtest/gtest.h"

namespace attachfuzz {
namespace {

namespace fs = std::filesystem;

fs::path ScratchDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() /
                     ("attachfuzz_test_" + name + "_" +
                      std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CampaignConfig Small(FuzzerKind kind, const fs::path& out, int sets = 2,
                     int64_t iterations = 10) {
  CampaignConfig c;
  c.fuzzer.kind = kind;
  c.fuzzer.max_iterations = iterations;
  c.sets = sets;
  c.out_dir = out.string();
  return c;
}

// Exact binomial tail from Pascal's triangle.
double OracleSignP(int wins, int n) {
  std::vector<double> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<double> next(row.size() + 1, 0);
    for (size_t j = 0; j < row.size(); ++j) {
      next[j] += row[j];
      next[j + 1] += row[j];
    }
    row = next;
  }
  double tail = 0;
  for (int x = wins; x <= n; ++x) tail += row[x];
  return tail / std::pow(2.0, n);
}

// Mid-ranks by counting, then Pearson on the ranks.
double OracleSpearman(const std::vector<double>& x,
                      const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(Config, ParsesKeysAndComments) {
  const CampaignConfig c = ParseConfig(
      "# campaign\n"
      "mode = random\n"
      "direction = UL\n"
      "layer = MAC   # trailing comment\n"
      "k = 1.5\n"
      "feedback = black\n"
      "iterations = 50\n"
      "sets = 3\n"
      "rng_seed = 77\n"
      "out_dir = /tmp/x\n"
      "diagnostics = 1\n");
  EXPECT_EQ(c.fuzzer.kind, FuzzerKind::kRandom);
  EXPECT_EQ(c.direction, Direction::kUplink);
  EXPECT_EQ(c.layer, Layer::kMac);
  EXPECT_EQ(c.fuzzer.k, 1.5);
  EXPECT_EQ(c.fuzzer.feedback, FeedbackMode::kBlack);
  EXPECT_EQ(c.fuzzer.max_iterations, 50);
  EXPECT_EQ(c.sets, 3);
  EXPECT_EQ(c.fuzzer.rng_seed, 77u);
  EXPECT_EQ(c.out_dir, "/tmp/x");
  EXPECT_TRUE(c.diagnostics);
}

TEST(Config, CoverageDefaultsToThree) {
  EXPECT_EQ(ParseConfig("mode = coverage\n").fuzzer.k, 3.0);
  EXPECT_EQ(ParseConfig("mode = coverage\nk = 1\n").fuzzer.k, 1.0);
  EXPECT_EQ(ParseConfig("mode = random\n").fuzzer.k, 0.5);
}

TEST(Config, Errors) {
  EXPECT_THROW(ParseConfig("colour = red\n"), std::invalid_argument);
  EXPECT_THROW(ParseConfig("k 3\n"), std::invalid_argument);
  EXPECT_THROW(ParseConfig("k = three\n"), std::invalid_argument);
  EXPECT_THROW(ParseConfig("sets = 2x\n"), std::invalid_argument);
  CampaignConfig c;
  c.sets = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

TEST(Campaign, NoFuzzIsFlatAfterTheFirstIteration) {
  const fs::path dir = ScratchDir("nofuzz");
  const CampaignSummary s = RunCampaign(Small(FuzzerKind::kNoFuzz, dir));
  ASSERT_EQ(s.final_total_units_dut.size(), 2u);
  int rows = 0;
  for (int set = 0; set < 2; ++set) {
    const auto records =
        ReadSetCsv((dir / ("set_" + std::to_string(set) + ".csv")).string());
    ASSERT_EQ(records.size(), 10u);
    rows += records.size();
    for (const IterationRecord& r : records) {
      EXPECT_EQ(r.total_units_dut, records.front().total_units_dut);
      EXPECT_EQ(r.total_units_peer, records.front().total_units_peer);
      EXPECT_EQ(r.mutated_fields, 0u);
      EXPECT_EQ(r.packets, 9);
      EXPECT_TRUE(r.crash_id.empty());
      if (r.iteration > 1) EXPECT_EQ(r.new_units_dut, 0u);
    }
  }
  EXPECT_EQ(rows, 20);
  EXPECT_EQ(s.final_total_units_dut[0], s.final_total_units_dut[1]);
  EXPECT_FALSE(fs::exists(dir / "crashes"));
  fs::remove_all(dir);
}

TEST(Campaign, OutputsAreByteIdenticalAcrossRuns) {
  const fs::path a = ScratchDir("det_a");
  const fs::path b = ScratchDir("det_b");
  CampaignConfig ca = Small(FuzzerKind::kCoverage, a, 2, 300);
  ca.fuzzer.k = 3;
  ca.diagnostics = true;
  CampaignConfig cb = ca;
  cb.out_dir = b.string();
  RunCampaign(ca);
  RunCampaign(cb);
  size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(Slurp(e.path()), Slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GE(files, 5u);  // 2 sets, 2 probability snapshots, summary
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Campaign, CsvTotalsAreRunningSumsAndCrashesHaveSeeds) {
  const fs::path dir = ScratchDir("totals");
  CampaignConfig c = Small(FuzzerKind::kRandom, dir, 1, 400);
  c.fuzzer.k = 3;
  RunCampaign(c);
  const auto records = ReadSetCsv((dir / "set_0.csv").string());
  ASSERT_EQ(records.size(), 400u);
  uint64_t dut = 0, peer = 0;
  for (const IterationRecord& r : records) {
    dut += r.new_units_dut;
    peer += r.new_units_peer;
    ASSERT_EQ(r.total_units_dut, dut);
    ASSERT_EQ(r.total_units_peer, peer);
    const fs::path seed =
        dir / "crashes" / "set_0" / (std::to_string(r.iteration) + ".seed");
    ASSERT_EQ(fs::exists(seed), !r.crash_id.empty() || r.hang);
    if (fs::exists(seed)) {
      const Seed s = ReadSeedFile(seed.string());
      ASSERT_NE(s.Annotation("bug"), nullptr);
    }
  }
  fs::remove_all(dir);
}

TEST(Campaign, RandomBeatsNoFuzzBaseline) {
  const fs::path a = ScratchDir("rand");
  const fs::path b = ScratchDir("base");
  const CampaignSummary random = RunCampaign(Small(FuzzerKind::kRandom, a, 2, 200));
  const CampaignSummary base = RunCampaign(Small(FuzzerKind::kNoFuzz, b, 2, 200));
  EXPECT_GT(random.median, base.median);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Summary, RoundTrip) {
  const fs::path dir = ScratchDir("summary");
  fs::create_directories(dir);
  CampaignSummary s;
  s.final_total_units_dut = {10, 30, 20};
  s.median = 20;
  {
    std::ofstream out(dir / "summary.csv");
    out << FormatSummary(s);
  }
  const CampaignSummary back = ReadSummary((dir / "summary.csv").string());
  EXPECT_EQ(back.final_total_units_dut, s.final_total_units_dut);
  EXPECT_EQ(back.median, 20.0);
  EXPECT_NE(FormatSummary(s).find("median,20.0\n"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Stats, Median) {
  EXPECT_EQ(Median({3, 1, 2}), 2.0);
  EXPECT_EQ(Median({4, 1, 2, 3}), 2.5);
  EXPECT_TRUE(std::isnan(Median({})));
}

TEST(Stats, SignTestMatchesBinomialTail) {
  const SignTest all = PairedSignTest({2, 2, 2, 2, 2, 2, 2, 2, 2, 2},
                                      {1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  EXPECT_EQ(all.wins, 10);
  EXPECT_NEAR(all.p_value, 1.0 / 1024, 1e-12);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 300; ++t) {
    const int n = 1 + rng() % 25;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng() % 5;
      b[i] = rng() % 5;
    }
    const SignTest s = PairedSignTest(a, b);
    ASSERT_EQ(s.wins + s.losses + s.ties, n);
    const int m = s.wins + s.losses;
    ASSERT_NEAR(s.p_value, m == 0 ? 1.0 : OracleSignP(s.wins, m), 1e-9);
  }
  // Nine wins out of ten is the least that clears 0.05.
  EXPECT_LT(OracleSignP(9, 10), 0.05);
  EXPECT_GT(OracleSignP(8, 10), 0.05);
}

TEST(Stats, SpearmanMatchesRankPearson) {
  EXPECT_NEAR(SpearmanCorrelation({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-12);
  EXPECT_NEAR(SpearmanCorrelation({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-12);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 300; ++t) {
    const int n = 3 + rng() % 30;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng() % 10;
      y[i] = x[i] + rng() % 7;
    }
    const double want = OracleSpearman(x, y);
    if (std::isnan(want)) continue;
    ASSERT_NEAR(SpearmanCorrelation(x, y), want, 1e-9);
  }
}

TEST(Compare, SelfIsZeroAndBaselineShifts) {
  CampaignSummary a;
  a.final_total_units_dut = {110, 120, 130};
  CampaignSummary b;
  b.final_total_units_dut = {100, 105, 110};
  EXPECT_EQ(CompareCampaigns(a, a).improvement_percent, 0.0);
  EXPECT_EQ(CompareCampaigns(a, a).sign.ties, 3);
  const Comparison raw = CompareCampaigns(a, b);
  EXPECT_NEAR(raw.improvement_percent, (120.0 - 105) / 105 * 100, 1e-9);
  const Comparison shifted = CompareCampaigns(a, b, 100);
  EXPECT_NEAR(shifted.improvement_percent, (20.0 - 5) / 5 * 100, 1e-9);
  EXPECT_EQ(shifted.sign.wins, 3);
  b.final_total_units_dut.pop_back();
  EXPECT_THROW(CompareCampaigns(a, b), std::invalid_argument);
}

int RunCli(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = std::string(ATTACHFUZZ_CLI) + " " + args + " > " +
                          stdout_file.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ReproduceAndExitCodes) {
  const fs::path dir = ScratchDir("cli");
  fs::create_directories(dir);
  const fs::path out = dir / "stdout.txt";

  Seed crash;
  crash.rng_seed = 1;
  MutationPatch patch;
  patch.mutations.push_back({FieldKey{"ConnSetup", "pucch_resource", 0},
                             Mutator{MutatorKind::kSet, 0}});
  crash.entries.push_back({0, patch, {}});
  crash.Annotate("bug", "ue.pucch_null_resource");
  crash.Annotate("direction", "DL");
  crash.Annotate("layer", "RRC");
  WriteSeedFile((dir / "crash.seed").string(), crash);
  EXPECT_EQ(RunCli("reproduce -m full " + (dir / "crash.seed").string(), out), 0);
  EXPECT_NE(Slurp(out).find("ue.pucch_null_resource"), std::string::npos);
  EXPECT_EQ(RunCli("reproduce " + (dir / "crash.seed").string(), out), 0);

  Seed benign;
  benign.rng_seed = 5;
  WriteSeedFile((dir / "benign.seed").string(), benign);
  EXPECT_EQ(RunCli("reproduce " + (dir / "benign.seed").string(), out), 3);
  EXPECT_NE(Slurp(out).find("no crash"), std::string::npos);

  EXPECT_EQ(RunCli("", out), 1);
  EXPECT_EQ(RunCli("run --mode smart --out_dir " + (dir / "x").string(), out), 1);
  EXPECT_EQ(RunCli("reproduce -m sideways " + (dir / "crash.seed").string(), out), 1);
  EXPECT_EQ(RunCli("reproduce " + (dir / "missing.seed").string(), out), 2);

  EXPECT_EQ(RunCli("run --mode nofuzz --iterations 3 --sets 2 --out_dir " +
                       (dir / "camp").string(), out), 0);
  EXPECT_TRUE(fs::exists(dir / "camp" / "summary.csv"));
  EXPECT_EQ(RunCli("compare " + (dir / "camp" / "summary.csv").string() + " " +
                       (dir / "camp" / "summary.csv").string(), out), 0);
  EXPECT_NE(Slurp(out).find("improvement_percent 0.00"), std::string::npos);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace attachfuzz
