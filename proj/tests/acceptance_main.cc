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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Campaign outputs go to ./acceptance_out.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "attachfuzz/coverage.h"
#include "attachfuzz/experiment.h"
#include "attachfuzz/machines.h"
#include "attachfuzz/probability.h"

namespace {

using namespace attachfuzz;
namespace fs = std::filesystem;

// Pinned tolerances and sizes.
constexpr double kOracleTolerance = 1e-12;
constexpr double kWorkedExampleTolerance = 1e-4;
constexpr int kOracleTuples = 10000;
constexpr int kPropertyCases = 100000;
constexpr double kOracleBudgetSeconds = 5;
constexpr double kPropertyBudgetSeconds = 10;
constexpr double kBucketBudgetSeconds = 1;
constexpr double kDeterminismBudgetSeconds = 60;
constexpr double kSignTestAlpha = 0.05;
constexpr double kMinSpearman = 0.2;
constexpr int kSets = 10;
constexpr int64_t kIterations = 2000;
constexpr int64_t kLateWindow = 500;
constexpr uint64_t kBaseSeed = 1;

const std::vector<double> kRandomKs = {0.25, 0.5, 1, 2, 3};
const std::vector<double> kBetas = {2, 4, 6, 8};

const fs::path kOut = "acceptance_out";

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

int failures = 0;

void Report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d %s  %s\n", id, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Independent reimplementation of the update, in long double.

long double OracleUpdate(long double p, long double beta, long double i,
                         long double max_i, unsigned long long c,
                         unsigned long long n, long double v) {
  const long double sign = c > 0 ? 1.0L : -1.0L;
  const long double g = c > 0 ? beta * i / max_i : max_i / (beta * i);
  const long double x = p + sign * g / n / (std::log(v + 1.0L) / std::log(2.0L));
  return std::min(0.90L, std::max(0.005L, x));
}

double LibraryUpdate(double p, double beta, int64_t i, uint64_t c, uint64_t n,
                     double v) {
  ProbabilityTable table(3, beta, kIterations);
  const FieldKey key{"X", "f", 0};
  table.Set(key, p);
  IterationLedger ledger;
  ledger.iteration = i;
  ledger.new_coverage = c;
  ledger.mutated.push_back({key, v});
  for (uint64_t j = 1; j < n; ++j) {
    ledger.mutated.push_back({{"X", "g", static_cast<uint32_t>(j)}, 2});
  }
  table.Update(ledger);
  return table.Get(key);
}

void Criterion1() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unit(0, 1);
  const uint64_t cs[] = {0, 1, 3, 17};
  double worst = 0;
  for (int t = 0; t < kOracleTuples; ++t) {
    const double p = kMinProbability + unit(rng) * (kMaxProbability - kMinProbability);
    const double beta = 1 + unit(rng) * 8;
    const int64_t i = 1 + static_cast<int64_t>(rng() % kIterations);
    const uint64_t c = cs[rng() % 4];
    const uint64_t n = 1 + rng() % 64;
    const double v = std::exp2(static_cast<double>(1 + rng() % 32));
    const double got = LibraryUpdate(p, beta, i, c, n, v);
    const double want =
        static_cast<double>(OracleUpdate(p, beta, i, kIterations, c, n, v));
    worst = std::max(worst, std::abs(got - want));
  }
  const double up = LibraryUpdate(0.30, 4, 1000, 3, 2, 256);
  const double down = LibraryUpdate(0.30, 4, 1000, 0, 2, 256);
  const double secs = Seconds(start);
  const bool pass = worst <= kOracleTolerance &&
                    std::abs(up - 0.42491) <= kWorkedExampleTolerance &&
                    std::abs(down - 0.26877) <= kWorkedExampleTolerance &&
                    secs < kOracleBudgetSeconds;
  Report(1, pass,
         "oracle max |diff| " + Fmt("%.3g", worst) + ", worked examples " +
             Fmt("%.5f", up) + " / " + Fmt("%.5f", down) + ", " +
             Fmt("%.2f", secs) + " s");
}

void Criterion2() {
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unit(0, 1);
  int violations = 0;
  for (int t = 0; t < kPropertyCases; ++t) {
    const double beta = 1 + unit(rng) * 8;
    const int64_t i = 1 + static_cast<int64_t>(rng() % (kIterations - 1));
    const uint64_t c = rng() % 3 == 0 ? 0 : 1 + rng() % 20;
    const uint64_t n = 1 + rng() % 64;
    const double v = std::exp2(static_cast<double>(1 + rng() % 31));
    const double d = ProbabilityIncrement(c, i, beta, kIterations, n, v);
    if ((d > 0) != (c > 0)) ++violations;
    if (!(std::abs(ProbabilityIncrement(c, i, beta, kIterations, n, 2 * v)) <
          std::abs(d))) {
      ++violations;
    }
    if (c > 0 &&
        !(std::abs(ProbabilityIncrement(c, i + 1, beta, kIterations, n, v)) >
          std::abs(d))) {
      ++violations;
    }
  }
  // Long random update sequences never leave the clamp range.
  ProbabilityTable table(3, 8, kIterations);
  std::vector<FieldKey> keys;
  for (uint32_t f = 0; f < 16; ++f) {
    keys.push_back({"X", "f", f});
    table.Set(keys.back(), 0.3);
  }
  int64_t checked = 0;
  for (int t = 0; checked < kPropertyCases; ++t) {
    IterationLedger ledger;
    ledger.iteration = 1 + t % kIterations;
    ledger.new_coverage = rng() % 3 == 0 ? rng() % 30 : 0;
    for (int m = rng() % 10; m > 0; --m) {
      ledger.mutated.push_back(
          {keys[rng() % keys.size()], std::exp2(static_cast<double>(1 + rng() % 20))});
    }
    table.Update(ledger);
    for (const auto& [key, p] : table.entries()) {
      if (p < kMinProbability || p > kMaxProbability) ++violations;
      ++checked;
    }
  }
  const double secs = Seconds(start);
  Report(2, violations == 0 && secs < kPropertyBudgetSeconds,
         std::to_string(kPropertyCases) + " increment cases, " +
             std::to_string(checked) + " clamp checks, " +
             std::to_string(violations) + " violations, " + Fmt("%.2f", secs) +
             " s");
}

void Criterion3() {
  const auto start = Clock::now();
  const std::vector<std::pair<uint64_t, uint64_t>> intervals = {
      {1, 1}, {2, 2}, {3, 3}, {4, 7}, {8, 15}, {16, 31}, {32, 127},
      {128, UINT64_MAX}};
  int mismatches = 0;
  for (uint64_t h = 1; h <= 10000; ++h) {
    int want = -1;
    for (size_t b = 0; b < intervals.size(); ++b) {
      if (h >= intervals[b].first && h <= intervals[b].second) want = b;
    }
    if (Bucketize(h) != want) ++mismatches;
  }
  const double secs = Seconds(start);
  Report(3, mismatches == 0 && secs < kBucketBudgetSeconds,
         std::to_string(mismatches) + " mismatches over 1..10000, " +
             Fmt("%.3f", secs) + " s");
}

// ---------------------------------------------------------------------------
// Campaign helpers.

CampaignConfig Campaign(const std::string& name, FuzzerKind kind,
                        Direction dir) {
  CampaignConfig c;
  c.fuzzer.kind = kind;
  c.fuzzer.max_iterations = kIterations;
  c.fuzzer.rng_seed = kBaseSeed;
  c.direction = dir;
  c.sets = kSets;
  c.out_dir = (kOut / name).string();
  return c;
}

struct Run {
  CampaignSummary summary;
  std::vector<std::vector<IterationRecord>> sets;
};

Run Execute(const CampaignConfig& c) {
  Run r;
  fs::remove_all(c.out_dir);
  r.summary = RunCampaign(c);
  for (int s = 0; s < c.sets; ++s) {
    r.sets.push_back(ReadSetCsv(
        (fs::path(c.out_dir) / ("set_" + std::to_string(s) + ".csv")).string()));
  }
  return r;
}

std::vector<double> Finals(const Run& r) {
  return {r.summary.final_total_units_dut.begin(),
          r.summary.final_total_units_dut.end()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Criterion4() {
  const auto start = Clock::now();
  std::vector<CampaignConfig> configs;
  {
    CampaignConfig c = Campaign("det_cov", FuzzerKind::kCoverage, Direction::kDownlink);
    c.fuzzer.k = 3;
    c.diagnostics = true;
    configs.push_back(c);
    c = Campaign("det_black_ul_mac", FuzzerKind::kCoverage, Direction::kUplink);
    c.fuzzer.k = 3;
    c.fuzzer.feedback = FeedbackMode::kBlack;
    c.layer = Layer::kMac;
    configs.push_back(c);
    c = Campaign("det_replay", FuzzerKind::kRandom, Direction::kDownlink);
    c.fuzzer.k = 2;
    c.fuzzer.replay_prob = 0.3;
    c.fuzzer.mut_prob = 0.6;
    configs.push_back(c);
  }
  size_t files = 0, differing = 0, seeds = 0;
  for (CampaignConfig c : configs) {
    c.sets = 2;
    c.fuzzer.max_iterations = 200;
    const std::string base = c.out_dir;
    c.out_dir = base + "_a";
    Execute(c);
    c.out_dir = base + "_b";
    Execute(c);
    for (const auto& e : fs::recursive_directory_iterator(base + "_a")) {
      if (!e.is_regular_file()) continue;
      const fs::path other = fs::path(base + "_b") / fs::relative(e.path(), base + "_a");
      ++files;
      if (e.path().extension() == ".seed") ++seeds;
      if (!fs::exists(other) || Slurp(e.path()) != Slurp(other)) ++differing;
    }
    // Files only the second run produced also count as differences.
    for (const auto& e : fs::recursive_directory_iterator(base + "_b")) {
      const fs::path other = fs::path(base + "_a") / fs::relative(e.path(), base + "_b");
      if (e.is_regular_file() && !fs::exists(other)) ++differing;
    }
  }
  const double secs = Seconds(start);
  Report(4, differing == 0 && files > 0 && secs < kDeterminismBudgetSeconds,
         std::to_string(files) + " files (" + std::to_string(seeds) +
             " seeds) compared across 3 configs, " + std::to_string(differing) +
             " differ, " + Fmt("%.2f", secs) + " s");
}

void Criterion5() {
  int moving = 0;
  std::string detail;
  for (Direction dir : {Direction::kDownlink, Direction::kUplink}) {
    for (Layer layer : {Layer::kRrc, Layer::kMac}) {
      CampaignConfig c = Campaign(std::string("nofuzz_") +
                                      std::string(ToString(dir)) + "_" +
                                      std::string(ToString(layer)),
                                  FuzzerKind::kNoFuzz, dir);
      c.layer = layer;
      const Run r = Execute(c);
      for (const auto& set : r.sets) {
        for (const IterationRecord& rec : set) {
          if (rec.total_units_dut != set.front().total_units_dut) ++moving;
        }
      }
      detail += std::string(ToString(dir)) + "/" + std::string(ToString(layer)) +
                " " + std::to_string(r.sets.front().front().total_units_dut) + " ";
    }
  }
  Report(5, moving == 0,
         "baseline units " + detail + "; " + std::to_string(moving) +
             " rows change after iteration 1");
}

// ---------------------------------------------------------------------------

struct Sweep {
  std::map<double, Run> random_dl;
  std::map<double, Run> random_ul;
  std::map<double, Run> grey;
  std::map<double, Run> black;
};

std::string KeyName(double v) {
  std::string s = Fmt("%g", v);
  std::replace(s.begin(), s.end(), '.', '_');
  return s;
}

Sweep RunSweep() {
  Sweep sw;
  for (double k : kRandomKs) {
    for (Direction dir : {Direction::kDownlink, Direction::kUplink}) {
      CampaignConfig c = Campaign("random_" + std::string(ToString(dir)) + "_k" +
                                      KeyName(k),
                                  FuzzerKind::kRandom, dir);
      c.fuzzer.k = k;
      (dir == Direction::kDownlink ? sw.random_dl : sw.random_ul)[k] = Execute(c);
    }
  }
  for (double beta : kBetas) {
    for (FeedbackMode fb : {FeedbackMode::kGrey, FeedbackMode::kBlack}) {
      CampaignConfig c = Campaign("coverage_" + std::string(ToString(fb)) +
                                      "_b" + KeyName(beta),
                                  FuzzerKind::kCoverage, Direction::kDownlink);
      c.fuzzer.k = 3;
      c.fuzzer.beta = beta;
      c.fuzzer.feedback = fb;
      c.diagnostics = true;
      (fb == FeedbackMode::kGrey ? sw.grey : sw.black)[beta] = Execute(c);
    }
  }
  return sw;
}

double BestKey(const std::map<double, Run>& runs) {
  double best = runs.begin()->first;
  for (const auto& [key, run] : runs) {
    if (run.summary.median > runs.at(best).summary.median) best = key;
  }
  return best;
}

void Criterion6(const Sweep& sw) {
  const double k = BestKey(sw.random_dl);
  const Run& random = sw.random_dl.at(k);
  bool pass = true;
  std::string detail = "RANDOM best k=" + Fmt("%g", k) + " median " +
                       Fmt("%.1f", random.summary.median);
  for (const auto* runs : {&sw.grey, &sw.black}) {
    const double beta = BestKey(*runs);
    const Run& cov = runs->at(beta);
    const SignTest t = PairedSignTest(Finals(cov), Finals(random));
    const bool ok = cov.summary.median > random.summary.median &&
                    t.p_value < kSignTestAlpha;
    pass &= ok;
    detail += std::string("; ") + (runs == &sw.grey ? "grey" : "black") +
              " best beta=" + Fmt("%g", beta) + " median " +
              Fmt("%.1f", cov.summary.median) + " wins " +
              std::to_string(t.wins) + "/" + std::to_string(kSets) + " p=" +
              Fmt("%.4f", t.p_value);
  }
  Report(6, pass, detail);
}

double MedianPacketsPerIteration(const Run& r) {
  std::vector<double> means;
  for (const auto& set : r.sets) {
    double sum = 0;
    for (const IterationRecord& rec : set) sum += rec.packets;
    means.push_back(sum / set.size());
  }
  return Median(means);
}

void Criterion7(const Sweep& sw) {
  bool pass = true;
  std::string dl = "DL", ul = "UL";
  double prev_dl = INFINITY, prev_ul = INFINITY;
  for (double k : kRandomKs) {
    const double d = MedianPacketsPerIteration(sw.random_dl.at(k));
    const double u = MedianPacketsPerIteration(sw.random_ul.at(k));
    pass &= d <= prev_dl && u <= prev_ul && u <= d;
    prev_dl = d;
    prev_ul = u;
    dl += " " + Fmt("%.2f", d);
    ul += " " + Fmt("%.2f", u);
  }
  Report(7, pass, "median packets/iteration over k {0.25,0.5,1,2,3}: " + dl +
                      "; " + ul);
}

double LateMutationsPerPacket(const Run& r) {
  double mutated = 0, packets = 0;
  for (const auto& set : r.sets) {
    for (const IterationRecord& rec : set) {
      if (rec.iteration <= kIterations - kLateWindow) continue;
      mutated += rec.mutated_fields;
      packets += rec.packets_fuzzed;
    }
  }
  return packets == 0 ? 0 : mutated / packets;
}

void Criterion8(const Sweep& sw) {
  const double hi = LateMutationsPerPacket(sw.grey.at(8));
  const double lo = LateMutationsPerPacket(sw.grey.at(2));
  Report(8, hi > lo,
         "mutations/packet over final 500 iterations: beta=8 " +
             Fmt("%.3f", hi) + " vs beta=2 " + Fmt("%.3f", lo));
}

int RunCli(const std::string& args) {
  const std::string cmd =
      std::string(ATTACHFUZZ_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void Criterion9() {
  // Every crash seed any acceptance campaign saved, grouped by bug.
  std::map<std::string, std::vector<fs::path>> by_bug;
  for (const auto& e : fs::recursive_directory_iterator(kOut)) {
    if (!e.is_regular_file() || e.path().extension() != ".seed") continue;
    const Seed seed = ReadSeedFile(e.path().string());
    const std::string* bug = seed.Annotation("bug");
    if (bug != nullptr && FindBugSite(*bug) != nullptr) {
      by_bug[*bug].push_back(e.path());
    }
  }
  constexpr size_t kSeedsPerBug = 3;
  constexpr std::string_view kSinglePacketBug = "ue.pucch_null_resource";
  bool pass = by_bug.count(std::string(kSinglePacketBug)) > 0;
  int tried = 0, failed = 0;
  std::string names;
  for (auto& [bug, paths] : by_bug) {
    std::sort(paths.begin(), paths.end());
    names += " " + bug;
    for (size_t i = 0; i < paths.size() && i < kSeedsPerBug; ++i) {
      ++tried;
      if (RunCli("reproduce -m replay_all " + paths[i].string()) != 0) ++failed;
      if (bug == kSinglePacketBug) {
        ++tried;
        if (RunCli("reproduce -m full " + paths[i].string()) != 0) ++failed;
      }
    }
  }
  pass &= failed == 0;
  Report(9, pass,
         std::to_string(by_bug.size()) + "/" + std::to_string(BugSites().size()) +
             " bug sites triggered (" + names.substr(names.empty() ? 0 : 1) +
             "), " + std::to_string(tried) + " reproductions, " +
             std::to_string(failed) + " failed");
}

std::string Golden(const std::string& name) {
  return Slurp(fs::path(ATTACHFUZZ_GOLDEN_DIR) / name);
}

void Criterion10() {
  Seed seed;
  seed.rng_seed = 0x1234abcd;
  seed.Annotate("bug", "ue.pucch_null_resource");
  seed.Annotate("direction", "DL");
  seed.Annotate("layer", "RRC");
  MutationPatch m;
  m.mutations.push_back({{"ConnSetup", "pucch_resource", 0},
                         Mutator{MutatorKind::kSet, 0}});
  m.mutations.push_back({{"ConnSetup", "max_harq_tx", 0},
                         Mutator{MutatorKind::kSet, 7}});
  seed.entries.push_back({0, m, FromHex("2c0100000000000000000000")});
  seed.entries.push_back({2, ReplayPatch{Channel::kDcch, FromHex("4a01ff")}, {}});
  int mismatches = 0;
  const std::string golden_seed = Golden("example.seed");
  mismatches += SerializeSeed(seed) != golden_seed;
  mismatches += SerializeSeed(ParseSeed(golden_seed)) != golden_seed;
  mismatches += CsvHeader(false) + "\n" != Golden("csv_header.txt");
  mismatches += CsvHeader(true) + "\n" != Golden("csv_header_diagnostics.txt");
  // A CSV written by a campaign starts with the pinned header.
  const std::string csv = Slurp(kOut / "random_DL_k0_5" / "set_0.csv");
  mismatches += csv.compare(0, Golden("csv_header.txt").size(),
                            Golden("csv_header.txt")) != 0;
  Report(10, mismatches == 0,
         "seed grammar and CSV headers vs golden files, " +
             std::to_string(mismatches) + " mismatches");
}

void Criterion11(const Sweep& sw) {
  const Run& r = sw.random_dl.at(0.5);
  std::vector<double> dut, peer;
  for (const auto& set : r.sets) {
    for (const IterationRecord& rec : set) {
      dut.push_back(rec.new_units_dut);
      peer.push_back(rec.new_units_peer);
    }
  }
  const double rho = SpearmanCorrelation(dut, peer);
  Report(11, rho > kMinSpearman,
         "Spearman(new DUT units, new peer units), RANDOM k=0.5 DL, " +
             std::to_string(dut.size()) + " pooled iterations: " +
             Fmt("%.3f", rho));
}

}  // namespace

int main() {
  const auto start = Clock::now();
  fs::remove_all(kOut);
  fs::create_directories(kOut);
  Criterion1();
  Criterion2();
  Criterion3();
  Criterion4();
  Criterion5();
  const Sweep sweep = RunSweep();
  Criterion6(sweep);
  Criterion7(sweep);
  Criterion8(sweep);
  Criterion9();
  Criterion10();
  Criterion11(sweep);
  std::printf("%d of 11 criteria failed, %.1f s total\n", failures,
              Seconds(start));
  return failures == 0 ? 0 : 1;
}
