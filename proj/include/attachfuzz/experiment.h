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

// Campaign orchestration: sets x iterations, CSV output and comparison.

#ifndef ATTACHFUZZ_EXPERIMENT_H_
#define ATTACHFUZZ_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "attachfuzz/fuzzer.h"
#include "attachfuzz/mutation.h"
#include "attachfuzz/packet.h"

namespace attachfuzz {

struct CampaignConfig {
  FuzzerConfig fuzzer;  // fuzzer.rng_seed is the campaign's base seed
  Direction direction = Direction::kDownlink;
  Layer layer = Layer::kRrc;
  int sets = 20;
  std::string out_dir = "out";
  bool diagnostics = false;

  // Throws std::invalid_argument.
  void Validate() const;
};

// Sets one `key = value` setting. Recognized keys: mode, direction, layer,
// feedback, k, beta, replay_prob, mut_prob, iterations, sets, rng_seed,
// out_dir, diagnostics, adapt. Throws std::invalid_argument otherwise.
void SetConfigValue(CampaignConfig& config, std::string_view key,
                    std::string_view value);

// Parses flat `key = value` text; `#` starts a comment. A coverage campaign
// whose file does not set k gets k = 3.
CampaignConfig ParseConfig(std::string_view text);
CampaignConfig ReadConfigFile(const std::string& path);

struct IterationRecord {
  int set = 0;
  int64_t iteration = 0;
  uint64_t new_units_dut = 0;
  uint64_t total_units_dut = 0;
  uint64_t new_units_peer = 0;
  uint64_t total_units_peer = 0;
  uint64_t mutated_fields = 0;
  int packets = 0;
  std::string crash_id;
  bool hang = false;
  // Diagnostics only.
  uint64_t packets_fuzzed = 0;
  double mean_mutations_per_packet = 0;
};

std::string CsvHeader(bool diagnostics);
std::string FormatRecord(const IterationRecord& r, bool diagnostics);
// Parses a set CSV written by FormatRecord (either variant).
std::vector<IterationRecord> ReadSetCsv(const std::string& path);

struct CrashSeed {
  int64_t iteration;
  Seed seed;
};

struct SetResult {
  std::vector<IterationRecord> records;
  std::vector<CrashSeed> crashes;
  // Probability table snapshots (diagnostics only).
  std::string probabilities_csv;
};

inline uint64_t SetSeed(uint64_t base, int set) { return base + set; }
// Per-iteration protocol randomness, independent of how much randomness the
// fuzzer consumed.
inline uint64_t IterationSeed(uint64_t set_seed, int64_t iteration) {
  return MixSeed(set_seed, static_cast<uint64_t>(iteration));
}

// Runs one set in memory.
SetResult RunSet(const CampaignConfig& config, int set);

struct CampaignSummary {
  std::vector<uint64_t> final_total_units_dut;  // indexed by set
  double median = 0;
};

// Runs every set and writes set_<s>.csv, summary.csv and crash seeds under
// out_dir. Throws std::runtime_error if out_dir is unusable.
CampaignSummary RunCampaign(const CampaignConfig& config);

std::string FormatSummary(const CampaignSummary& summary);
CampaignSummary ReadSummary(const std::string& path);

double Median(std::vector<double> values);

struct SignTest {
  int wins = 0;
  int losses = 0;
  int ties = 0;
  // One-sided P(wins >= observed) under a fair coin over non-tied pairs.
  double p_value = 1.0;
};

SignTest PairedSignTest(const std::vector<double>& a,
                        const std::vector<double>& b);

// Spearman's rho with average ranks for ties. NaN when either side is
// constant.
double SpearmanCorrelation(const std::vector<double>& x,
                           const std::vector<double>& y);

struct Comparison {
  double median_a = 0;
  double median_b = 0;
  double baseline = 0;
  // Gain of a over b with both measured above the baseline, in percent.
  double improvement_percent = 0;
  SignTest sign;
};

// Throws std::invalid_argument when the set counts differ.
Comparison CompareCampaigns(const CampaignSummary& a, const CampaignSummary& b,
                            double baseline = 0);
std::string FormatComparison(const Comparison& c);

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_EXPERIMENT_H_
