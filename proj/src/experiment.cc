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

#include "attachfuzz/experiment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "attachfuzz/coverage.h"
#include "attachfuzz/harness.h"
#include "attachfuzz/logging.h"

namespace attachfuzz {
namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("bad value for " + std::string(key) + ": '" +
                                std::string(value) + "'");
  }
  return out;
}

double ParseDouble(std::string_view key, std::string_view value) {
  // from_chars for double is not available in every libstdc++ we target.
  std::string s(value);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(d)) {
    throw std::invalid_argument("bad value for " + std::string(key) + ": '" +
                                s + "'");
  }
  return d;
}

bool ParseBool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw std::invalid_argument("bad value for " + std::string(key) + ": '" +
                              std::string(value) + "'");
}

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> cols;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    cols.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cols;
}

std::string FormatDouble(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

constexpr int64_t kProbabilitySnapshotEvery = 100;

}  // namespace

void CampaignConfig::Validate() const {
  fuzzer.Validate();
  if (sets < 1) throw std::invalid_argument("sets must be >= 1");
  if (out_dir.empty()) throw std::invalid_argument("out_dir must be set");
}

void SetConfigValue(CampaignConfig& c, std::string_view key,
                    std::string_view value) {
  if (key == "mode") {
    c.fuzzer.kind = ParseFuzzerKind(value);
  } else if (key == "direction") {
    c.direction = ParseDirection(value);
  } else if (key == "layer") {
    c.layer = ParseLayer(value);
  } else if (key == "feedback") {
    c.fuzzer.feedback = ParseFeedbackMode(value);
  } else if (key == "k") {
    c.fuzzer.k = ParseDouble(key, value);
  } else if (key == "beta") {
    c.fuzzer.beta = ParseDouble(key, value);
  } else if (key == "replay_prob") {
    c.fuzzer.replay_prob = ParseDouble(key, value);
  } else if (key == "mut_prob") {
    c.fuzzer.mut_prob = ParseDouble(key, value);
  } else if (key == "iterations") {
    c.fuzzer.max_iterations = ParseNumber<int64_t>(key, value);
  } else if (key == "sets") {
    c.sets = ParseNumber<int>(key, value);
  } else if (key == "rng_seed") {
    c.fuzzer.rng_seed = ParseNumber<uint64_t>(key, value);
  } else if (key == "out_dir") {
    c.out_dir = std::string(value);
  } else if (key == "diagnostics") {
    c.diagnostics = ParseBool(key, value);
  } else if (key == "adapt") {
    c.fuzzer.adapt = ParseBool(key, value);
  } else {
    throw std::invalid_argument("unknown config key: " + std::string(key));
  }
}

CampaignConfig ParseConfig(std::string_view text) {
  CampaignConfig config;
  bool k_set = false;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    line = Trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    SetConfigValue(config, key, Trim(line.substr(eq + 1)));
    k_set |= key == "k";
  }
  if (!k_set && config.fuzzer.kind == FuzzerKind::kCoverage) config.fuzzer.k = 3;
  return config;
}

CampaignConfig ReadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

std::string CsvHeader(bool diagnostics) {
  std::string h =
      "set,iteration,new_units_dut,total_units_dut,new_units_peer,"
      "total_units_peer,mutated_fields,packets,crash_id,hang";
  if (diagnostics) h += ",packets_fuzzed,mean_mutations_per_packet";
  return h;
}

std::string FormatRecord(const IterationRecord& r, bool diagnostics) {
  std::string s = std::to_string(r.set) + "," + std::to_string(r.iteration) +
                  "," + std::to_string(r.new_units_dut) + "," +
                  std::to_string(r.total_units_dut) + "," +
                  std::to_string(r.new_units_peer) + "," +
                  std::to_string(r.total_units_peer) + "," +
                  std::to_string(r.mutated_fields) + "," +
                  std::to_string(r.packets) + "," + r.crash_id + "," +
                  (r.hang ? "1" : "0");
  if (diagnostics) {
    s += "," + std::to_string(r.packets_fuzzed) + "," +
         FormatDouble(r.mean_mutations_per_packet);
  }
  return s;
}

std::vector<IterationRecord> ReadSetCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty CSV");
  const bool diagnostics = line == CsvHeader(true);
  if (!diagnostics && line != CsvHeader(false)) {
    throw std::runtime_error(path + ": unexpected CSV header");
  }
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = SplitCsv(line);
    if (c.size() != (diagnostics ? 12u : 10u)) {
      throw std::runtime_error(path + ": bad row '" + line + "'");
    }
    IterationRecord r;
    r.set = ParseNumber<int>("set", c[0]);
    r.iteration = ParseNumber<int64_t>("iteration", c[1]);
    r.new_units_dut = ParseNumber<uint64_t>("new_units_dut", c[2]);
    r.total_units_dut = ParseNumber<uint64_t>("total_units_dut", c[3]);
    r.new_units_peer = ParseNumber<uint64_t>("new_units_peer", c[4]);
    r.total_units_peer = ParseNumber<uint64_t>("total_units_peer", c[5]);
    r.mutated_fields = ParseNumber<uint64_t>("mutated_fields", c[6]);
    r.packets = ParseNumber<int>("packets", c[7]);
    r.crash_id = std::string(c[8]);
    r.hang = c[9] == "1";
    if (diagnostics) {
      r.packets_fuzzed = ParseNumber<uint64_t>("packets_fuzzed", c[10]);
      r.mean_mutations_per_packet = ParseDouble("mean", c[11]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

SetResult RunSet(const CampaignConfig& config, int set) {
  FuzzerConfig fc = config.fuzzer;
  const uint64_t set_seed = SetSeed(config.fuzzer.rng_seed, set);
  fc.rng_seed = set_seed;
  Fuzzer fuzzer(fc);
  Harness harness(config.direction, config.layer);
  CoverageMap ue_map;
  CoverageMap enb_map;
  const Component dut = DutOf(config.direction);
  const Component feedback_source =
      FeedbackSource(fc.feedback, config.direction);
  auto map_of = [&](Component c) -> CoverageMap& {
    return c == Component::kUe ? ue_map : enb_map;
  };
  std::ostringstream probabilities;
  if (config.diagnostics) probabilities << "iteration,packet_type,field,index,p\n";

  SetResult result;
  result.records.reserve(fc.max_iterations);
  while (!fuzzer.NeedsFinish()) {
    const int64_t it = fuzzer.iteration();
    FuzzerInterceptor interceptor(fuzzer);
    IterationOutcome out =
        harness.RunIteration(IterationSeed(set_seed, it), interceptor);
    const uint64_t new_ue = ue_map.Merge(out.ue_hits);
    const uint64_t new_enb = enb_map.Merge(out.enb_hits);
    auto new_of = [&](Component c) {
      return c == Component::kUe ? new_ue : new_enb;
    };

    IterationRecord r;
    r.set = set;
    r.iteration = it;
    r.new_units_dut = new_of(dut);
    r.total_units_dut = map_of(dut).TotalUnits();
    const Component peer = dut == Component::kUe ? Component::kEnb
                                                 : Component::kUe;
    r.new_units_peer = new_of(peer);
    r.total_units_peer = map_of(peer).TotalUnits();
    r.mutated_fields = fuzzer.ledger().MutatedCount();
    r.packets = out.packets_exchanged;
    r.crash_id = out.bug_id.value_or("");
    r.hang = out.hang;
    r.packets_fuzzed = fuzzer.ledger().packets_fuzzed;
    r.mean_mutations_per_packet =
        r.packets_fuzzed == 0
            ? 0.0
            : static_cast<double>(r.mutated_fields) / r.packets_fuzzed;
    result.records.push_back(std::move(r));
    if (out.bug_id || out.hang) result.crashes.push_back({it, std::move(out.seed)});

    fuzzer.EndIteration(new_of(feedback_source));
    if (config.diagnostics && (it % kProbabilitySnapshotEvery == 0 ||
                               it == fc.max_iterations)) {
      fuzzer.table().WriteCsv(probabilities, it);
    }
  }
  result.probabilities_csv = probabilities.str();
  return result;
}

CampaignSummary RunCampaign(const CampaignConfig& config) {
  config.Validate();
  namespace fs = std::filesystem;
  const fs::path root(config.out_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) {
    throw std::runtime_error("cannot create out_dir " + config.out_dir);
  }

  CampaignSummary summary;
  for (int s = 0; s < config.sets; ++s) {
    SetResult r = RunSet(config, s);
    std::string csv = CsvHeader(config.diagnostics) + "\n";
    for (const IterationRecord& rec : r.records) {
      csv += FormatRecord(rec, config.diagnostics) + "\n";
    }
    WriteFile(root / ("set_" + std::to_string(s) + ".csv"), csv);
    if (config.diagnostics) {
      WriteFile(root / ("probabilities_set_" + std::to_string(s) + ".csv"),
                r.probabilities_csv);
    }
    if (!r.crashes.empty()) {
      const fs::path dir = root / "crashes" / ("set_" + std::to_string(s));
      fs::create_directories(dir);
      for (const CrashSeed& c : r.crashes) {
        WriteSeedFile((dir / (std::to_string(c.iteration) + ".seed")).string(),
                      c.seed);
      }
    }
    summary.final_total_units_dut.push_back(
        r.records.empty() ? 0 : r.records.back().total_units_dut);
    Log(LogLevel::kInfo, "set " + std::to_string(s) + " done: " +
                             std::to_string(summary.final_total_units_dut.back()) +
                             " units");
  }
  std::vector<double> finals(summary.final_total_units_dut.begin(),
                             summary.final_total_units_dut.end());
  summary.median = Median(finals);
  WriteFile(root / "summary.csv", FormatSummary(summary));
  return summary;
}

std::string FormatSummary(const CampaignSummary& summary) {
  std::string s = "set,final_total_units_dut\n";
  for (size_t i = 0; i < summary.final_total_units_dut.size(); ++i) {
    s += std::to_string(i) + "," +
         std::to_string(summary.final_total_units_dut[i]) + "\n";
  }
  s += "median," + FormatDouble(summary.median, "%.1f") + "\n";
  return s;
}

CampaignSummary ReadSummary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "set,final_total_units_dut") {
    throw std::runtime_error(path + ": not a summary file");
  }
  CampaignSummary s;
  bool have_median = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = SplitCsv(line);
    if (c.size() != 2) throw std::runtime_error(path + ": bad row '" + line + "'");
    if (c[0] == "median") {
      s.median = ParseDouble("median", c[1]);
      have_median = true;
    } else {
      if (ParseNumber<size_t>("set", c[0]) != s.final_total_units_dut.size()) {
        throw std::runtime_error(path + ": sets out of order");
      }
      s.final_total_units_dut.push_back(ParseNumber<uint64_t>("units", c[1]));
    }
  }
  if (!have_median) throw std::runtime_error(path + ": missing median row");
  return s;
}

double Median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

SignTest PairedSignTest(const std::vector<double>& a,
                        const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("sign test needs paired samples");
  }
  SignTest t;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) {
      ++t.wins;
    } else if (a[i] < b[i]) {
      ++t.losses;
    } else {
      ++t.ties;
    }
  }
  const int n = t.wins + t.losses;
  // P(X >= wins), X ~ Binomial(n, 1/2).
  double p = 0;
  for (int x = t.wins; x <= n; ++x) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(x + 1.0) -
                  std::lgamma(n - x + 1.0) - n * std::log(2.0));
  }
  t.p_value = n == 0 ? 1.0 : std::min(1.0, p);
  return t;
}

namespace {

std::vector<double> Ranks(const std::vector<double>& v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t i, size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (i + j) / 2.0 + 1;
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double SpearmanCorrelation(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("correlation needs paired samples");
  }
  const size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> rx = Ranks(x);
  const std::vector<double> ry = Ranks(y);
  const double mean = (n + 1) / 2.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

Comparison CompareCampaigns(const CampaignSummary& a, const CampaignSummary& b,
                            double baseline) {
  if (a.final_total_units_dut.size() != b.final_total_units_dut.size()) {
    throw std::invalid_argument("campaigns cover different numbers of sets");
  }
  std::vector<double> va(a.final_total_units_dut.begin(),
                         a.final_total_units_dut.end());
  std::vector<double> vb(b.final_total_units_dut.begin(),
                         b.final_total_units_dut.end());
  Comparison c;
  c.median_a = Median(va);
  c.median_b = Median(vb);
  c.baseline = baseline;
  const double gain_b = c.median_b - baseline;
  const double gain_a = c.median_a - baseline;
  if (gain_a == gain_b) {
    c.improvement_percent = 0;
  } else {
    c.improvement_percent =
        gain_b == 0 ? std::numeric_limits<double>::infinity()
                    : (gain_a - gain_b) / std::abs(gain_b) * 100.0;
  }
  c.sign = PairedSignTest(va, vb);
  return c;
}

std::string FormatComparison(const Comparison& c) {
  std::string s;
  s += "median_a " + FormatDouble(c.median_a, "%.1f") + "\n";
  s += "median_b " + FormatDouble(c.median_b, "%.1f") + "\n";
  s += "baseline " + FormatDouble(c.baseline, "%.1f") + "\n";
  s += "improvement_percent " + FormatDouble(c.improvement_percent, "%.2f") +
       "\n";
  s += "sign_test wins=" + std::to_string(c.sign.wins) +
       " losses=" + std::to_string(c.sign.losses) +
       " ties=" + std::to_string(c.sign.ties) +
       " p=" + FormatDouble(c.sign.p_value, "%.6f") + "\n";
  return s;
}

}  // namespace attachfuzz
