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

// attachfuzz: run campaigns, compare them, reproduce crash seeds.

#include <exception>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "attachfuzz/dissector.h"
#include "attachfuzz/experiment.h"
#include "attachfuzz/harness.h"
#include "attachfuzz/logging.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitNotReproduced = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace

int main(int argc, char** argv) {
  using namespace attachfuzz;
  CLI::App app{"Coverage-guided fuzzer for a simulated attach procedure"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  // run
  CLI::App* run = app.add_subcommand("run", "Run a fuzzing campaign");
  std::string config_path;
  run->add_option("-c,--config", config_path, "key = value config file");
  std::map<std::string, std::string> overrides;
  for (const char* key :
       {"mode", "direction", "layer", "feedback", "k", "beta", "replay_prob",
        "mut_prob", "iterations", "sets", "rng_seed", "out_dir",
        "diagnostics", "adapt"}) {
    run->add_option_function<std::string>(
        std::string("--") + key,
        [&overrides, key](const std::string& v) { overrides[key] = v; },
        std::string("Override config key '") + key + "'");
  }

  // compare
  CLI::App* compare =
      app.add_subcommand("compare", "Compare two campaigns' summary.csv files");
  std::string summary_a, summary_b, baseline_path;
  compare->add_option("a", summary_a, "summary.csv of campaign A")->required();
  compare->add_option("b", summary_b, "summary.csv of campaign B")->required();
  compare->add_option("--baseline", baseline_path,
                      "summary.csv of a no-fuzz campaign (zero reference)");

  // reproduce
  CLI::App* reproduce =
      app.add_subcommand("reproduce", "Replay a crash seed");
  std::string seed_path;
  std::string mode_name = "replay_all";
  reproduce->add_option("seed", seed_path, "Seed file")->required();
  reproduce->add_option("-m,--mode", mode_name, "full or replay_all");

  // trace
  CLI::App* trace =
      app.add_subcommand("trace", "Print the benign packet trace");
  uint64_t trace_seed = 1;
  std::string trace_layer = "RRC";
  trace->add_option("--rng_seed", trace_seed, "Protocol seed");
  trace->add_option("--layer", trace_layer, "RRC or MAC");

  app.add_subcommand("dump-schemas", "Print the dissector registry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  SetLogLevel(verbose ? LogLevel::kInfo : LogLevel::kWarning);

  try {
    if (*run) {
      CampaignConfig config;
      bool k_given = overrides.count("k") > 0;
      if (!config_path.empty()) {
        config = ReadConfigFile(config_path);
        k_given = true;  // the file parser already applied its own default
      }
      try {
        for (const auto& [key, value] : overrides) {
          SetConfigValue(config, key, value);
        }
        if (!k_given && config.fuzzer.kind == FuzzerKind::kCoverage) {
          config.fuzzer.k = 3;
        }
        config.Validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const CampaignSummary s = RunCampaign(config);
      std::cout << FormatSummary(s);
      return kExitOk;
    }
    if (*compare) {
      const CampaignSummary a = ReadSummary(summary_a);
      const CampaignSummary b = ReadSummary(summary_b);
      double baseline = 0;
      if (!baseline_path.empty()) baseline = ReadSummary(baseline_path).median;
      Comparison c;
      try {
        c = CompareCampaigns(a, b, baseline);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      std::cout << FormatComparison(c);
      return kExitOk;
    }
    if (*reproduce) {
      ReproduceMode mode;
      try {
        mode = ParseReproduceMode(mode_name);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const Seed seed = ReadSeedFile(seed_path);
      const IterationOutcome out = ReproduceCrash(seed, mode);
      const std::string* expected = seed.Annotation("bug");
      const std::string got =
          out.bug_id ? *out.bug_id : (out.hang ? "watchdog" : "");
      if (got.empty()) {
        std::cout << "no crash\n";
        return kExitNotReproduced;
      }
      std::cout << "outcome " << got << (out.hang ? " (hang)" : " (crash)")
                << "\n";
      if (expected != nullptr && *expected != got) {
        std::cout << "expected " << *expected << "\n";
        return kExitNotReproduced;
      }
      return kExitOk;
    }
    if (*trace) {
      Harness harness(Direction::kDownlink, ParseLayer(trace_layer));
      struct PassThrough : Interceptor {
        Decision Intercept(const Packet& p, uint32_t) override {
          return {p.bytes, std::nullopt};
        }
      } pass;
      const IterationOutcome out = harness.RunIteration(trace_seed, pass);
      for (const TraceRecord& r : out.trace) {
        std::cout << FormatPacketLine(r.packet) << "\n";
      }
      return kExitOk;
    }
    std::cout << DumpSchemas();
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
