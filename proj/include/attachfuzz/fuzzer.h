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

#ifndef ATTACHFUZZ_FUZZER_H_
#define ATTACHFUZZ_FUZZER_H_

#include <cstdint>
#include <optional>
#include <string_view>

#include "attachfuzz/coverage.h"
#include "attachfuzz/mutation.h"
#include "attachfuzz/packet.h"
#include "attachfuzz/probability.h"
#include "attachfuzz/random.h"

namespace attachfuzz {

enum class FuzzerKind { kNoFuzz, kRandom, kCoverage };

std::string_view ToString(FuzzerKind kind);
FuzzerKind ParseFuzzerKind(std::string_view s);

struct FuzzerConfig {
  FuzzerKind kind = FuzzerKind::kRandom;
  double k = 0.5;
  double beta = 4.0;
  // Strategy thresholds are cumulative: r < replay_prob replays,
  // r < replay_prob + mut_prob mutates, anything else passes through.
  double replay_prob = 0.0;
  double mut_prob = 1.0;
  FeedbackMode feedback = FeedbackMode::kGrey;
  int64_t max_iterations = 2000;
  uint64_t rng_seed = 1;
  // When false, the coverage fuzzer never moves its probabilities.
  bool adapt = true;

  // Throws std::invalid_argument on inconsistent settings.
  void Validate() const;
};

struct FuzzResult {
  Packet packet;
  std::optional<Patch> patch;  // nullopt when the packet passed unchanged
};

// Per-packet strategy plus the between-iteration adaptation. Owns the
// probability table, replay buffer, ledger and RNG of one fuzzing set.
class Fuzzer {
 public:
  explicit Fuzzer(const FuzzerConfig& config);

  FuzzResult FuzzPacket(const Packet& packet);

  // Closes the current iteration with the new coverage reported by the
  // configured feedback source, then advances the iteration counter.
  void EndIteration(uint64_t new_units);

  bool NeedsFinish() const { return iteration_ > config_.max_iterations; }

  int64_t iteration() const { return iteration_; }
  const FuzzerConfig& config() const { return config_; }
  const IterationLedger& ledger() const { return ledger_; }
  ProbabilityTable& table() { return table_; }
  const ProbabilityTable& table() const { return table_; }
  ReplayBuffer& replay_buffer() { return buffer_; }
  RandomSource& rng() { return rng_; }

 private:
  FuzzResult Mutate(const Packet& packet);

  FuzzerConfig config_;
  ProbabilityTable table_;
  ReplayBuffer buffer_;
  RandomSource rng_;
  IterationLedger ledger_;
  int64_t iteration_ = 1;
};

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_FUZZER_H_
