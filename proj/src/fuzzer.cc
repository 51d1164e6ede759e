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

#include "attachfuzz/fuzzer.h"

#include <stdexcept>
#include <string>
#include <utility>

namespace attachfuzz {

std::string_view ToString(FuzzerKind kind) {
  switch (kind) {
    case FuzzerKind::kNoFuzz: return "nofuzz";
    case FuzzerKind::kRandom: return "random";
    case FuzzerKind::kCoverage: return "coverage";
  }
  return "?";
}

FuzzerKind ParseFuzzerKind(std::string_view s) {
  if (s == "nofuzz" || s == "NOFUZZ") return FuzzerKind::kNoFuzz;
  if (s == "random" || s == "RANDOM") return FuzzerKind::kRandom;
  if (s == "coverage" || s == "COVERAGE") return FuzzerKind::kCoverage;
  throw std::invalid_argument("unknown fuzzer mode: " + std::string(s));
}

void FuzzerConfig::Validate() const {
  if (!(k > 0)) throw std::invalid_argument("k must be positive");
  if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
  if (replay_prob < 0 || replay_prob > 1 || mut_prob < 0 || mut_prob > 1) {
    throw std::invalid_argument("strategy probabilities must lie in [0, 1]");
  }
  if (replay_prob + mut_prob > 1 + 1e-12) {
    throw std::invalid_argument("replay_prob + mut_prob must not exceed 1");
  }
  if (max_iterations < 1) {
    throw std::invalid_argument("iterations must be positive");
  }
}

Fuzzer::Fuzzer(const FuzzerConfig& config)
    : config_(config),
      table_(config.k, config.beta, config.max_iterations),
      rng_(config.rng_seed) {
  config_.Validate();
}

FuzzResult Fuzzer::FuzzPacket(const Packet& packet) {
  if (config_.kind == FuzzerKind::kNoFuzz) return {packet, std::nullopt};
  ++ledger_.packets_fuzzed;
  table_.Initialize(packet);

  FuzzResult result{packet, std::nullopt};
  const double r1 = rng_.Uniform();
  bool mutate = r1 >= config_.replay_prob &&
                r1 < config_.replay_prob + config_.mut_prob;
  if (r1 < config_.replay_prob) {
    if (auto old = buffer_.Select(packet.channel, packet.layer, rng_)) {
      Patch patch = ReplayPatch{old->channel, old->bytes};
      result.packet = ApplyPatch(patch, packet, rng_).packet;
      result.patch = std::move(patch);
    } else {
      mutate = true;  // nothing to replay yet
    }
  }
  if (mutate) result = Mutate(packet);
  buffer_.Add(packet);
  return result;
}

FuzzResult Fuzzer::Mutate(const Packet& packet) {
  MutationPatch mutations;
  for (const Field& f : packet.fields) {
    const double p = table_.Get({packet.packet_type, f.name, f.index});
    if (rng_.Uniform() < p) {
      mutations.mutations.push_back(MakeMutation(packet.packet_type, f, rng_));
      ledger_.mutated.push_back(
          {mutations.mutations.back().field, f.ValueSpaceSize()});
    }
  }
  if (mutations.mutations.empty()) return {packet, std::nullopt};
  Patch patch = std::move(mutations);
  Packet out = ApplyPatch(patch, packet, rng_).packet;
  return {std::move(out), std::move(patch)};
}

void Fuzzer::EndIteration(uint64_t new_units) {
  ledger_.new_coverage = new_units;
  if (config_.kind == FuzzerKind::kCoverage && config_.adapt) {
    table_.Update(ledger_);
  }
  ++iteration_;
  ledger_.Reset(iteration_);
}

}  // namespace attachfuzz
