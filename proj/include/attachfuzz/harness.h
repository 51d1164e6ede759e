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

#ifndef ATTACHFUZZ_HARNESS_H_
#define ATTACHFUZZ_HARNESS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attachfuzz/coverage.h"
#include "attachfuzz/fuzzer.h"
#include "attachfuzz/machines.h"
#include "attachfuzz/mutation.h"
#include "attachfuzz/packet.h"

namespace attachfuzz {

inline constexpr int kPacketBudget = 32;

// Decides what is delivered in place of each intercepted packet.
class Interceptor {
 public:
  struct Decision {
    Bytes delivered;
    std::optional<Patch> patch;  // recorded in the seed when present
  };

  virtual ~Interceptor() = default;
  // `ordinal` counts intercepted packets from 0 within the iteration.
  virtual Decision Intercept(const Packet& packet, uint32_t ordinal) = 0;
};

// Hands every intercepted packet to a Fuzzer.
class FuzzerInterceptor : public Interceptor {
 public:
  explicit FuzzerInterceptor(Fuzzer& fuzzer) : fuzzer_(fuzzer) {}
  Decision Intercept(const Packet& packet, uint32_t ordinal) override;

 private:
  Fuzzer& fuzzer_;
};

enum class ReproduceMode { kFull, kReplayAll };

std::string_view ToString(ReproduceMode mode);
ReproduceMode ParseReproduceMode(std::string_view s);

// Reapplies the entries of a stored seed.
class SeedInterceptor : public Interceptor {
 public:
  SeedInterceptor(const Seed& seed, ReproduceMode mode);
  Decision Intercept(const Packet& packet, uint32_t ordinal) override;

  // Entries whose ordinal was never reached, plus FULL mutations that
  // referenced fields missing from the regenerated packet.
  size_t mismatches() const;

 private:
  const Seed& seed_;
  ReproduceMode mode_;
  size_t next_ = 0;
  size_t skipped_fields_ = 0;
  RandomSource unused_rng_{0};
};

struct TraceRecord {
  Component sender;
  Packet packet;  // as delivered
  bool intercepted;
};

struct IterationOutcome {
  int packets_exchanged = 0;
  std::optional<std::string> bug_id;
  std::optional<Component> bug_component;
  // A planted hang site fired, or the packet budget ran out.
  bool hang = false;
  bool attached = false;
  EdgeHits ue_hits;
  EdgeHits enb_hits;
  Seed seed;
  std::vector<TraceRecord> trace;

  bool crashed() const { return bug_id.has_value() && !hang; }
  const EdgeHits& HitsOf(Component c) const {
    return c == Component::kUe ? ue_hits : enb_hits;
  }
};

// Both machines plus the interception point. Single-threaded: exactly one
// packet is in flight and the sender waits for its delivery.
class Harness {
 public:
  Harness(Direction direction, Layer layer);

  // Both machines to IDLE with per-iteration randomness from `protocol_seed`.
  void Reset(uint64_t protocol_seed);

  // Resets, triggers an attach and runs it to a terminal condition.
  IterationOutcome RunIteration(uint64_t protocol_seed,
                                Interceptor& interceptor);

  Direction direction() const { return direction_; }
  Layer layer() const { return layer_; }
  const UeMachine& ue() const { return ue_; }
  const EnbMachine& enb() const { return enb_; }

 private:
  Direction direction_;
  Layer layer_;
  UeMachine ue_;
  EnbMachine enb_;
};

// Replays a crash seed. Direction and layer are taken from the seed's
// annotations (default DL / RRC).
IterationOutcome ReproduceCrash(const Seed& seed, ReproduceMode mode,
                                size_t* mismatches = nullptr);

// Adds the annotations that make a seed self-describing.
void AnnotateSeed(Seed& seed, const IterationOutcome& outcome,
                  Direction direction, Layer layer);

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_HARNESS_H_
