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

// Mutators, mutations, patches, seeds and the replay buffer.
//
// A Seed is everything needed to re-run one fuzzing iteration: the protocol
// RNG seed and, for every intercepted packet that was manipulated, the Patch
// applied to it. Mutations are stored in resolved form (SET X), so re-applying
// a patch never consumes randomness.

#ifndef ATTACHFUZZ_MUTATION_H_
#define ATTACHFUZZ_MUTATION_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "attachfuzz/packet.h"
#include "attachfuzz/random.h"

namespace attachfuzz {

enum class MutatorKind { kRand, kMax, kMin, kAdd, kSub, kSet };

std::string_view ToString(MutatorKind kind);

struct Mutator {
  MutatorKind kind = MutatorKind::kRand;
  uint64_t set_value = 0;  // meaningful iff kind == kSet

  friend bool operator==(const Mutator&, const Mutator&) = default;
};

// Identifies a field across packets: probabilities and mutations are keyed by
// the packet type the field belongs to.
struct FieldKey {
  std::string packet_type;
  std::string name;
  uint32_t index = 0;

  friend auto operator<=>(const FieldKey&, const FieldKey&) = default;
};

struct Mutation {
  FieldKey field;
  Mutator mutator;

  friend bool operator==(const Mutation&, const Mutation&) = default;
};

struct MutationPatch {
  std::vector<Mutation> mutations;

  friend bool operator==(const MutationPatch&, const MutationPatch&) = default;
};

struct ReplayPatch {
  Channel channel = Channel::kCcch;
  Bytes bytes;

  friend bool operator==(const ReplayPatch&, const ReplayPatch&) = default;
};

using Patch = std::variant<MutationPatch, ReplayPatch>;

struct SeedEntry {
  uint32_t ordinal = 0;  // index among intercepted packets of the iteration
  Patch patch;
  // Bytes actually delivered after the patch, used by replay-all
  // reproduction. Empty when unknown.
  Bytes delivered;

  friend bool operator==(const SeedEntry&, const SeedEntry&) = default;
};

struct Seed {
  uint64_t rng_seed = 0;
  std::vector<SeedEntry> entries;  // ordered by ordinal
  // Free-form `# key value` annotations (bug id, direction, layer, ...).
  std::vector<std::pair<std::string, std::string>> annotations;

  // Returns nullptr if absent.
  const std::string* Annotation(std::string_view key) const;
  void Annotate(std::string key, std::string value);

  friend bool operator==(const Seed&, const Seed&) = default;
};

// RAND: uniform in [0, capacity); MAX: capacity-1; MIN: 0; ADD/SUB: +-1
// modulo capacity; SET: set_value. `max_value` is capacity-1.
// Throws DomainError if current or a SET value exceeds `max_value`.
uint64_t ApplyMutator(const Mutator& mutator, uint64_t current,
                      uint64_t max_value, RandomSource& rng);

// Draws the mutator uniformly from RAND, MAX, MIN, ADD and SUB.
Mutation MakeMutation(std::string_view packet_type, const Field& field,
                      RandomSource& rng);

struct PatchResult {
  Packet packet;
  // Mutations that referenced a field missing from the packet.
  size_t skipped = 0;
};

// Applies `patch` to `packet`. Mutation patches are applied in list order and
// each mutator is rewritten in place to SET with the value it produced.
// Replay patches return the stored bytes. The result is re-dissected.
PatchResult ApplyPatch(Patch& patch, const Packet& packet, RandomSource& rng);

// Recency-weighted store of intercepted packets keyed by (channel, layer).
class ReplayBuffer {
 public:
  static constexpr size_t kDefaultCapacity = 64;
  static constexpr double kRecencyRatio = 0.5;

  explicit ReplayBuffer(size_t capacity = kDefaultCapacity)
      : capacity_(capacity) {}

  void Add(const Packet& packet);

  // Entry j of n (0 = oldest) is chosen with weight ratio^(n-1-j).
  // Returns nullopt when nothing is stored for the key.
  std::optional<Packet> Select(Channel channel, Layer layer,
                               RandomSource& rng) const;

  size_t Size(Channel channel, Layer layer) const;
  const std::deque<Packet>* Entries(Channel channel, Layer layer) const;
  size_t capacity() const { return capacity_; }

 private:
  size_t capacity_;
  std::map<std::pair<Channel, Layer>, std::deque<Packet>> buckets_;
};

class SeedParseError : public std::runtime_error {
 public:
  SeedParseError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Seed file grammar, one record per line:
//   seed <16 hex digits>
//   # <key> <value>
//   M <ordinal> <packet_type> <name>#<index> SET <value>
//   R <ordinal> <channel> <hex-bytes>
//   P <ordinal> <hex-bytes>
// M lines sharing an ordinal form one mutation patch; P carries the bytes
// delivered for that ordinal. Blank lines are ignored.
std::string SerializeSeed(const Seed& seed);
// Throws SeedParseError.
Seed ParseSeed(std::string_view text);

void WriteSeedFile(const std::string& path, const Seed& seed);
// Throws std::runtime_error if unreadable, SeedParseError if malformed.
Seed ReadSeedFile(const std::string& path);

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_MUTATION_H_
