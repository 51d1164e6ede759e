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

#include "attachfuzz/mutation.h"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "attachfuzz/dissector.h"
#include "attachfuzz/logging.h"

namespace attachfuzz {

std::string_view ToString(MutatorKind kind) {
  switch (kind) {
    case MutatorKind::kRand: return "RAND";
    case MutatorKind::kMax: return "MAX";
    case MutatorKind::kMin: return "MIN";
    case MutatorKind::kAdd: return "ADD";
    case MutatorKind::kSub: return "SUB";
    case MutatorKind::kSet: return "SET";
  }
  return "?";
}

const std::string* Seed::Annotation(std::string_view key) const {
  for (const auto& [k, v] : annotations) {
    if (k == key) return &v;
  }
  return nullptr;
}

void Seed::Annotate(std::string key, std::string value) {
  for (auto& [k, v] : annotations) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  annotations.emplace_back(std::move(key), std::move(value));
}

uint64_t ApplyMutator(const Mutator& mutator, uint64_t current,
                      uint64_t max_value, RandomSource& rng) {
  if (max_value == 0) throw DomainError("field capacity below 2");
  if (current > max_value) {
    throw DomainError("current value " + std::to_string(current) +
                      " exceeds field capacity");
  }
  switch (mutator.kind) {
    case MutatorKind::kRand:
      return max_value == UINT64_MAX ? rng.Next() : rng.Below(max_value + 1);
    case MutatorKind::kMax:
      return max_value;
    case MutatorKind::kMin:
      return 0;
    case MutatorKind::kAdd:
      return current == max_value ? 0 : current + 1;
    case MutatorKind::kSub:
      return current == 0 ? max_value : current - 1;
    case MutatorKind::kSet:
      if (mutator.set_value > max_value) {
        throw DomainError("SET " + std::to_string(mutator.set_value) +
                          " exceeds field capacity");
      }
      return mutator.set_value;
  }
  throw DomainError("unknown mutator");
}

Mutation MakeMutation(std::string_view packet_type, const Field& field,
                      RandomSource& rng) {
  const auto kind = static_cast<MutatorKind>(rng.Below(5));
  return Mutation{FieldKey{std::string(packet_type), field.name, field.index},
                  Mutator{kind, 0}};
}

PatchResult ApplyPatch(Patch& patch, const Packet& packet, RandomSource& rng) {
  if (auto* replay = std::get_if<ReplayPatch>(&patch)) {
    return {Dissect(replay->bytes, replay->channel, packet.direction,
                    packet.layer),
            0};
  }
  auto& mutations = std::get<MutationPatch>(patch).mutations;
  Bytes bytes = packet.bytes;
  size_t skipped = 0;
  for (Mutation& m : mutations) {
    const Field* field = m.field.packet_type == packet.packet_type
                             ? packet.FindField(m.field.name, m.field.index)
                             : nullptr;
    if (field == nullptr) {
      Log(LogLevel::kWarning, "skipping mutation of " + m.field.packet_type +
                                  "." + m.field.name + "#" +
                                  std::to_string(m.field.index) + " on " +
                                  packet.packet_type);
      ++skipped;
      continue;
    }
    const uint64_t current = ExtractField(bytes, *field).value;
    const uint64_t next =
        ApplyMutator(m.mutator, current, field->MaxValue(), rng);
    ApplyFieldInPlace(bytes, *field, next);
    m.mutator = Mutator{MutatorKind::kSet, next};
  }
  return {Dissect(std::move(bytes), packet.channel, packet.direction,
                  packet.layer),
          skipped};
}

void ReplayBuffer::Add(const Packet& packet) {
  auto& entries = buckets_[{packet.channel, packet.layer}];
  entries.push_back(packet);
  while (entries.size() > capacity_) entries.pop_front();
}

std::optional<Packet> ReplayBuffer::Select(Channel channel, Layer layer,
                                           RandomSource& rng) const {
  const auto* entries = Entries(channel, layer);
  if (entries == nullptr || entries->empty()) return std::nullopt;
  // Walk from newest to oldest; age a has weight ratio^a.
  double total = 0;
  double w = 1;
  for (size_t a = 0; a < entries->size(); ++a, w *= kRecencyRatio) total += w;
  double target = rng.Uniform() * total;
  w = 1;
  for (size_t a = 0; a < entries->size(); ++a, w *= kRecencyRatio) {
    if (target < w) return (*entries)[entries->size() - 1 - a];
    target -= w;
  }
  return entries->front();
}

size_t ReplayBuffer::Size(Channel channel, Layer layer) const {
  const auto* entries = Entries(channel, layer);
  return entries == nullptr ? 0 : entries->size();
}

const std::deque<Packet>* ReplayBuffer::Entries(Channel channel,
                                                Layer layer) const {
  auto it = buckets_.find({channel, layer});
  return it == buckets_.end() ? nullptr : &it->second;
}

std::string SerializeSeed(const Seed& seed) {
  std::ostringstream out;
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016" PRIx64, seed.rng_seed);
  out << "seed " << hex << "\n";
  for (const auto& [key, value] : seed.annotations) {
    out << "# " << key << " " << value << "\n";
  }
  for (const SeedEntry& e : seed.entries) {
    if (const auto* m = std::get_if<MutationPatch>(&e.patch)) {
      for (const Mutation& mut : m->mutations) {
        if (mut.mutator.kind != MutatorKind::kSet) {
          throw DomainError("seed holds unresolved mutator " +
                            std::string(ToString(mut.mutator.kind)));
        }
        out << "M " << e.ordinal << " " << mut.field.packet_type << " "
            << mut.field.name << "#" << mut.field.index << " SET "
            << mut.mutator.set_value << "\n";
      }
    } else {
      const auto& r = std::get<ReplayPatch>(e.patch);
      out << "R " << e.ordinal << " " << ToString(r.channel) << " "
          << ToHex(r.bytes) << "\n";
    }
    if (!e.delivered.empty()) {
      out << "P " << e.ordinal << " " << ToHex(e.delivered) << "\n";
    }
  }
  return out.str();
}

namespace {

uint64_t ParseUnsigned(const std::string& token, int base, int line,
                       const char* what) {
  if (token.empty() || token[0] == '-' || token[0] == '+') {
    throw SeedParseError(line, std::string("bad ") + what + " '" + token + "'");
  }
  size_t used = 0;
  uint64_t v = 0;
  try {
    v = std::stoull(token, &used, base);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size()) {
    throw SeedParseError(line, std::string("bad ") + what + " '" + token + "'");
  }
  return v;
}

uint32_t ParseOrdinal(const std::string& token, int line) {
  const uint64_t v = ParseUnsigned(token, 10, line, "ordinal");
  if (v > UINT32_MAX) throw SeedParseError(line, "ordinal out of range");
  return static_cast<uint32_t>(v);
}

Bytes ParseHexToken(const std::string& token, int line) {
  try {
    Bytes b = FromHex(token);
    if (b.empty()) throw std::invalid_argument("empty");
    return b;
  } catch (const std::invalid_argument&) {
    throw SeedParseError(line, "bad hex bytes '" + token + "'");
  }
}

}  // namespace

Seed ParseSeed(std::string_view text) {
  Seed seed;
  bool have_header = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ls(raw);
    std::string tag;
    ls >> tag;
    if (!have_header) {
      std::string hex, extra;
      if (tag != "seed" || !(ls >> hex) || (ls >> extra)) {
        throw SeedParseError(line, "expected 'seed <hex>' header");
      }
      seed.rng_seed = ParseUnsigned(hex, 16, line, "rng seed");
      have_header = true;
      continue;
    }
    if (tag == "#") {
      std::string key, value;
      if (!(ls >> key)) throw SeedParseError(line, "annotation without key");
      std::getline(ls >> std::ws, value);
      seed.annotations.emplace_back(key, value);
      continue;
    }
    std::string ordinal_tok;
    if (!(ls >> ordinal_tok)) throw SeedParseError(line, "missing ordinal");
    const uint32_t ordinal = ParseOrdinal(ordinal_tok, line);
    if (!seed.entries.empty() && ordinal < seed.entries.back().ordinal) {
      throw SeedParseError(line, "ordinals must be non-decreasing");
    }
    const bool same_ordinal =
        !seed.entries.empty() && seed.entries.back().ordinal == ordinal;
    std::string extra;
    if (tag == "M") {
      std::string type, ref, set, value;
      if (!(ls >> type >> ref >> set >> value) || (ls >> extra)) {
        throw SeedParseError(line, "expected 'M <ord> <type> <name>#<idx> "
                                   "SET <value>'");
      }
      if (set != "SET") throw SeedParseError(line, "mutator must be SET");
      const size_t hash = ref.rfind('#');
      if (hash == std::string::npos || hash == 0) {
        throw SeedParseError(line, "field reference must be <name>#<index>");
      }
      const uint64_t index =
          ParseUnsigned(ref.substr(hash + 1), 10, line, "field index");
      Mutation m{FieldKey{type, ref.substr(0, hash),
                          static_cast<uint32_t>(index)},
                 Mutator{MutatorKind::kSet,
                         ParseUnsigned(value, 10, line, "value")}};
      if (same_ordinal) {
        auto* patch = std::get_if<MutationPatch>(&seed.entries.back().patch);
        if (patch == nullptr || !seed.entries.back().delivered.empty()) {
          throw SeedParseError(line, "mutation mixed with another patch");
        }
        patch->mutations.push_back(std::move(m));
      } else {
        seed.entries.push_back({ordinal, MutationPatch{{std::move(m)}}, {}});
      }
    } else if (tag == "R") {
      std::string chan, hex;
      if (!(ls >> chan >> hex) || (ls >> extra)) {
        throw SeedParseError(line, "expected 'R <ord> <channel> <hex>'");
      }
      if (same_ordinal) throw SeedParseError(line, "duplicate patch ordinal");
      Channel channel;
      try {
        channel = ParseChannel(chan);
      } catch (const std::invalid_argument& e) {
        throw SeedParseError(line, e.what());
      }
      seed.entries.push_back(
          {ordinal, ReplayPatch{channel, ParseHexToken(hex, line)}, {}});
    } else if (tag == "P") {
      std::string hex;
      if (!(ls >> hex) || (ls >> extra)) {
        throw SeedParseError(line, "expected 'P <ord> <hex>'");
      }
      if (!same_ordinal || !seed.entries.back().delivered.empty()) {
        throw SeedParseError(line, "P line must follow its patch");
      }
      seed.entries.back().delivered = ParseHexToken(hex, line);
    } else {
      throw SeedParseError(line, "unknown record '" + tag + "'");
    }
  }
  if (!have_header) throw SeedParseError(line + 1, "missing seed header");
  return seed;
}

void WriteSeedFile(const std::string& path, const Seed& seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << SerializeSeed(seed);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Seed ReadSeedFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return ParseSeed(text.str());
}

}  // namespace attachfuzz
