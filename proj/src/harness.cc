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

#include "attachfuzz/harness.h"

#include <stdexcept>
#include <string>
#include <utility>

#include "attachfuzz/dissector.h"
#include "attachfuzz/logging.h"

namespace attachfuzz {

std::string_view ToString(ReproduceMode mode) {
  return mode == ReproduceMode::kFull ? "full" : "replay_all";
}

ReproduceMode ParseReproduceMode(std::string_view s) {
  if (s == "full" || s == "FULL") return ReproduceMode::kFull;
  if (s == "replay_all" || s == "REPLAY_ALL" || s == "replay-all") {
    return ReproduceMode::kReplayAll;
  }
  throw std::invalid_argument("unknown reproduce mode: " + std::string(s));
}

Interceptor::Decision FuzzerInterceptor::Intercept(const Packet& packet,
                                                   uint32_t /*ordinal*/) {
  FuzzResult r = fuzzer_.FuzzPacket(packet);
  return {std::move(r.packet.bytes), std::move(r.patch)};
}

SeedInterceptor::SeedInterceptor(const Seed& seed, ReproduceMode mode)
    : seed_(seed), mode_(mode) {}

Interceptor::Decision SeedInterceptor::Intercept(const Packet& packet,
                                                 uint32_t ordinal) {
  while (next_ < seed_.entries.size() &&
         seed_.entries[next_].ordinal < ordinal) {
    ++next_;  // cannot happen for well-formed seeds
  }
  if (next_ >= seed_.entries.size() ||
      seed_.entries[next_].ordinal != ordinal) {
    return {packet.bytes, std::nullopt};
  }
  const SeedEntry& entry = seed_.entries[next_++];
  if (mode_ == ReproduceMode::kReplayAll && !entry.delivered.empty()) {
    return {entry.delivered, entry.patch};
  }
  Patch patch = entry.patch;
  PatchResult r = ApplyPatch(patch, packet, unused_rng_);
  skipped_fields_ += r.skipped;
  return {std::move(r.packet.bytes), std::move(patch)};
}

size_t SeedInterceptor::mismatches() const {
  return skipped_fields_ + (seed_.entries.size() - next_);
}

Harness::Harness(Direction direction, Layer layer)
    : direction_(direction), layer_(layer), ue_(layer), enb_(layer) {}

void Harness::Reset(uint64_t protocol_seed) {
  ue_.Reset(protocol_seed);
  enb_.Reset(protocol_seed);
}

IterationOutcome Harness::RunIteration(uint64_t protocol_seed,
                                       Interceptor& interceptor) {
  Reset(protocol_seed);
  IterationOutcome out;
  out.seed.rng_seed = protocol_seed;

  const Component intercepted_sender = PeerOf(direction_);
  auto machine = [&](Component c) -> ProtocolMachine& {
    return c == Component::kUe ? static_cast<ProtocolMachine&>(ue_)
                               : static_cast<ProtocolMachine&>(enb_);
  };

  Outbound pending = ue_.TriggerAttach();
  Component sender = Component::kUe;
  uint32_t ordinal = 0;
  while (true) {
    if (out.packets_exchanged >= kPacketBudget) {
      out.hang = true;
      break;
    }
    const Component receiver_id =
        sender == Component::kUe ? Component::kEnb : Component::kUe;
    const Direction dir =
        sender == Component::kEnb ? Direction::kDownlink : Direction::kUplink;
    Bytes bytes = std::move(pending.bytes);
    const bool intercept = sender == intercepted_sender;
    if (intercept) {
      Packet packet = Dissect(std::move(bytes), pending.channel, dir, layer_);
      Interceptor::Decision d = interceptor.Intercept(packet, ordinal);
      bytes = std::move(d.delivered);
      if (d.patch) {
        out.seed.entries.push_back({ordinal, std::move(*d.patch), bytes});
      }
      ++ordinal;
    }
    ++out.packets_exchanged;
    out.trace.push_back(
        {sender, Dissect(bytes, pending.channel, dir, layer_), intercept});

    ProtocolMachine& receiver = machine(receiver_id);
    Reaction reaction = receiver.Receive(bytes);
    if (receiver.status() != MachineStatus::kAlive) break;
    if (reaction.emit) {
      pending = std::move(*reaction.emit);
      sender = receiver_id;
      continue;
    }
    if (reaction.finished) break;

    // Receiver stayed silent: the sender's retransmission timer fires.
    Reaction retry = machine(sender).OnTimeout();
    if (!retry.emit) break;
    pending = std::move(*retry.emit);
  }

  for (const ProtocolMachine* m :
       {static_cast<const ProtocolMachine*>(&ue_),
        static_cast<const ProtocolMachine*>(&enb_)}) {
    if (m->bug() != nullptr) {
      out.bug_id = std::string(m->bug()->id);
      out.bug_component = m->role();
      if (m->bug()->effect == BugEffect::kHang) out.hang = true;
    }
  }
  out.attached = ue_.attached() && enb_.attached();
  out.ue_hits = ue_.hits();
  out.enb_hits = enb_.hits();
  if (out.bug_id || out.hang) AnnotateSeed(out.seed, out, direction_, layer_);
  return out;
}

void AnnotateSeed(Seed& seed, const IterationOutcome& outcome,
                  Direction direction, Layer layer) {
  seed.Annotate("bug", outcome.bug_id ? *outcome.bug_id : "watchdog");
  if (outcome.bug_component) {
    seed.Annotate("component", std::string(ToString(*outcome.bug_component)));
  }
  seed.Annotate("direction", std::string(ToString(direction)));
  seed.Annotate("layer", std::string(ToString(layer)));
}

IterationOutcome ReproduceCrash(const Seed& seed, ReproduceMode mode,
                                size_t* mismatches) {
  const std::string* dir = seed.Annotation("direction");
  const std::string* layer = seed.Annotation("layer");
  Harness harness(dir ? ParseDirection(*dir) : Direction::kDownlink,
                  layer ? ParseLayer(*layer) : Layer::kRrc);
  SeedInterceptor interceptor(seed, mode);
  IterationOutcome out = harness.RunIteration(seed.rng_seed, interceptor);
  if (interceptor.mismatches() > 0) {
    Log(LogLevel::kWarning, "seed does not match the regenerated protocol run: " +
                                std::to_string(interceptor.mismatches()) +
                                " entries or fields unused");
  }
  if (mismatches != nullptr) *mismatches = interceptor.mismatches();
  return out;
}

}  // namespace attachfuzz
