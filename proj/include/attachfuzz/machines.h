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

// Simulated UE and eNB for the attach procedure.
//
// Both sides are instrumented interpreters: every handler reports the basic
// blocks it passes through to a Probe, and consecutive blocks form coverage
// edges. The eNB side is strict and aborts on any out-of-range value; the UE
// side tolerates most malformations by defaulting or ignoring them. A few
// bug sites are planted on each side.

#ifndef ATTACHFUZZ_MACHINES_H_
#define ATTACHFUZZ_MACHINES_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attachfuzz/coverage.h"
#include "attachfuzz/packet.h"
#include "attachfuzz/random.h"

namespace attachfuzz {

// 32-bit FNV-1a, used to name basic blocks.
constexpr uint32_t BlockId(std::string_view name) {
  uint32_t h = 2166136261u;
  for (char c : name) {
    h ^= static_cast<uint8_t>(c);
    h *= 16777619u;
  }
  return h == 0 ? 1 : h;
}

// Collects the edge hits of one machine.
class Probe {
 public:
  // Starts a new handler invocation: the next block's edge comes from entry.
  void Enter(uint32_t block) {
    prev_ = 0;
    Hit(block);
  }
  void Hit(uint32_t block) {
    ++hits_[(uint64_t{prev_} << 32) | block];
    prev_ = block;
  }
  // One block per distinct `value` class at `site`.
  void Split(uint32_t site, uint64_t value_class) {
    Hit(static_cast<uint32_t>(site ^ ((value_class + 1) * 0x9E3779B1u)));
  }
  const EdgeHits& hits() const { return hits_; }
  void Clear() {
    hits_.clear();
    prev_ = 0;
  }

 private:
  uint32_t prev_ = 0;
  EdgeHits hits_;
};

enum class BugEffect { kCrash, kHang };

struct BugSite {
  std::string_view id;
  Component component;
  BugEffect effect;
  std::string_view trigger;  // human-readable description
};

// Every planted bug, both components.
std::span<const BugSite> BugSites();
const BugSite* FindBugSite(std::string_view id);

enum class MachineStatus { kAlive, kCrashed, kHung };

struct Outbound {
  Bytes bytes;
  Channel channel;
};

// What a machine does after consuming a packet or a timer expiry.
struct Reaction {
  std::optional<Outbound> emit;
  bool finished = false;  // terminal state reached (attached or aborted)
};

class ProtocolMachine {
 public:
  ProtocolMachine(Component role, Layer layer) : role_(role), layer_(layer) {}
  virtual ~ProtocolMachine() = default;

  // Back to IDLE with fresh per-iteration randomness; clears edge hits.
  virtual void Reset(uint64_t rng_seed) = 0;
  virtual Reaction Receive(const Bytes& bytes) = 0;
  // The peer stayed silent after this machine's last emission.
  virtual Reaction OnTimeout() = 0;

  Component role() const { return role_; }
  MachineStatus status() const { return status_; }
  const BugSite* bug() const { return bug_; }
  bool attached() const { return attached_; }
  const EdgeHits& hits() const { return probe_.hits(); }
  std::string_view StateName() const;

 protected:
  enum class State {
    kIdle,
    kWaitSetup,       // UE: ConnRequest sent
    kWaitSetupDone,   // eNB: ConnSetup sent
    kWaitAuth,        // UE: ConnSetupComplete sent
    kWaitAuthResp,    // eNB: AuthRequest sent
    kWaitSmc,         // UE: AuthResponse sent
    kWaitSmcDone,     // eNB: SecModeCommand sent
    kWaitAccept,      // UE: SecModeComplete sent
    kWaitAttachDone,  // eNB: AttachAccept sent
    kAttached,
    kFailed,
  };

  void ResetCommon();
  // Marks the planted bug `id` as fired and returns a terminal reaction.
  Reaction Trigger(std::string_view id);
  // Strips MAC framing; nullopt when the header is inconsistent.
  std::optional<Bytes> Unframe(const Bytes& bytes, uint32_t block_prefix);
  Reaction Send(Bytes payload, Channel channel);
  Reaction Finish(bool attached);
  Reaction Drop();

  Component role_;
  Layer layer_;
  State state_ = State::kIdle;
  MachineStatus status_ = MachineStatus::kAlive;
  const BugSite* bug_ = nullptr;
  bool attached_ = false;
  Probe probe_;
  std::optional<Outbound> last_sent_;
  int retries_ = 0;
};

class UeMachine : public ProtocolMachine {
 public:
  static constexpr uint32_t kSqn = 0x0010;
  static constexpr uint32_t kNetCapability = 0xE0E0;
  static constexpr uint32_t kImeisv = 0x35123456;

  explicit UeMachine(Layer layer) : ProtocolMachine(Component::kUe, layer) {}

  void Reset(uint64_t rng_seed) override;
  // Emits the initial ConnRequest.
  Outbound TriggerAttach();
  Reaction Receive(const Bytes& bytes) override;
  Reaction OnTimeout() override;

 private:
  Reaction OnConnSetup(const Bytes& m);
  Reaction OnAuthRequest(const Bytes& m);
  Reaction OnSecModeCommand(const Bytes& m);
  Reaction OnAttachAccept(const Bytes& m);

  uint32_t identity_ = 0;
  uint32_t setup_tid_ = 0;
  uint32_t smc_tid_ = 0;
  uint32_t harq_ = 0;
  uint32_t bsr_ = 0;
  uint32_t rlc_mode_ = 0;
  uint32_t drx_ = 0;
  uint32_t pucch_class_ = 0;
  uint32_t config_status_ = 0;
  uint32_t ksi_ = 7;
  uint32_t cipher_ = 0;
  uint32_t integrity_ = 0;
  uint32_t auth_failures_ = 0;
  uint32_t key_class_ = 0;
  uint32_t qci_class_ = 0;
};

class EnbMachine : public ProtocolMachine {
 public:
  explicit EnbMachine(Layer layer) : ProtocolMachine(Component::kEnb, layer) {}

  void Reset(uint64_t rng_seed) override;
  Reaction Receive(const Bytes& bytes) override;
  Reaction OnTimeout() override;

 private:
  Reaction OnConnRequest(const Bytes& m);
  Reaction OnConnSetupComplete(const Bytes& m);
  Reaction OnAuthResponse(const Bytes& m);
  Reaction OnSecModeComplete(const Bytes& m);
  Reaction OnAttachComplete(const Bytes& m);
  Reaction Abort(std::string_view reason);
  Reaction SendAuthRequest();

  RandomSource rng_{0};
  uint32_t identity_ = 0;
  uint32_t setup_tid_ = 0;
  uint32_t smc_tid_ = 0;
  uint32_t harq_sent_ = 0;
  uint32_t drx_sent_ = 0;
  uint32_t ue_net_cap_ = 0;
  uint32_t rand_ = 0;
  uint32_t sqn_ = 0;
  uint32_t auth_attempts_ = 0;
  uint32_t cipher_ = 0;
  uint32_t integrity_ = 0;
  uint32_t ambr_ = 0;
  uint32_t guti_ = 0;
  uint32_t pucch_ = 0;
  uint32_t harq_echo_ = 0;
  uint32_t drx_class_echo_ = 0;
};

// Helpers shared by both sides (and by tests constructing valid packets).
uint32_t AuthResult(uint32_t rand);
uint32_t AuthMac(uint32_t rand);
uint8_t IntegrityTag(std::span<const uint8_t> bytes, size_t begin,
                     size_t end);
uint32_t GutiFor(uint32_t identity);

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_MACHINES_H_
