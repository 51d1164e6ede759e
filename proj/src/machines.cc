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

#include "attachfuzz/machines.h"

#include <algorithm>
#include <array>
#include <bit>
#include <stdexcept>

#include "attachfuzz/dissector.h"

namespace attachfuzz {
namespace {

consteval uint32_t operator""_blk(const char* s, size_t n) {
  return BlockId(std::string_view(s, n));
}

constexpr std::array<BugSite, 8> kBugSites = {{
    {"ue.pucch_null_resource", Component::kUe, BugEffect::kCrash,
     "ConnSetup.pucch_resource == 0"},
    {"ue.smc_alg_overflow", Component::kUe, BugEffect::kCrash,
     "SecModeCommand.integrity_alg == 0 && cipher_alg > 3"},
    {"ue.tai_list_overflow", Component::kUe, BugEffect::kCrash,
     "AttachAccept.tai_list_count in [13, 14]"},
    {"ue.auth_zero_lifetime", Component::kUe, BugEffect::kHang,
     "AuthRequest.key_lifetime == 0 with a valid challenge"},
    {"enb.capability_null", Component::kEnb, BugEffect::kCrash,
     "ConnRequest.ue_capability == 0"},
    {"enb.resync_overflow", Component::kEnb, BugEffect::kCrash,
     "AuthResponse.result == 2 && auts == 0xFFFF"},
    {"enb.imeisv_overflow", Component::kEnb, BugEffect::kCrash,
     "SecModeComplete.imeisv == 0xFFFFFFFF"},
    {"enb.res_length_loop", Component::kEnb, BugEffect::kHang,
     "AuthResponse.result == 0 && res_length > 8"},
}};

Field F(std::string_view type, std::string_view name, uint32_t index = 0) {
  const MessageSchema* schema = FindSchema(type);
  if (schema != nullptr) {
    for (Field& f : schema->Fields()) {
      if (f.name == name && f.index == index) return f;
    }
  }
  throw std::logic_error("no field " + std::string(type) + "." +
                         std::string(name));
}

uint32_t Read(const Bytes& m, const Field& f) {
  return static_cast<uint32_t>(ExtractField(m, f).value);
}

namespace cr {
const Field kSpare = F("ConnRequest", "spare");
const Field kIdentity = F("ConnRequest", "ue_identity");
const Field kCause = F("ConnRequest", "establishment_cause");
const Field kAccessClass = F("ConnRequest", "access_class");
const Field kCapability = F("ConnRequest", "ue_capability");
}  // namespace cr

namespace cs {
const Field kTid = F("ConnSetup", "transaction_id");
const Field kSpare = F("ConnSetup", "spare");
const Field kContention = F("ConnSetup", "contention_id");
const Field kHarq = F("ConnSetup", "max_harq_tx");
const Field kBsr = F("ConnSetup", "periodic_bsr_timer");
const Field kRlc = F("ConnSetup", "rlc_mode");
const Field kPoll = F("ConnSetup", "t_poll_retransmit");
const Field kPucch = F("ConnSetup", "pucch_resource");
const Field kDrx = F("ConnSetup", "drx_cycle");
}  // namespace cs

namespace csc {
const Field kTid = F("ConnSetupComplete", "transaction_id");
const Field kSpare0 = F("ConnSetupComplete", "spare", 0);
const Field kPlmn = F("ConnSetupComplete", "selected_plmn");
const Field kStatus = F("ConnSetupComplete", "config_status");
const Field kAttachType = F("ConnSetupComplete", "attach_type");
const Field kKsi = F("ConnSetupComplete", "nas_ksi");
const Field kSpare1 = F("ConnSetupComplete", "spare", 1);
const Field kNetCap = F("ConnSetupComplete", "ue_net_capability");
const Field kHarqEcho = F("ConnSetupComplete", "harq_echo");
const Field kDrxClass = F("ConnSetupComplete", "drx_class");
const Field kPdnType = F("ConnSetupComplete", "pdn_type");
const Field kEsmInfo = F("ConnSetupComplete", "esm_info_flag");
const Field kBsrEcho = F("ConnSetupComplete", "bsr_echo");
const Field kPucchEcho = F("ConnSetupComplete", "pucch_echo");
const Field kSequence = F("ConnSetupComplete", "sequence");
}  // namespace csc

namespace ar {
const Field kKsi = F("AuthRequest", "nas_ksi");
const Field kSpare = F("AuthRequest", "spare");
const Field kRand = F("AuthRequest", "rand_challenge");
const Field kSqn = F("AuthRequest", "autn_sqn");
const Field kAmf = F("AuthRequest", "autn_amf");
const Field kMac = F("AuthRequest", "autn_mac");
const Field kLifetime = F("AuthRequest", "key_lifetime");
}  // namespace ar

namespace ap {
const Field kResult = F("AuthResponse", "result");
const Field kSpare0 = F("AuthResponse", "spare", 0);
const Field kRes = F("AuthResponse", "res");
const Field kAuts = F("AuthResponse", "auts");
const Field kResLength = F("AuthResponse", "res_length");
const Field kKeyInfo = F("AuthResponse", "key_info");
}  // namespace ap

namespace smc {
const Field kTid = F("SecModeCommand", "transaction_id");
const Field kSpare0 = F("SecModeCommand", "spare", 0);
const Field kCipher = F("SecModeCommand", "cipher_alg");
const Field kIntegrity = F("SecModeCommand", "integrity_alg");
const Field kKeyChange = F("SecModeCommand", "key_change");
const Field kSpare1 = F("SecModeCommand", "spare", 1);
const Field kCapability = F("SecModeCommand", "replayed_capability");
const Field kNonce = F("SecModeCommand", "nonce");
const Field kImeisvReq = F("SecModeCommand", "imeisv_request");
const Field kKdfRounds = F("SecModeCommand", "kdf_rounds");
const Field kMac = F("SecModeCommand", "mac_i");
}  // namespace smc

namespace smd {
const Field kTid = F("SecModeComplete", "transaction_id");
const Field kStatus = F("SecModeComplete", "status");
const Field kImeisv = F("SecModeComplete", "imeisv");
const Field kCipher = F("SecModeComplete", "selected_cipher");
const Field kIntegrity = F("SecModeComplete", "selected_integrity");
const Field kKdfClass = F("SecModeComplete", "kdf_class");
const Field kMac = F("SecModeComplete", "mac_i");
}  // namespace smd

namespace aa {
const Field kResult = F("AttachAccept", "eps_result");
const Field kSpare = F("AttachAccept", "spare");
const Field kT3412 = F("AttachAccept", "t3412_timer");
const Field kTaiCount = F("AttachAccept", "tai_list_count");
const Field kTaiType = F("AttachAccept", "tai_list_type");
const Field kGuti = F("AttachAccept", "guti");
const Field kAmbr = F("AttachAccept", "apn_ambr");
const Field kEbi = F("AttachAccept", "eps_bearer_id");
const Field kPti = F("AttachAccept", "pti");
const Field kQci = F("AttachAccept", "qci");
const Field kEsmCause = F("AttachAccept", "esm_cause");
}  // namespace aa

namespace ac {
const Field kEbi = F("AttachComplete", "eps_bearer_id");
const Field kEsmStatus = F("AttachComplete", "esm_status");
const Field kBearerAck = F("AttachComplete", "bearer_ack");
const Field kFlags = F("AttachComplete", "ue_flags");
const Field kAmbrEcho = F("AttachComplete", "ambr_echo");
const Field kGutiHint = F("AttachComplete", "guti_hint");
const Field kTimerEcho = F("AttachComplete", "timer_echo");
const Field kBearerInfo = F("AttachComplete", "bearer_info");
}  // namespace ac

uint8_t LcidFor(Channel channel) { return channel == Channel::kCcch ? 0 : 1; }

constexpr uint32_t kEnbAmf = 0x8000;
constexpr uint32_t kEnbLifetime = 0x40;
constexpr uint32_t kEnbAmbr = 0x0A0A;
constexpr uint32_t kEnbEbi = 5;
constexpr int kMaxRetransmissions = 6;
constexpr uint32_t kMaxAuthAttempts = 3;

}  // namespace

std::span<const BugSite> BugSites() { return kBugSites; }

const BugSite* FindBugSite(std::string_view id) {
  for (const BugSite& b : kBugSites) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

uint32_t AuthResult(uint32_t rand) {
  return static_cast<uint32_t>(MixSeed(rand, 0x5E5));
}

uint32_t AuthMac(uint32_t rand) {
  return static_cast<uint32_t>(MixSeed(rand, 0xAC) & 0xFFFF);
}

uint8_t IntegrityTag(std::span<const uint8_t> bytes, size_t begin,
                     size_t end) {
  uint8_t tag = 0x5A;
  for (size_t i = begin; i < end && i < bytes.size(); ++i) {
    tag = static_cast<uint8_t>((tag << 1 | tag >> 7) ^ bytes[i]);
  }
  return tag;
}

uint32_t GutiFor(uint32_t identity) {
  return static_cast<uint32_t>(MixSeed(identity, 0x6071));
}

std::string_view ProtocolMachine::StateName() const {
  switch (state_) {
    case State::kIdle: return "IDLE";
    case State::kWaitSetup: return "WAIT_SETUP";
    case State::kWaitSetupDone: return "WAIT_SETUP_COMPLETE";
    case State::kWaitAuth: return "WAIT_AUTH";
    case State::kWaitAuthResp: return "WAIT_AUTH_RESPONSE";
    case State::kWaitSmc: return "WAIT_SMC";
    case State::kWaitSmcDone: return "WAIT_SMC_COMPLETE";
    case State::kWaitAccept: return "WAIT_ACCEPT";
    case State::kWaitAttachDone: return "WAIT_ATTACH_COMPLETE";
    case State::kAttached: return "ATTACHED";
    case State::kFailed: return "FAILED";
  }
  return "?";
}

void ProtocolMachine::ResetCommon() {
  state_ = State::kIdle;
  status_ = MachineStatus::kAlive;
  bug_ = nullptr;
  attached_ = false;
  probe_.Clear();
  last_sent_.reset();
  retries_ = 0;
}

Reaction ProtocolMachine::Trigger(std::string_view id) {
  bug_ = FindBugSite(id);
  if (bug_ == nullptr) throw std::logic_error("unknown bug site");
  status_ = bug_->effect == BugEffect::kCrash ? MachineStatus::kCrashed
                                              : MachineStatus::kHung;
  return Reaction{std::nullopt, true};
}

std::optional<Bytes> ProtocolMachine::Unframe(const Bytes& bytes,
                                              uint32_t block_prefix) {
  if (layer_ == Layer::kRrc) return bytes;
  if (bytes.size() <= kMacHeaderSize) {
    probe_.Hit(block_prefix ^ "mac.runt"_blk);
    return std::nullopt;
  }
  const uint8_t lcid = bytes[0] & 0x1F;
  const size_t length = bytes[1];
  probe_.Split(block_prefix ^ "mac.lcid"_blk, lcid);
  if (lcid > 1 || bytes[0] & 0xE0 ||
      length != bytes.size() - kMacHeaderSize) {
    probe_.Hit(block_prefix ^ "mac.bad_header"_blk);
    return std::nullopt;
  }
  return Bytes(bytes.begin() + kMacHeaderSize, bytes.end());
}

Reaction ProtocolMachine::Send(Bytes payload, Channel channel) {
  Outbound out{layer_ == Layer::kMac ? WrapMac(payload, LcidFor(channel))
                                     : std::move(payload),
               channel};
  last_sent_ = out;
  retries_ = 0;
  return Reaction{std::move(out), false};
}

Reaction ProtocolMachine::Finish(bool attached) {
  attached_ = attached;
  state_ = attached ? State::kAttached : State::kFailed;
  return Reaction{std::nullopt, true};
}

Reaction ProtocolMachine::Drop() { return Reaction{}; }

// ---------------------------------------------------------------------------
// UE

void UeMachine::Reset(uint64_t rng_seed) {
  ResetCommon();
  identity_ = static_cast<uint32_t>(MixSeed(rng_seed, 1));
  setup_tid_ = smc_tid_ = 0;
  harq_ = bsr_ = rlc_mode_ = drx_ = pucch_class_ = config_status_ = 0;
  ksi_ = 7;
  cipher_ = integrity_ = 0;
  auth_failures_ = 0;
  key_class_ = qci_class_ = 0;
}

Outbound UeMachine::TriggerAttach() {
  probe_.Enter("ue.trigger_attach"_blk);
  state_ = State::kWaitSetup;
  Reaction r = Send(EncodeMessage("ConnRequest", {{"ue_identity", identity_},
                                                  {"establishment_cause", 3},
                                                  {"access_class", 5},
                                                  {"ue_capability", 0x0A5F}}),
                    Channel::kCcch);
  return *r.emit;
}

Reaction UeMachine::Receive(const Bytes& bytes) {
  probe_.Enter("ue.rx"_blk);
  std::optional<Bytes> payload = Unframe(bytes, "ue"_blk);
  if (!payload || payload->empty()) return Drop();
  const Bytes& m = *payload;
  const uint32_t type = m[0] >> 4;
  probe_.Split("ue.rx.type"_blk, type);

  static constexpr std::array<std::string_view, 16> kDownlinkTypes = {
      "", "", "ConnSetup", "", "AuthRequest", "", "SecModeCommand", "",
      "AttachAccept"};
  const MessageSchema* schema =
      kDownlinkTypes[type].empty() ? nullptr : FindSchema(kDownlinkTypes[type]);
  if (schema == nullptr) {
    probe_.Hit("ue.rx.unknown_type"_blk);
    return Drop();
  }
  if (m.size() < schema->size) {
    probe_.Hit("ue.rx.short"_blk);
    return Drop();
  }
  const State expected = type == 2   ? State::kWaitSetup
                         : type == 4 ? State::kWaitAuth
                         : type == 6 ? State::kWaitSmc
                                     : State::kWaitAccept;
  if (state_ != expected) {
    // Out-of-order messages are ignored.
    probe_.Split("ue.rx.unexpected"_blk,
                 type * 16 + static_cast<uint32_t>(state_));
    return Drop();
  }
  switch (type) {
    case 2: return OnConnSetup(m);
    case 4: return OnAuthRequest(m);
    case 6: return OnSecModeCommand(m);
    default: return OnAttachAccept(m);
  }
}

Reaction UeMachine::OnConnSetup(const Bytes& m) {
  probe_.Hit("ue.cs"_blk);
  config_status_ = 0;
  setup_tid_ = Read(m, cs::kTid);
  if (const uint32_t spare = Read(m, cs::kSpare)) {
    probe_.Split("ue.cs.spare"_blk, spare);
  }

  uint32_t harq = Read(m, cs::kHarq);
  probe_.Split("ue.cs.harq"_blk, harq);
  if (harq == 0) {
    probe_.Hit("ue.cs.harq.zero"_blk);
    config_status_ |= 0x01;
    harq = 4;
  } else if (harq > 8) {
    probe_.Hit("ue.cs.harq.clamp"_blk);
    config_status_ |= 0x02;
    harq = 8;
  }
  harq_ = harq;

  bsr_ = Read(m, cs::kBsr);
  probe_.Split("ue.cs.bsr"_blk, bsr_);
  if (bsr_ >= 14) probe_.Hit("ue.cs.bsr.infinity"_blk);

  rlc_mode_ = Read(m, cs::kRlc);
  probe_.Split("ue.cs.rlc"_blk, rlc_mode_);
  if (rlc_mode_ >= 2) {
    probe_.Hit("ue.cs.rlc.invalid"_blk);
    config_status_ |= 0x04;
    rlc_mode_ = 0;
  }
  const uint32_t poll = Read(m, cs::kPoll);
  probe_.Split("ue.cs.poll"_blk, poll >> 3);
  if (poll == 0) {
    probe_.Hit("ue.cs.poll.zero"_blk);
    config_status_ |= 0x08;
  }
  if (rlc_mode_ == 1 && poll != 0) {
    probe_.Hit("ue.cs.um_with_poll"_blk);
    config_status_ |= 0x10;
  }

  const uint32_t pucch = Read(m, cs::kPucch);
  if (pucch == 0) return Trigger("ue.pucch_null_resource");
  probe_.Split("ue.cs.pucch"_blk, pucch >> 11);
  for (uint32_t j = 0; j < (pucch & 0x7); ++j) probe_.Hit("ue.cs.pucch.alloc"_blk);
  pucch_class_ = pucch >> 13;

  drx_ = Read(m, cs::kDrx);
  probe_.Split("ue.cs.drx"_blk, drx_ >> 5);
  for (int b = 0; b < std::popcount(drx_); ++b) probe_.Hit("ue.cs.drx.bit"_blk);
  if (drx_ == 0) {
    probe_.Hit("ue.cs.drx.off"_blk);
    config_status_ |= 0x20;
  }
  probe_.Split("ue.cs.harq_x_drx"_blk, (harq_ >> 1) * 8 + (drx_ >> 5));
  probe_.Split("ue.cs.harq_x_bsr"_blk, harq * 16 + bsr_);
  probe_.Split("ue.cs.profile"_blk,
               (harq_ * 16 + bsr_) * 8 + rlc_mode_ * 4 + (drx_ >> 6));
  probe_.Split("ue.cs.rlc_x_poll"_blk, rlc_mode_ * 64 + poll);
  probe_.Split("ue.cs.drx_x_pucch"_blk, (drx_ >> 4) * 8 + pucch_class_);
  // Several parameters off their defaults at once: full reconfiguration.
  const int changed = (harq_ != 4) + (bsr_ != 3) + (Read(m, cs::kRlc) != 0) +
                      (poll != 9) + ((drx_ >> 5) != 1);
  if (changed >= 3) {
    probe_.Split("ue.cs.full_reconfig"_blk,
                 ((harq_ & 7) * 16 + bsr_) * 64 + (poll >> 3) * 8 + (drx_ >> 5));
  }

  if (Read(m, cs::kContention) != identity_) {
    // Contention lost: the setup was meant for another UE.
    probe_.Hit("ue.cs.contention_lost"_blk);
    return Finish(false);
  }
  probe_.Hit("ue.cs.accepted"_blk);
  state_ = State::kWaitAuth;
  return Send(EncodeMessage("ConnSetupComplete",
                            {{"transaction_id", setup_tid_},
                             {"selected_plmn", 1},
                             {"config_status", config_status_},
                             {"attach_type", 1},
                             {"nas_ksi", ksi_},
                             {"ue_net_capability", kNetCapability},
                             {"harq_echo", harq_},
                             {"drx_class", drx_ >> 4},
                             {"pdn_type", 1},
                             {"esm_info_flag", bsr_ >= 14 ? 1u : 0u},
                             {"bsr_echo", bsr_},
                             {"pucch_echo", pucch >> 8},
                             {"sequence", rlc_mode_ << 6 | poll}}),
              Channel::kDcch);
}

Reaction UeMachine::OnAuthRequest(const Bytes& m) {
  probe_.Hit("ue.ar"_blk);
  const uint32_t ksi = Read(m, ar::kKsi);
  probe_.Split("ue.ar.ksi"_blk, ksi);
  if (ksi == 7) probe_.Hit("ue.ar.ksi.reserved"_blk);
  if (Read(m, ar::kSpare)) probe_.Hit("ue.ar.spare"_blk);

  const uint32_t rand = Read(m, ar::kRand);
  auto fail = [&](uint32_t result, uint32_t auts) {
    ++auth_failures_;
    probe_.Split("ue.ar.failure"_blk, result * 4 + std::min(auth_failures_, 3u));
    if (auth_failures_ > kMaxAuthAttempts) {
      probe_.Hit("ue.ar.give_up"_blk);
      return Finish(false);
    }
    return Send(EncodeMessage("AuthResponse",
                              {{"result", result}, {"auts", auts}}),
                Channel::kDcch);
  };

  if (Read(m, ar::kMac) != AuthMac(rand)) {
    probe_.Hit("ue.ar.mac_failure"_blk);
    return fail(1, 0);
  }
  const uint32_t amf = Read(m, ar::kAmf);
  probe_.Split("ue.ar.amf"_blk, amf >> 8);
  if (!(amf & 0x8000)) {
    probe_.Hit("ue.ar.amf.non_eps"_blk);
    return fail(3, amf);
  }
  const uint32_t sqn = Read(m, ar::kSqn);
  probe_.Split("ue.ar.sqn"_blk, sqn >> 12);
  if (sqn <= kSqn || sqn - kSqn > 0x4000) probe_.Split("ue.ar.sqn.resync"_blk, sqn >> 8);
  if (sqn <= kSqn) {
    probe_.Hit("ue.ar.sqn.replayed"_blk);
    return fail(2, sqn >> 4);
  }
  if (sqn - kSqn > 0x4000) {
    probe_.Hit("ue.ar.sqn.out_of_window"_blk);
    return fail(2, sqn >> 4);
  }

  const uint32_t lifetime = Read(m, ar::kLifetime);
  if (lifetime == 0) return Trigger("ue.auth_zero_lifetime");
  probe_.Split("ue.ar.lifetime"_blk, lifetime >> 5);
  for (uint32_t t = 0; t < (lifetime >> 4); ++t) probe_.Hit("ue.ar.lifetime.tick"_blk);
  key_class_ = lifetime >> 6;
  ksi_ = ksi;

  probe_.Hit("ue.ar.ok"_blk);
  state_ = State::kWaitSmc;
  return Send(EncodeMessage("AuthResponse",
                            {{"result", 0},
                             {"res", AuthResult(rand)},
                             {"res_length", 4},
                             {"key_info", (ksi & 0x7) << 1 | key_class_ >> 1}}),
              Channel::kDcch);
}

Reaction UeMachine::OnSecModeCommand(const Bytes& m) {
  probe_.Hit("ue.smc"_blk);
  smc_tid_ = Read(m, smc::kTid);
  if (Read(m, smc::kSpare0)) probe_.Hit("ue.smc.spare0"_blk);

  const uint32_t integrity = Read(m, smc::kIntegrity);
  const uint32_t cipher = Read(m, smc::kCipher);
  probe_.Split("ue.smc.eia"_blk, integrity);
  if (integrity != 0) {
    if (Read(m, smc::kMac) != IntegrityTag(m, 1, 6)) {
      probe_.Hit("ue.smc.integrity_failure"_blk);
      return Drop();
    }
    probe_.Hit("ue.smc.integrity_ok"_blk);
  } else {
    probe_.Hit("ue.smc.null_integrity"_blk);
  }
  probe_.Split("ue.smc.eea"_blk, cipher);
  if (integrity == 0 && cipher > 3) return Trigger("ue.smc_alg_overflow");

  uint32_t status = 0;
  if (cipher > 3 || integrity > 3) {
    probe_.Hit("ue.smc.unsupported_alg"_blk);
    status = 1;
  } else if (Read(m, smc::kCapability) != kNetCapability) {
    probe_.Hit("ue.smc.capability_mismatch"_blk);
    status = 2;
  }
  if (status != 0) {
    state_ = State::kFailed;
    return Send(EncodeMessage("SecModeComplete",
                              {{"transaction_id", smc_tid_}, {"status", status}}),
                Channel::kDcch);
  }

  probe_.Split("ue.smc.key_change"_blk, Read(m, smc::kKeyChange));
  if (Read(m, smc::kSpare1)) probe_.Hit("ue.smc.spare1"_blk);
  const uint32_t nonce = Read(m, smc::kNonce);
  probe_.Split("ue.smc.nonce"_blk, nonce >> 12);
  const uint32_t rounds = Read(m, smc::kKdfRounds);
  probe_.Split("ue.smc.kdf"_blk, rounds >> 4);
  for (uint32_t r = 0; r < (rounds >> 2); ++r) probe_.Hit("ue.smc.kdf.round"_blk);
  probe_.Split("ue.smc.key_x_kdf"_blk, key_class_ * 8 + (rounds >> 4));
  probe_.Split("ue.smc.kdf_x_nonce"_blk, (rounds >> 3) * 16 + (nonce >> 12));
  probe_.Split("ue.smc.harq_x_kdf"_blk, harq_ * 8 + (rounds >> 4));
  const bool imeisv = Read(m, smc::kImeisvReq) != 0;
  probe_.Split("ue.smc.imeisv_req"_blk, imeisv);

  cipher_ = cipher;
  integrity_ = integrity;
  state_ = State::kWaitAccept;
  Bytes reply = EncodeMessage("SecModeComplete",
                              {{"transaction_id", smc_tid_},
                               {"imeisv", imeisv ? kImeisv : 0},
                               {"selected_cipher", cipher},
                               {"selected_integrity", integrity},
                               {"kdf_class", rounds >> 5}});
  ApplyFieldInPlace(reply, smd::kMac, IntegrityTag(reply, 0, 6));
  return Send(std::move(reply), Channel::kDcch);
}

Reaction UeMachine::OnAttachAccept(const Bytes& m) {
  probe_.Hit("ue.aa"_blk);
  const uint32_t result = Read(m, aa::kResult);
  probe_.Split("ue.aa.result"_blk, result);
  if (result != 1 && result != 2) probe_.Hit("ue.aa.result.unknown"_blk);
  if (Read(m, aa::kSpare)) probe_.Hit("ue.aa.spare"_blk);

  const uint32_t t3412 = Read(m, aa::kT3412);
  const uint32_t unit = t3412 >> 5;
  probe_.Split("ue.aa.t3412.unit"_blk, unit);
  probe_.Split("ue.aa.t3412.value"_blk, (t3412 & 0x1F) >> 2);
  if (unit == 7) probe_.Hit("ue.aa.t3412.deactivated"_blk);

  const uint32_t tai_count = Read(m, aa::kTaiCount);
  if (tai_count == 13 || tai_count == 14) {
    return Trigger("ue.tai_list_overflow");
  }
  if (tai_count == 0) probe_.Hit("ue.aa.tai.empty"_blk);
  for (uint32_t j = 0; j < tai_count; ++j) probe_.Hit("ue.aa.tai.entry"_blk);
  const uint32_t tai_type = Read(m, aa::kTaiType);
  probe_.Split("ue.aa.tai.type"_blk, tai_type);
  if (tai_type > 2) probe_.Hit("ue.aa.tai.type.invalid"_blk);

  probe_.Split("ue.aa.tai_x_type"_blk, tai_count * 16 + tai_type);
  probe_.Split("ue.aa.area_profile"_blk,
               (unit * 16 + tai_type) * 16 + (t3412 & 0x1F) / 2);
  const uint32_t guti = Read(m, aa::kGuti);
  if (guti != GutiFor(identity_)) {
    probe_.Hit("ue.aa.guti.reallocated"_blk);
    probe_.Split("ue.aa.guti"_blk, (guti ^ GutiFor(identity_)) >> 24);
  }

  const uint32_t ambr = Read(m, aa::kAmbr);
  probe_.Split("ue.aa.ambr"_blk, ambr >> 11);
  if (ambr == 0) probe_.Hit("ue.aa.ambr.zero"_blk);

  uint32_t esm_status = 0;
  const uint32_t ebi = Read(m, aa::kEbi);
  probe_.Split("ue.aa.ebi"_blk, ebi);
  if (ebi < 5) {
    probe_.Hit("ue.aa.ebi.reserved"_blk);
    esm_status = 43;
  }
  const uint32_t pti = Read(m, aa::kPti);
  probe_.Split("ue.aa.pti"_blk, pti);
  probe_.Split("ue.aa.ebi_x_pti"_blk, ebi * 16 + pti);
  const uint32_t qci = Read(m, aa::kQci);
  if (qci >= 1 && qci <= 9) {
    probe_.Split("ue.aa.qci.standard"_blk, qci);
    qci_class_ = qci <= 4 ? 0 : 1;
  } else if (qci >= 128) {
    probe_.Split("ue.aa.qci.operator"_blk, qci >> 4);
    qci_class_ = 2;
  } else {
    probe_.Hit("ue.aa.qci.invalid"_blk);
    qci_class_ = 3;
    esm_status = esm_status ? esm_status : 30;
  }
  if (const uint32_t cause = Read(m, aa::kEsmCause)) {
    probe_.Split("ue.aa.esm_cause"_blk, cause);
    if (esm_status == 0) esm_status = cause;
  }
  probe_.Split("ue.aa.drx_x_t3412"_blk, (drx_ >> 5) * 8 + unit);
  probe_.Split("ue.aa.t3412_x_qci"_blk, unit * 4 + qci_class_);
  probe_.Split("ue.aa.pucch_x_qci"_blk, pucch_class_ * 4 + qci_class_);
  probe_.Split("ue.aa.harq_x_tai"_blk, harq_ * 16 + tai_type);
  probe_.Split("ue.aa.bsr_x_qci"_blk, bsr_ * 4 + qci_class_);
  const int changed = (t3412 != 0x21) + (tai_count != 1) + (tai_type != 0) +
                      (ambr != 0x0A0A) + (pti != 0) + (qci != 9);
  if (changed >= 3) {
    probe_.Split("ue.aa.area_reconfig"_blk,
                 ((unit * 8 + std::min(tai_count, 7u)) * 8 + (tai_type & 7)) * 8 +
                     (ambr >> 13));
  }

  probe_.Hit("ue.aa.ok"_blk);
  state_ = State::kAttached;
  attached_ = true;
  return Send(EncodeMessage("AttachComplete",
                            {{"eps_bearer_id", ebi},
                             {"esm_status", esm_status},
                             {"bearer_ack", 1},
                             {"ue_flags", (std::min(tai_count, 3u) << 3) | (tai_type & 0x7)},
                             {"ambr_echo", ambr},
                             {"guti_hint", guti >> 16},
                             {"timer_echo", t3412},
                             {"bearer_info", (pti & 0xF) << 4 | (qci & 0xF)}}),
              Channel::kDcch);
}

Reaction UeMachine::OnTimeout() {
  probe_.Enter("ue.timeout"_blk);
  probe_.Split("ue.timeout.state"_blk, static_cast<uint32_t>(state_));
  if (!last_sent_ || state_ == State::kAttached || state_ == State::kFailed) {
    return Finish(attached_);
  }
  if (retries_ >= kMaxRetransmissions) {
    probe_.Hit("ue.timeout.give_up"_blk);
    return Finish(false);
  }
  ++retries_;
  probe_.Split("ue.timeout.retransmit"_blk, retries_);
  return Reaction{last_sent_, false};
}

// ---------------------------------------------------------------------------
// eNB

void EnbMachine::Reset(uint64_t rng_seed) {
  ResetCommon();
  rng_ = RandomSource(MixSeed(rng_seed, 2));
  identity_ = setup_tid_ = smc_tid_ = 0;
  harq_sent_ = drx_sent_ = ue_net_cap_ = 0;
  rand_ = 0;
  sqn_ = 0x0020;
  auth_attempts_ = 0;
  cipher_ = integrity_ = 0;
  ambr_ = guti_ = pucch_ = 0;
  harq_echo_ = drx_class_echo_ = 0;
}

Reaction EnbMachine::Abort(std::string_view reason) {
  probe_.Hit(BlockId(reason));
  probe_.Hit("enb.abort"_blk);
  return Finish(false);
}

Reaction EnbMachine::Receive(const Bytes& bytes) {
  probe_.Enter("enb.rx"_blk);
  std::optional<Bytes> payload = Unframe(bytes, "enb"_blk);
  if (!payload || payload->empty()) return Abort("enb.rx.bad_frame");
  const Bytes& m = *payload;
  const uint32_t type = m[0] >> 4;
  probe_.Split("enb.rx.type"_blk, type);

  static constexpr std::array<std::string_view, 16> kUplinkTypes = {
      "", "ConnRequest", "", "ConnSetupComplete", "", "AuthResponse", "",
      "SecModeComplete", "", "AttachComplete"};
  const MessageSchema* schema =
      kUplinkTypes[type].empty() ? nullptr : FindSchema(kUplinkTypes[type]);
  if (schema == nullptr) return Abort("enb.rx.unknown_type");
  if (m.size() < schema->size) return Abort("enb.rx.short");
  const State expected = type == 1   ? State::kIdle
                         : type == 3 ? State::kWaitSetupDone
                         : type == 5 ? State::kWaitAuthResp
                         : type == 7 ? State::kWaitSmcDone
                                     : State::kWaitAttachDone;
  if (state_ != expected) {
    probe_.Split("enb.rx.unexpected"_blk,
                 type * 16 + static_cast<uint32_t>(state_));
    return Abort("enb.rx.out_of_order");
  }
  switch (type) {
    case 1: return OnConnRequest(m);
    case 3: return OnConnSetupComplete(m);
    case 5: return OnAuthResponse(m);
    case 7: return OnSecModeComplete(m);
    default: return OnAttachComplete(m);
  }
}

Reaction EnbMachine::OnConnRequest(const Bytes& m) {
  probe_.Hit("enb.cr"_blk);
  const uint32_t cap = Read(m, cr::kCapability);
  if (cap == 0) return Trigger("enb.capability_null");
  if (Read(m, cr::kSpare)) return Abort("enb.cr.spare");
  const uint32_t cause = Read(m, cr::kCause);
  probe_.Split("enb.cr.cause"_blk, cause);
  if (cause > 4) return Abort("enb.cr.cause_invalid");
  const uint32_t access_class = Read(m, cr::kAccessClass);
  probe_.Split("enb.cr.access_class"_blk, access_class >> 2);
  if (access_class > 15) return Abort("enb.cr.access_class_invalid");
  probe_.Split("enb.cr.cap.release"_blk, cap >> 12);
  probe_.Split("enb.cr.cap.features"_blk, (cap >> 4) & 0xF);
  if (cap & 0x8000) return Abort("enb.cr.cap_unsupported");
  if (cause == 0) probe_.Hit("enb.cr.emergency"_blk);

  identity_ = Read(m, cr::kIdentity);
  setup_tid_ = static_cast<uint32_t>(rng_.Below(4));
  harq_sent_ = 4;
  pucch_ = 0x0120 + ((cap >> 4) & 0xF) * 0x0100;
  drx_sent_ = 0x20 | (cap & 0x0F);
  probe_.Hit("enb.cr.setup"_blk);
  state_ = State::kWaitSetupDone;
  return Send(EncodeMessage("ConnSetup", {{"transaction_id", setup_tid_},
                                          {"contention_id", identity_},
                                          {"max_harq_tx", harq_sent_},
                                          {"periodic_bsr_timer", 3},
                                          {"rlc_mode", 0},
                                          {"t_poll_retransmit", 9},
                                          {"pucch_resource", pucch_},
                                          {"drx_cycle", drx_sent_}}),
              Channel::kCcch);
}

Reaction EnbMachine::SendAuthRequest() {
  ++auth_attempts_;
  probe_.Split("enb.auth.attempt"_blk, auth_attempts_);
  rand_ = static_cast<uint32_t>(rng_.Next());
  state_ = State::kWaitAuthResp;
  return Send(EncodeMessage("AuthRequest", {{"nas_ksi", 0},
                                            {"rand_challenge", rand_},
                                            {"autn_sqn", sqn_},
                                            {"autn_amf", kEnbAmf},
                                            {"autn_mac", AuthMac(rand_)},
                                            {"key_lifetime", kEnbLifetime}}),
              Channel::kDcch);
}

Reaction EnbMachine::OnConnSetupComplete(const Bytes& m) {
  probe_.Hit("enb.csc"_blk);
  if (Read(m, csc::kTid) != setup_tid_) return Abort("enb.csc.tid");
  if (Read(m, csc::kSpare0)) return Abort("enb.csc.spare0");
  const uint32_t plmn = Read(m, csc::kPlmn);
  if (plmn != 1) {
    probe_.Split("enb.csc.plmn"_blk, plmn >> 5);
    return Abort("enb.csc.plmn_unknown");
  }
  const uint32_t status = Read(m, csc::kStatus);
  for (int b = 0; b < 8; ++b) {
    if (status >> b & 1) probe_.Split("enb.csc.status"_blk, b);
  }
  for (int b = 0; b < std::popcount(status); ++b) probe_.Hit("enb.csc.reconfigure.step"_blk);
  if (status != 0) probe_.Hit("enb.csc.reconfigure"_blk);
  const uint32_t attach_type = Read(m, csc::kAttachType);
  probe_.Split("enb.csc.attach_type"_blk, attach_type);
  if (attach_type != 1 && attach_type != 2 && attach_type != 6) {
    return Abort("enb.csc.attach_type_invalid");
  }
  probe_.Split("enb.csc.ksi"_blk, Read(m, csc::kKsi));
  if (Read(m, csc::kSpare1)) return Abort("enb.csc.spare1");
  const uint32_t cap = Read(m, csc::kNetCap);
  probe_.Split("enb.csc.net_cap"_blk, cap >> 11);
  if (!(cap & 0x8000)) return Abort("enb.csc.no_eea0");
  ue_net_cap_ = cap;
  const uint32_t harq_echo = Read(m, csc::kHarqEcho);
  if (harq_echo != harq_sent_) {
    probe_.Split("enb.csc.harq_mismatch"_blk, harq_echo);
    for (uint32_t j = 0; j < harq_echo; ++j) probe_.Hit("enb.csc.harq_realloc"_blk);
  }
  const uint32_t drx_class = Read(m, csc::kDrxClass);
  probe_.Split("enb.csc.drx_class"_blk, drx_class);
  probe_.Split("enb.csc.harq_x_drx"_blk, harq_echo * 16 + drx_class);
  probe_.Split("enb.csc.status_value"_blk, status);
  probe_.Split("enb.csc.harq_x_status"_blk, harq_echo * 64 + (status & 0x3F));
  probe_.Split("enb.csc.profile"_blk,
               (harq_echo * 16 + drx_class) * 8 + (status & 0x7));
  probe_.Split("enb.csc.drx_x_status"_blk, drx_class * 64 + (status & 0x3F));
  if (drx_class != drx_sent_ >> 4) {
    for (uint32_t j = 0; j <= drx_class; ++j) probe_.Hit("enb.csc.drx_realign"_blk);
  }
  const uint32_t pdn = Read(m, csc::kPdnType);
  probe_.Split("enb.csc.pdn_type"_blk, pdn);
  if (pdn < 1 || pdn > 3) return Abort("enb.csc.pdn_invalid");
  probe_.Split("enb.csc.esm_info"_blk, Read(m, csc::kEsmInfo));
  const uint32_t bsr = Read(m, csc::kBsrEcho);
  probe_.Split("enb.csc.harq_x_bsr"_blk, harq_echo * 16 + bsr);
  const uint32_t seq = Read(m, csc::kSequence);
  probe_.Split("enb.csc.sequence"_blk, seq);
  probe_.Split("enb.csc.rlc_x_harq"_blk, (seq >> 6) * 16 + harq_echo);
  const int changed = (harq_echo != harq_sent_) + (bsr != 3) + ((seq >> 6) != 0) +
                      ((seq & 0x3F) != 9) + ((drx_class >> 1) != (drx_sent_ >> 5));
  if (changed >= 3) {
    probe_.Split("enb.csc.full_reconfig"_blk,
                 ((harq_echo & 7) * 16 + bsr) * 64 + ((seq & 0x3F) >> 3) * 8 +
                     (drx_class >> 1));
  }
  const uint32_t pucch_echo = Read(m, csc::kPucchEcho);
  if (pucch_echo != pucch_ >> 8) {
    probe_.Split("enb.csc.pucch_moved"_blk, pucch_echo);
    for (uint32_t j = 0; j < (pucch_echo & 7); ++j) probe_.Hit("enb.csc.pucch_realloc"_blk);
  }
  harq_echo_ = harq_echo;
  drx_class_echo_ = drx_class;
  probe_.Hit("enb.csc.ok"_blk);
  return SendAuthRequest();
}

Reaction EnbMachine::OnAuthResponse(const Bytes& m) {
  probe_.Hit("enb.ap"_blk);
  const uint32_t result = Read(m, ap::kResult);
  probe_.Split("enb.ap.result"_blk, result);
  if (Read(m, ap::kSpare0)) return Abort("enb.ap.spare0");
  const uint32_t auts = Read(m, ap::kAuts);
  uint32_t key_info = 0;
  switch (result) {
    case 0: {
      const uint32_t res_length = Read(m, ap::kResLength);
      if (res_length > 8) return Trigger("enb.res_length_loop");
      if (res_length != 4) return Abort("enb.ap.res_length");
      if (Read(m, ap::kRes) != AuthResult(rand_)) {
        return Abort("enb.ap.res_mismatch");
      }
      if (auts != 0) return Abort("enb.ap.auts_unexpected");
      key_info = Read(m, ap::kKeyInfo);
      probe_.Split("enb.ap.key_info"_blk, key_info);
      break;
    }
    case 1:
      return Abort("enb.ap.mac_failure");
    case 2:
      if (auts == 0xFFFF) return Trigger("enb.resync_overflow");
      probe_.Split("enb.ap.resync"_blk, auts >> 4);
      if (auth_attempts_ >= kMaxAuthAttempts) return Abort("enb.ap.give_up");
      sqn_ = ((auts << 4) + 0x20) & 0xFFFF;
      return SendAuthRequest();
    default:
      probe_.Split("enb.ap.non_eps.amf"_blk, auts >> 8);
      return Abort("enb.ap.non_eps");
  }
  probe_.Hit("enb.ap.ok"_blk);
  smc_tid_ = static_cast<uint32_t>(rng_.Below(4));
  cipher_ = 1;
  integrity_ = 2;
  Bytes smc = EncodeMessage("SecModeCommand",
                            {{"transaction_id", smc_tid_},
                             {"cipher_alg", cipher_},
                             {"integrity_alg", integrity_},
                             {"replayed_capability", ue_net_cap_},
                             {"nonce", 0x1234},
                             {"imeisv_request", 1},
                             {"kdf_rounds", 0x10}});
  ApplyFieldInPlace(smc, smc::kMac, IntegrityTag(smc, 1, 6));
  state_ = State::kWaitSmcDone;
  return Send(std::move(smc), Channel::kDcch);
}

Reaction EnbMachine::OnSecModeComplete(const Bytes& m) {
  probe_.Hit("enb.smd"_blk);
  if (Read(m, smd::kTid) != smc_tid_) return Abort("enb.smd.tid");
  const uint32_t status = Read(m, smd::kStatus);
  probe_.Split("enb.smd.status"_blk, status);
  if (status != 0) return Abort("enb.smd.rejected");
  const uint32_t imeisv = Read(m, smd::kImeisv);
  if (imeisv == 0xFFFFFFFF) return Trigger("enb.imeisv_overflow");
  if (imeisv == 0) return Abort("enb.smd.imeisv_missing");
  probe_.Split("enb.smd.tac"_blk, imeisv >> 27);
  const uint32_t cipher = Read(m, smd::kCipher);
  const uint32_t integrity = Read(m, smd::kIntegrity);
  if (cipher != cipher_ || integrity != integrity_) {
    probe_.Split("enb.smd.alg"_blk, cipher * 8 + integrity);
    return Abort("enb.smd.alg_mismatch");
  }
  const uint32_t kdf_class = Read(m, smd::kKdfClass);
  probe_.Split("enb.smd.kdf_class"_blk, kdf_class);
  if (Read(m, smd::kMac) != IntegrityTag(m, 0, 6)) {
    return Abort("enb.smd.integrity_failure");
  }
  probe_.Hit("enb.smd.ok"_blk);
  ambr_ = kEnbAmbr;
  guti_ = GutiFor(identity_);
  state_ = State::kWaitAttachDone;
  return Send(EncodeMessage("AttachAccept", {{"eps_result", 1},
                                             {"t3412_timer", 0x21},
                                             {"tai_list_count", 1},
                                             {"tai_list_type", 0},
                                             {"guti", guti_},
                                             {"apn_ambr", ambr_},
                                             {"eps_bearer_id", kEnbEbi},
                                             {"pti", 0},
                                             {"qci", 9}}),
              Channel::kDcch);
}

Reaction EnbMachine::OnAttachComplete(const Bytes& m) {
  probe_.Hit("enb.ac"_blk);
  const uint32_t ebi = Read(m, ac::kEbi);
  if (ebi != kEnbEbi) {
    probe_.Split("enb.ac.ebi"_blk, ebi);
    return Abort("enb.ac.ebi_mismatch");
  }
  const uint32_t esm = Read(m, ac::kEsmStatus);
  const uint32_t esm_status_class = esm == 0 ? 0 : esm == 43 ? 1 : esm == 30 ? 2 : 3;
  if (esm != 0) {
    probe_.Split("enb.ac.esm_status"_blk, esm);
    probe_.Hit("enb.ac.esm_failure"_blk);
  }
  if (Read(m, ac::kBearerAck) != 1) return Abort("enb.ac.bearer_nack");
  const uint32_t flags = Read(m, ac::kFlags);
  probe_.Split("enb.ac.flags"_blk, flags);
  probe_.Split("enb.ac.flags_x_esm"_blk, flags * 4 + esm_status_class);
  for (uint32_t j = 0; j < (flags >> 3); ++j) probe_.Hit("enb.ac.tai_reload"_blk);
  probe_.Split("enb.ac.flags_x_ebi"_blk, flags * 16 + ebi);
  probe_.Split("enb.ac.harq_x_flags"_blk, harq_echo_ * 32 + flags);
  probe_.Split("enb.ac.drx_x_esm"_blk, drx_class_echo_ * 4 + esm_status_class);
  const uint32_t ambr = Read(m, ac::kAmbrEcho);
  if (ambr != ambr_) {
    probe_.Split("enb.ac.ambr_mismatch"_blk, ambr >> 8);
    probe_.Split("enb.ac.ambr_x_flags"_blk, (ambr >> 13) * 32 + flags);
  }
  const uint32_t bearer = Read(m, ac::kBearerInfo);
  if (bearer != 0x09) {
    probe_.Split("enb.ac.bearer_modified"_blk, bearer);
    probe_.Split("enb.ac.bearer_x_esm"_blk, (bearer >> 4) * 4 + esm_status_class);
  }
  const uint32_t timer = Read(m, ac::kTimerEcho);
  probe_.Split("enb.ac.timer"_blk, timer);
  if (timer >> 5 == 7) probe_.Hit("enb.ac.timer.deactivated"_blk);
  const int changed = (timer != 0x21) + ((flags >> 3) != 1) + ((flags & 7) != 0) +
                      (ambr != ambr_) + (esm != 0);
  if (changed >= 3) {
    probe_.Split("enb.ac.area_reconfig"_blk,
                 ((timer >> 5) * 32 + flags) * 8 + (ambr >> 13));
  }
  const uint32_t hint = Read(m, ac::kGutiHint);
  if (hint != guti_ >> 16) {
    probe_.Split("enb.ac.guti_hint"_blk, hint >> 8);
    return Abort("enb.ac.guti_mismatch");
  }
  probe_.Hit("enb.ac.attached"_blk);
  return Finish(true);
}

Reaction EnbMachine::OnTimeout() {
  probe_.Enter("enb.timeout"_blk);
  probe_.Split("enb.timeout.state"_blk, static_cast<uint32_t>(state_));
  if (!last_sent_ || state_ == State::kAttached || state_ == State::kFailed) {
    return Finish(attached_);
  }
  if (retries_ >= kMaxRetransmissions) return Abort("enb.timeout.give_up");
  ++retries_;
  probe_.Split("enb.timeout.retransmit"_blk,
               static_cast<uint32_t>(state_) * 4 + retries_);
  return Reaction{last_sent_, false};
}

}  // namespace attachfuzz
