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

#include "attachfuzz/dissector.h"

#include <algorithm>
#include <cstdio>
#include <map>

namespace attachfuzz {
namespace {

constexpr Discriminator TypeCode(uint8_t code) {
  return Discriminator{0, 0xF0, static_cast<uint8_t>(code << 4)};
}

std::vector<MessageSchema> BuildRegistry() {
  using D = Direction;
  using C = Channel;
  return {
      {"ConnRequest", C::kCcch, D::kUplink, 8, TypeCode(1),
       {{"msg_type", 0, 1, 0xF0},
        {"spare", 0, 1, 0x0F},
        {"ue_identity", 1, 4, 0xFFFFFFFF},
        {"establishment_cause", 5, 1, 0xE0},
        {"access_class", 5, 1, 0x1F},
        {"ue_capability", 6, 2, 0xFFFF}}},
      {"ConnSetup", C::kCcch, D::kDownlink, 10, TypeCode(2),
       {{"msg_type", 0, 1, 0xF0},
        {"transaction_id", 0, 1, 0x0C},
        {"spare", 0, 1, 0x03},
        {"contention_id", 1, 4, 0xFFFFFFFF},
        {"max_harq_tx", 5, 1, 0xF0},
        {"periodic_bsr_timer", 5, 1, 0x0F},
        {"rlc_mode", 6, 1, 0xC0},
        {"t_poll_retransmit", 6, 1, 0x3F},
        {"pucch_resource", 7, 2, 0xFFFF},
        {"drx_cycle", 9, 1, 0xFF}}},
      {"ConnSetupComplete", C::kDcch, D::kUplink, 10, TypeCode(3),
       {{"msg_type", 0, 1, 0xF0},
        {"transaction_id", 0, 1, 0x0C},
        {"spare", 0, 1, 0x03},
        {"selected_plmn", 1, 1, 0xFF},
        {"config_status", 2, 1, 0xFF},
        {"attach_type", 3, 1, 0xE0},
        {"nas_ksi", 3, 1, 0x1C},
        {"spare", 3, 1, 0x03},
        {"ue_net_capability", 4, 2, 0xFFFF},
        {"harq_echo", 6, 1, 0xF0},
        {"drx_class", 6, 1, 0x0F},
        {"pdn_type", 7, 1, 0xE0},
        {"esm_info_flag", 7, 1, 0x10},
        {"bsr_echo", 7, 1, 0x0F},
        {"sequence", 8, 1, 0xFF},
        {"pucch_echo", 9, 1, 0xFF}}},
      {"AuthRequest", C::kDcch, D::kDownlink, 12, TypeCode(4),
       {{"msg_type", 0, 1, 0xF0},
        {"nas_ksi", 0, 1, 0x0E},
        {"spare", 0, 1, 0x01},
        {"rand_challenge", 1, 4, 0xFFFFFFFF},
        {"autn_sqn", 5, 2, 0xFFFF},
        {"autn_amf", 7, 2, 0xFFFF},
        {"autn_mac", 9, 2, 0xFFFF},
        {"key_lifetime", 11, 1, 0xFF}}},
      {"AuthResponse", C::kDcch, D::kUplink, 8, TypeCode(5),
       {{"msg_type", 0, 1, 0xF0},
        {"result", 0, 1, 0x0C},
        {"spare", 0, 1, 0x03},
        {"res", 1, 4, 0xFFFFFFFF},
        {"auts", 5, 2, 0xFFFF},
        {"res_length", 7, 1, 0xF0},
        {"key_info", 7, 1, 0x0F}}},
      {"SecModeCommand", C::kDcch, D::kDownlink, 8, TypeCode(6),
       {{"msg_type", 0, 1, 0xF0},
        {"transaction_id", 0, 1, 0x0C},
        {"spare", 0, 1, 0x03},
        {"cipher_alg", 1, 1, 0xE0},
        {"integrity_alg", 1, 1, 0x1C},
        {"key_change", 1, 1, 0x02},
        {"spare", 1, 1, 0x01},
        {"replayed_capability", 2, 2, 0xFFFF},
        {"nonce", 4, 2, 0xFFFF},
        {"imeisv_request", 6, 1, 0x80},
        {"kdf_rounds", 6, 1, 0x7F},
        {"mac_i", 7, 1, 0xFF}}},
      {"SecModeComplete", C::kDcch, D::kUplink, 7, TypeCode(7),
       {{"msg_type", 0, 1, 0xF0},
        {"transaction_id", 0, 1, 0x0C},
        {"status", 0, 1, 0x03},
        {"imeisv", 1, 4, 0xFFFFFFFF},
        {"selected_cipher", 5, 1, 0xE0},
        {"selected_integrity", 5, 1, 0x1C},
        {"kdf_class", 5, 1, 0x03},
        {"mac_i", 6, 1, 0xFF}}},
      {"AttachAccept", C::kDcch, D::kDownlink, 12, TypeCode(8),
       {{"msg_type", 0, 1, 0xF0},
        {"eps_result", 0, 1, 0x0E},
        {"spare", 0, 1, 0x01},
        {"t3412_timer", 1, 1, 0xFF},
        {"tai_list_count", 2, 1, 0xF0},
        {"tai_list_type", 2, 1, 0x0F},
        {"guti", 3, 4, 0xFFFFFFFF},
        {"apn_ambr", 7, 2, 0xFFFF},
        {"eps_bearer_id", 9, 1, 0xF0},
        {"pti", 9, 1, 0x0F},
        {"qci", 10, 1, 0xFF},
        {"esm_cause", 11, 1, 0xFF}}},
      {"AttachComplete", C::kDcch, D::kUplink, 9, TypeCode(9),
       {{"msg_type", 0, 1, 0xF0},
        {"eps_bearer_id", 0, 1, 0x0F},
        {"esm_status", 1, 1, 0xFF},
        {"bearer_ack", 2, 1, 0xE0},
        {"ue_flags", 2, 1, 0x1F},
        {"ambr_echo", 3, 2, 0xFFFF},
        {"guti_hint", 5, 2, 0xFFFF},
        {"timer_echo", 7, 1, 0xFF},
        {"bearer_info", 8, 1, 0xFF}}},
  };
}

std::vector<Field> MacHeaderFields() {
  return {{"mac_lcid", 0, 0, 1, 0x1F}, {"mac_length", 0, 1, 1, 0xFF}};
}

Packet Unknown(Bytes bytes, Channel channel, Direction direction,
               Layer layer) {
  Packet p{std::move(bytes), layer, direction, channel,
           std::string(kUnknownType), {}};
  const auto len = static_cast<uint32_t>(std::min<size_t>(p.bytes.size(), 8));
  if (len > 0) {
    const uint64_t mask = len == 8 ? UINT64_MAX : (uint64_t{1} << 8 * len) - 1;
    p.fields.push_back(Field{"raw", 0, 0, len, mask});
  }
  return p;
}

}  // namespace

bool MessageSchema::Matches(std::span<const uint8_t> payload,
                            Channel on) const {
  return on == channel && payload.size() >= size &&
         payload.size() > discriminator.offset &&
         (payload[discriminator.offset] & discriminator.mask) ==
             discriminator.expected;
}

std::vector<Field> MessageSchema::Fields(uint32_t base) const {
  std::vector<Field> out;
  std::map<std::string, uint32_t> seen;
  for (const FieldSpec& spec : field_specs) {
    out.push_back(Field{spec.name, seen[spec.name]++, spec.offset + base,
                        spec.length, spec.mask});
  }
  return out;
}

const std::vector<MessageSchema>& SchemaRegistry() {
  static const std::vector<MessageSchema> registry = BuildRegistry();
  return registry;
}

const MessageSchema* FindSchema(std::string_view packet_type) {
  for (const MessageSchema& s : SchemaRegistry()) {
    if (s.packet_type == packet_type) return &s;
  }
  return nullptr;
}

Packet Dissect(Bytes bytes, Channel channel, Direction direction,
               Layer layer) {
  const uint32_t base = layer == Layer::kMac ? kMacHeaderSize : 0;
  if (bytes.size() <= base) {
    return Unknown(std::move(bytes), channel, direction, layer);
  }
  const std::span<const uint8_t> payload(bytes.data() + base,
                                         bytes.size() - base);
  for (const MessageSchema& schema : SchemaRegistry()) {
    if (!schema.Matches(payload, channel)) continue;
    std::vector<Field> fields;
    if (layer == Layer::kMac) fields = MacHeaderFields();
    for (Field& f : schema.Fields(base)) fields.push_back(std::move(f));
    return Packet{std::move(bytes), layer,          direction,
                  channel,          schema.packet_type, std::move(fields)};
  }
  return Unknown(std::move(bytes), channel, direction, layer);
}

Bytes EncodeMessage(
    std::string_view packet_type,
    std::initializer_list<std::pair<std::string_view, uint64_t>> values) {
  const MessageSchema* schema = FindSchema(packet_type);
  if (schema == nullptr) {
    throw std::invalid_argument("no schema for " + std::string(packet_type));
  }
  Bytes bytes(schema->size, 0);
  bytes[schema->discriminator.offset] = schema->discriminator.expected;
  const std::vector<Field> fields = schema->Fields();
  for (const auto& [name, value] : values) {
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const Field& f) { return f.name == name; });
    if (it == fields.end()) {
      throw std::invalid_argument(std::string(packet_type) + " has no field " +
                                  std::string(name));
    }
    ApplyFieldInPlace(bytes, *it, value & it->MaxValue());
  }
  return bytes;
}

Bytes WrapMac(std::span<const uint8_t> payload, uint8_t lcid) {
  Bytes out;
  out.reserve(payload.size() + kMacHeaderSize);
  out.push_back(lcid & 0x1F);
  out.push_back(static_cast<uint8_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::string DumpSchemas() {
  std::string out = "schema name | channel | field | offset | len | mask\n";
  char mask[24];
  for (const MessageSchema& s : SchemaRegistry()) {
    for (const Field& f : s.Fields()) {
      std::snprintf(mask, sizeof(mask), "0x%0*llX",
                    static_cast<int>(2 * f.length),
                    static_cast<unsigned long long>(f.mask));
      out += s.packet_type + " | " + std::string(ToString(s.channel)) +
             " | " + f.name + "#" + std::to_string(f.index) + " | " +
             std::to_string(f.offset) + " | " + std::to_string(f.length) +
             " | " + mask + "\n";
    }
  }
  return out;
}

}  // namespace attachfuzz
