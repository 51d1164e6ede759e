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

// Dissector for the built-in attach protocol.
//
// Every message has a fixed binary layout. The high nibble of byte 0 is the
// message type and acts as the discriminator. Bytes that match no schema
// dissect to UNKNOWN with a single "raw" field so a fuzzing iteration never
// stalls on dissection.

#ifndef ATTACHFUZZ_DISSECTOR_H_
#define ATTACHFUZZ_DISSECTOR_H_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "attachfuzz/packet.h"

namespace attachfuzz {

inline constexpr std::string_view kUnknownType = "UNKNOWN";
// Size of the framing header exposed by the MAC-layer hook.
inline constexpr uint32_t kMacHeaderSize = 2;

struct FieldSpec {
  std::string name;
  uint32_t offset;
  uint32_t length;
  uint64_t mask;
};

struct Discriminator {
  uint32_t offset;
  uint8_t mask;
  uint8_t expected;
};

struct MessageSchema {
  std::string packet_type;
  Channel channel;
  Direction direction;  // who emits it: DL = eNB, UL = UE
  uint32_t size;        // fixed RRC payload size in bytes
  Discriminator discriminator;
  std::vector<FieldSpec> field_specs;

  bool Matches(std::span<const uint8_t> payload, Channel on) const;
  // Field list with indices assigned to repeated names, shifted by `base`.
  std::vector<Field> Fields(uint32_t base = 0) const;
};

// The nine attach-flow schemas, in protocol order.
const std::vector<MessageSchema>& SchemaRegistry();

// Returns nullptr for an unknown type name.
const MessageSchema* FindSchema(std::string_view packet_type);

Packet Dissect(Bytes bytes, Channel channel, Direction direction, Layer layer);

// Builds the RRC payload for `packet_type`: all bits zero except the
// discriminator and the named field values.
Bytes EncodeMessage(
    std::string_view packet_type,
    std::initializer_list<std::pair<std::string_view, uint64_t>> values);

// Wraps an RRC payload in the MAC framing header.
Bytes WrapMac(std::span<const uint8_t> payload, uint8_t lcid);

// `schema name | channel | field | offset | len | mask` table.
std::string DumpSchemas();

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_DISSECTOR_H_
