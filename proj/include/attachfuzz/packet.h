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

// Packets, fields and bit-exact field access.
//
// A Field names a region of a packet by (offset, length, mask). The mask is
// written big-endian over the full `length`-byte span; the field value is the
// masked bits compacted in order from most- to least-significant, so a
// contiguous mask reduces to the usual (bytes & mask) >> shift.

#ifndef ATTACHFUZZ_PACKET_H_
#define ATTACHFUZZ_PACKET_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace attachfuzz {

using Bytes = std::vector<uint8_t>;

enum class Layer { kRrc, kMac };
enum class Direction { kDownlink, kUplink };
enum class Channel { kCcch, kDcch };

std::string_view ToString(Layer layer);
std::string_view ToString(Direction direction);
std::string_view ToString(Channel channel);
Layer ParseLayer(std::string_view s);
Direction ParseDirection(std::string_view s);
Channel ParseChannel(std::string_view s);

// Raised when a field does not fit the packet it is applied to. Signals a
// mismatch between the dissector and the bytes, never a fuzzing outcome.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Raised when a value falls outside the domain of the operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Field {
  std::string name;
  uint32_t index = 0;
  uint32_t offset = 0;
  uint32_t length = 1;  // 1..8 bytes
  uint64_t mask = 0;

  int Width() const;  // popcount(mask)
  // |V_f| = 2^Width(). Returned as double because widths up to 64 are legal.
  double ValueSpaceSize() const;
  // 2^Width() - 1.
  uint64_t MaxValue() const;
};

struct FieldValue {
  uint64_t value = 0;
  int width_bits = 0;

  friend bool operator==(const FieldValue&, const FieldValue&) = default;
};

struct Packet {
  Bytes bytes;
  Layer layer = Layer::kRrc;
  Direction direction = Direction::kDownlink;
  Channel channel = Channel::kCcch;
  std::string packet_type;
  std::vector<Field> fields;

  // Returns nullptr if no field has this (name, index).
  const Field* FindField(std::string_view name, uint32_t index) const;
};

// Throws StructuralError unless `field` is well-formed and fits `bytes`.
void CheckField(std::span<const uint8_t> bytes, const Field& field);

FieldValue ExtractField(std::span<const uint8_t> bytes, const Field& field);
inline FieldValue ExtractField(const Packet& packet, const Field& field) {
  return ExtractField(packet.bytes, field);
}

// Writes `value` into the masked bits in place. Throws DomainError if the
// value does not fit the field.
void ApplyFieldInPlace(Bytes& bytes, const Field& field, uint64_t value);
Packet ApplyField(Packet packet, const Field& field, uint64_t value);

std::string ToHex(std::span<const uint8_t> bytes);
// Throws std::invalid_argument on odd length or non-hex characters.
Bytes FromHex(std::string_view hex);

// `TYPE dir chan layer : <hex>`
std::string FormatPacketLine(const Packet& packet);

struct PacketLine {
  std::string packet_type;
  Direction direction;
  Channel channel;
  Layer layer;
  Bytes bytes;
};
// Throws std::invalid_argument on malformed input.
PacketLine ParsePacketLine(std::string_view line);

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_PACKET_H_
