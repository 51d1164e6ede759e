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

#include "attachfuzz/packet.h"

#include <bit>
#include <cmath>
#include <sstream>

namespace attachfuzz {

std::string_view ToString(Layer layer) {
  return layer == Layer::kRrc ? "RRC" : "MAC";
}

std::string_view ToString(Direction direction) {
  return direction == Direction::kDownlink ? "DL" : "UL";
}

std::string_view ToString(Channel channel) {
  return channel == Channel::kCcch ? "CCCH" : "DCCH";
}

Layer ParseLayer(std::string_view s) {
  if (s == "RRC") return Layer::kRrc;
  if (s == "MAC") return Layer::kMac;
  throw std::invalid_argument("unknown layer: " + std::string(s));
}

Direction ParseDirection(std::string_view s) {
  if (s == "DL") return Direction::kDownlink;
  if (s == "UL") return Direction::kUplink;
  throw std::invalid_argument("unknown direction: " + std::string(s));
}

Channel ParseChannel(std::string_view s) {
  if (s == "CCCH") return Channel::kCcch;
  if (s == "DCCH") return Channel::kDcch;
  throw std::invalid_argument("unknown channel: " + std::string(s));
}

int Field::Width() const { return std::popcount(mask); }

double Field::ValueSpaceSize() const { return std::ldexp(1.0, Width()); }

uint64_t Field::MaxValue() const {
  const int w = Width();
  return w >= 64 ? UINT64_MAX : (uint64_t{1} << w) - 1;
}

const Field* Packet::FindField(std::string_view name, uint32_t index) const {
  for (const Field& f : fields) {
    if (f.name == name && f.index == index) return &f;
  }
  return nullptr;
}

namespace {

uint64_t LoadBigEndian(std::span<const uint8_t> bytes, uint32_t offset,
                       uint32_t length) {
  uint64_t word = 0;
  for (uint32_t i = 0; i < length; ++i) word = (word << 8) | bytes[offset + i];
  return word;
}

void StoreBigEndian(Bytes& bytes, uint32_t offset, uint32_t length,
                    uint64_t word) {
  for (uint32_t i = length; i-- > 0;) {
    bytes[offset + i] = static_cast<uint8_t>(word & 0xFF);
    word >>= 8;
  }
}

}  // namespace

void CheckField(std::span<const uint8_t> bytes, const Field& field) {
  if (field.length < 1 || field.length > 8) {
    throw StructuralError("field " + field.name + ": length " +
                          std::to_string(field.length) + " not in 1..8");
  }
  if (field.mask == 0) {
    throw StructuralError("field " + field.name + ": empty mask");
  }
  if (field.length < 8 && (field.mask >> (8 * field.length)) != 0) {
    throw StructuralError("field " + field.name + ": mask exceeds span");
  }
  if (uint64_t{field.offset} + field.length > bytes.size()) {
    throw StructuralError("field " + field.name + " at offset " +
                          std::to_string(field.offset) + " exceeds packet of " +
                          std::to_string(bytes.size()) + " bytes");
  }
}

FieldValue ExtractField(std::span<const uint8_t> bytes, const Field& field) {
  CheckField(bytes, field);
  const uint64_t word = LoadBigEndian(bytes, field.offset, field.length);
  // Walk mask bits from most to least significant, appending each one.
  uint64_t value = 0;
  for (int bit = 8 * static_cast<int>(field.length) - 1; bit >= 0; --bit) {
    if ((field.mask >> bit) & 1) value = (value << 1) | ((word >> bit) & 1);
  }
  return FieldValue{value, field.Width()};
}

void ApplyFieldInPlace(Bytes& bytes, const Field& field, uint64_t value) {
  CheckField(bytes, field);
  if (value > field.MaxValue()) {
    throw DomainError("value " + std::to_string(value) +
                      " exceeds capacity of field " + field.name);
  }
  uint64_t word = LoadBigEndian(bytes, field.offset, field.length);
  // Scatter from the least significant value bit upward.
  for (int bit = 0; bit < 8 * static_cast<int>(field.length); ++bit) {
    if (!((field.mask >> bit) & 1)) continue;
    word = (word & ~(uint64_t{1} << bit)) | ((value & 1) << bit);
    value >>= 1;
  }
  StoreBigEndian(bytes, field.offset, field.length, word);
}

Packet ApplyField(Packet packet, const Field& field, uint64_t value) {
  ApplyFieldInPlace(packet.bytes, field, value);
  return packet;
}

std::string ToHex(std::span<const uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Bytes FromHex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw std::invalid_argument("bad hex digit in '" + std::string(hex) +
                                  "'");
    }
    out.push_back(static_cast<uint8_t>(hi << 4 | lo));
  }
  return out;
}

std::string FormatPacketLine(const Packet& packet) {
  std::string line = packet.packet_type;
  line += ' ';
  line += ToString(packet.direction);
  line += ' ';
  line += ToString(packet.channel);
  line += ' ';
  line += ToString(packet.layer);
  line += " : ";
  line += ToHex(packet.bytes);
  return line;
}

PacketLine ParsePacketLine(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string type, dir, chan, layer, colon, hex;
  if (!(in >> type >> dir >> chan >> layer >> colon >> hex) || colon != ":") {
    throw std::invalid_argument("malformed packet line: " + std::string(line));
  }
  std::string extra;
  if (in >> extra) {
    throw std::invalid_argument("trailing data in packet line: " +
                                std::string(line));
  }
  return PacketLine{type, ParseDirection(dir), ParseChannel(chan),
                    ParseLayer(layer), FromHex(hex)};
}

}  // namespace attachfuzz
