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

#include <bit>
#include <cstdint>
#include <random>
#include <vector>

#include "attachfuzz/packet.h"
#include "gtest/gtest.h"

namespace attachfuzz {
namespace {

Field MakeField(uint32_t offset, uint32_t length, uint64_t mask) {
  return Field{"f", 0, offset, length, mask};
}

// Walks the span bit by bit, most significant first, collecting the bits the
// mask selects.
uint64_t OracleExtract(const Bytes& bytes, const Field& f) {
  uint64_t out = 0;
  const int bits = static_cast<int>(f.length) * 8;
  for (int b = bits - 1; b >= 0; --b) {
    if (!((f.mask >> b) & 1)) continue;
    const int byte = f.offset + (bits - 1 - b) / 8;
    const int bit_in_byte = b % 8;
    out = (out << 1) | ((bytes[byte] >> bit_in_byte) & 1);
  }
  return out;
}

Bytes OracleApply(Bytes bytes, const Field& f, uint64_t value) {
  const int bits = static_cast<int>(f.length) * 8;
  const int width = std::popcount(f.mask);
  int consumed = 0;
  for (int b = bits - 1; b >= 0; --b) {
    if (!((f.mask >> b) & 1)) continue;
    const uint8_t v = (value >> (width - 1 - consumed)) & 1;
    ++consumed;
    const int byte = f.offset + (bits - 1 - b) / 8;
    const int bit_in_byte = b % 8;
    bytes[byte] = static_cast<uint8_t>((bytes[byte] & ~(1u << bit_in_byte)) |
                                       (v << bit_in_byte));
  }
  return bytes;
}

TEST(ExtractField, MaskedNibble) {
  EXPECT_EQ(ExtractField(Bytes{0x2C, 0x91}, MakeField(1, 1, 0x70)).value, 1u);
}

TEST(ExtractField, FullMaskIsIdentity) {
  const FieldValue v = ExtractField(Bytes{0xFF}, MakeField(0, 1, 0xFF));
  EXPECT_EQ(v.value, 255u);
  EXPECT_EQ(v.width_bits, 8);
}

TEST(ExtractField, ZeroBytes) {
  EXPECT_EQ(ExtractField(Bytes{0x00, 0x00}, MakeField(0, 2, 0x0FF0)).value, 0u);
}

TEST(ExtractField, MultiByteIsBigEndian) {
  EXPECT_EQ(ExtractField(Bytes{0x12, 0x34}, MakeField(0, 2, 0xFFFF)).value,
            0x1234u);
  EXPECT_EQ(ExtractField(Bytes{0x12, 0x34}, MakeField(0, 2, 0x0FF0)).value,
            0x23u);
}

TEST(ExtractField, NonContiguousMaskCompacts) {
  // Bits 7 and 0 of 0x81 are both set, bits 6..1 ignored.
  EXPECT_EQ(ExtractField(Bytes{0x81}, MakeField(0, 1, 0x81)).value, 3u);
  EXPECT_EQ(ExtractField(Bytes{0x80}, MakeField(0, 1, 0x81)).value, 2u);
  EXPECT_EQ(ExtractField(Bytes{0x01}, MakeField(0, 1, 0x81)).value, 1u);
}

TEST(ExtractField, StructuralErrors) {
  EXPECT_THROW(ExtractField(Bytes{0x00}, MakeField(1, 1, 0xFF)),
               StructuralError);
  EXPECT_THROW(ExtractField(Bytes{0x00}, MakeField(0, 1, 0x00)),
               StructuralError);
  EXPECT_THROW(ExtractField(Bytes{0x00}, MakeField(0, 1, 0x1FF)),
               StructuralError);
  EXPECT_THROW(ExtractField(Bytes(10, 0), MakeField(0, 9, 0xFF)),
               StructuralError);
}

TEST(ApplyField, SetsOnlyMaskedBits) {
  Bytes b{0x2C, 0x91};
  ApplyFieldInPlace(b, MakeField(1, 1, 0x70), 5);
  EXPECT_EQ(b, (Bytes{0x2C, 0xD1}));
}

TEST(ApplyField, SameValueLeavesBytesUnchanged) {
  const Bytes before{0x2C, 0x91};
  Bytes b = before;
  const Field f = MakeField(1, 1, 0x70);
  ApplyFieldInPlace(b, f, ExtractField(b, f).value);
  EXPECT_EQ(b, before);
}

TEST(ApplyField, RejectsOutOfDomainValue) {
  Bytes b{0x00};
  EXPECT_THROW(ApplyFieldInPlace(b, MakeField(0, 1, 0x0F), 16), DomainError);
}

TEST(FieldValueSpace, PowerOfTwoOfWidth) {
  EXPECT_EQ(MakeField(0, 1, 0x70).ValueSpaceSize(), 8.0);
  EXPECT_EQ(MakeField(0, 4, 0xFFFFFFFF).ValueSpaceSize(), 4294967296.0);
  EXPECT_EQ(MakeField(0, 1, 0x81).MaxValue(), 3u);
}

// Random (bytes, field, value) triples against the bitwise oracle: round
// trip, locality and agreement on both directions.
TEST(FieldProperty, RoundTripAndLocality) {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 1000; ++trial) {
    const uint32_t length = 1 + rng() % 8;
    const uint32_t size = length + rng() % 4;
    const uint32_t offset = rng() % (size - length + 1);
    Bytes bytes(size);
    for (auto& x : bytes) x = static_cast<uint8_t>(rng());
    uint64_t mask = rng();
    if (length < 8) mask &= (uint64_t{1} << (8 * length)) - 1;
    if (mask == 0) mask = 1;
    const Field f = MakeField(offset, length, mask);
    const int width = std::popcount(mask);
    const uint64_t value =
        width == 64 ? rng() : rng() & ((uint64_t{1} << width) - 1);

    ASSERT_EQ(ExtractField(bytes, f).value, OracleExtract(bytes, f));
    Bytes applied = bytes;
    ApplyFieldInPlace(applied, f, value);
    ASSERT_EQ(applied, OracleApply(bytes, f, value));
    ASSERT_EQ(ExtractField(applied, f).value, value);
    for (uint32_t i = 0; i < size; ++i) {
      uint8_t allowed = 0;
      if (i >= offset && i < offset + length) {
        allowed = static_cast<uint8_t>(mask >> (8 * (offset + length - 1 - i)));
      }
      ASSERT_EQ(applied[i] & ~allowed, bytes[i] & ~allowed) << "byte " << i;
    }
  }
}

TEST(Hex, RoundTrip) {
  const Bytes b{0x00, 0x1F, 0xA0, 0xFF};
  EXPECT_EQ(ToHex(b), "001fa0ff");
  EXPECT_EQ(FromHex("001FA0ff"), b);
  EXPECT_THROW(FromHex("abc"), std::invalid_argument);
  EXPECT_THROW(FromHex("zz"), std::invalid_argument);
}

TEST(PacketLine, RoundTrip) {
  Packet p;
  p.bytes = {0x2C, 0x01};
  p.packet_type = "ConnSetup";
  p.direction = Direction::kDownlink;
  p.channel = Channel::kCcch;
  p.layer = Layer::kRrc;
  const PacketLine line = ParsePacketLine(FormatPacketLine(p));
  EXPECT_EQ(line.packet_type, "ConnSetup");
  EXPECT_EQ(line.direction, Direction::kDownlink);
  EXPECT_EQ(line.channel, Channel::kCcch);
  EXPECT_EQ(line.layer, Layer::kRrc);
  EXPECT_EQ(line.bytes, p.bytes);
}

}  // namespace
}  // namespace attachfuzz
