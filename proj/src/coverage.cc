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

#include "attachfuzz/coverage.h"

#include <bit>
#include <stdexcept>
#include <string>

namespace attachfuzz {

int Bucketize(uint64_t hits) {
  if (hits == 0) throw DomainError("absent edges have no bucket");
  if (hits <= 3) return static_cast<int>(hits) - 1;
  if (hits <= 7) return 3;
  if (hits <= 15) return 4;
  if (hits <= 31) return 5;
  if (hits <= 127) return 6;
  return 7;
}

uint64_t CoverageMap::Merge(const EdgeHits& hits) {
  uint64_t added = 0;
  for (const auto& [edge, count] : hits) {
    const uint8_t bit = static_cast<uint8_t>(1u << Bucketize(count));
    uint8_t& seen = buckets_[edge];
    if (!(seen & bit)) {
      seen |= bit;
      ++added;
    }
  }
  total_units_ += added;
  return added;
}

uint64_t CoverageMap::RecountUnits() const {
  uint64_t n = 0;
  for (const auto& [edge, set] : buckets_) n += std::popcount(set);
  return n;
}

uint8_t CoverageMap::BucketsOf(uint64_t edge) const {
  auto it = buckets_.find(edge);
  return it == buckets_.end() ? 0 : it->second;
}

void CoverageMap::Clear() {
  buckets_.clear();
  total_units_ = 0;
}

std::string_view ToString(Component component) {
  return component == Component::kUe ? "UE" : "ENB";
}

std::string_view ToString(FeedbackMode mode) {
  return mode == FeedbackMode::kGrey ? "grey" : "black";
}

FeedbackMode ParseFeedbackMode(std::string_view s) {
  if (s == "grey" || s == "GREY") return FeedbackMode::kGrey;
  if (s == "black" || s == "BLACK") return FeedbackMode::kBlack;
  throw std::invalid_argument("unknown feedback mode: " + std::string(s));
}

Component PeerOf(Direction direction) {
  return direction == Direction::kDownlink ? Component::kEnb : Component::kUe;
}

Component DutOf(Direction direction) {
  return direction == Direction::kDownlink ? Component::kUe : Component::kEnb;
}

Component FeedbackSource(FeedbackMode mode, Direction direction) {
  return mode == FeedbackMode::kGrey ? DutOf(direction) : PeerOf(direction);
}

}  // namespace attachfuzz
