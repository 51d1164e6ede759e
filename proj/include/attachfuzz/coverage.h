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

// Edge coverage with AFL-style hit-count buckets.
//
// A coverage unit is a first-seen (edge, bucket) pair. Hit counts are bucketed
// as 1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+.

#ifndef ATTACHFUZZ_COVERAGE_H_
#define ATTACHFUZZ_COVERAGE_H_

#include <cstdint>
#include <string_view>
#include <unordered_map>

#include "attachfuzz/packet.h"

namespace attachfuzz {

inline constexpr int kBucketCount = 8;

// Hit counts of one iteration, keyed by edge id. Present edges have count >= 1.
using EdgeHits = std::unordered_map<uint64_t, uint32_t>;

// Throws DomainError for hits == 0.
int Bucketize(uint64_t hits);

class CoverageMap {
 public:
  // Adds the bucket of every edge in `hits`; returns how many (edge, bucket)
  // pairs were new.
  uint64_t Merge(const EdgeHits& hits);

  uint64_t TotalUnits() const { return total_units_; }
  // Recomputes the unit count from the bucket sets.
  uint64_t RecountUnits() const;
  size_t EdgeCount() const { return buckets_.size(); }
  // Bit b set iff bucket b has been seen for `edge`.
  uint8_t BucketsOf(uint64_t edge) const;
  void Clear();

 private:
  std::unordered_map<uint64_t, uint8_t> buckets_;
  uint64_t total_units_ = 0;
};

enum class Component { kUe, kEnb };
enum class FeedbackMode { kGrey, kBlack };

std::string_view ToString(Component component);
std::string_view ToString(FeedbackMode mode);
FeedbackMode ParseFeedbackMode(std::string_view s);

// The component whose emissions are intercepted (the benign generator).
Component PeerOf(Direction direction);
// The component receiving fuzzed packets.
Component DutOf(Direction direction);
// Grey-box feedback reads the DUT's coverage, black-box the peer's.
Component FeedbackSource(FeedbackMode mode, Direction direction);

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_COVERAGE_H_
