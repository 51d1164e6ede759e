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

#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "attachfuzz/coverage.h"
#include "gtest/gtest.h"

namespace attachfuzz {
namespace {

// Closed intervals of hit counts, one per bucket.
int OracleBucket(uint64_t hits) {
  static const std::vector<std::pair<uint64_t, uint64_t>> kIntervals = {
      {1, 1}, {2, 2}, {3, 3}, {4, 7}, {8, 15}, {16, 31}, {32, 127},
      {128, UINT64_MAX}};
  for (size_t b = 0; b < kIntervals.size(); ++b) {
    if (hits >= kIntervals[b].first && hits <= kIntervals[b].second) {
      return static_cast<int>(b);
    }
  }
  return -1;
}

TEST(Bucketize, Examples) {
  EXPECT_EQ(Bucketize(7), 3);
  EXPECT_EQ(Bucketize(1), 0);
  EXPECT_EQ(Bucketize(200), 7);
  EXPECT_EQ(Bucketize(UINT64_MAX), 7);
  EXPECT_THROW(Bucketize(0), DomainError);
}

TEST(Bucketize, MatchesIntervalTable) {
  for (uint64_t h = 1; h <= 10000; ++h) {
    ASSERT_EQ(Bucketize(h), OracleBucket(h)) << h;
  }
}

TEST(Bucketize, Monotone) {
  for (uint64_t h = 1; h < 10000; ++h) {
    ASSERT_LE(Bucketize(h), Bucketize(h + 1));
  }
}

TEST(CoverageMap, MergeExamples) {
  CoverageMap m;
  EXPECT_EQ(m.Merge({{1, 1}, {2, 5}}), 2u);
  EXPECT_EQ(m.Merge({{1, 1}, {2, 6}}), 0u);  // 5 and 6 share a bucket
  EXPECT_EQ(m.Merge({{1, 2}}), 1u);
  EXPECT_EQ(m.Merge({{3, 200}}), 1u);
  EXPECT_EQ(m.TotalUnits(), 4u);
  EXPECT_EQ(m.EdgeCount(), 3u);
  EXPECT_EQ(m.BucketsOf(1), 0b11);
  EXPECT_EQ(m.BucketsOf(2), 0b1000);
  EXPECT_EQ(m.BucketsOf(3), 0b10000000);
  EXPECT_EQ(m.BucketsOf(99), 0);
  EXPECT_EQ(m.Merge({}), 0u);
  m.Clear();
  EXPECT_EQ(m.TotalUnits(), 0u);
  EXPECT_EQ(m.EdgeCount(), 0u);
}

TEST(CoverageMap, ZeroHitEntryIsRejected) {
  CoverageMap m;
  EXPECT_THROW(m.Merge({{1, 0}}), DomainError);
  EXPECT_EQ(m.TotalUnits(), 0u);
  EXPECT_EQ(m.EdgeCount(), 0u);
}

// Merging random hit maps: the sum of per-merge gains telescopes to the
// total, the total never falls, and it agrees with a recount and with a
// plain set of (edge, bucket) pairs.
TEST(CoverageMap, TelescopingAndMonotone) {
  std::mt19937_64 rng(21);
  CoverageMap m;
  std::set<std::pair<uint64_t, int>> oracle;
  uint64_t gained = 0;
  for (int round = 0; round < 500; ++round) {
    EdgeHits hits;
    const int edges = rng() % 20;
    for (int e = 0; e < edges; ++e) {
      hits[rng() % 64] = 1 + static_cast<uint32_t>(rng() % 300);
    }
    const uint64_t before = m.TotalUnits();
    const uint64_t got = m.Merge(hits);
    gained += got;
    for (const auto& [edge, h] : hits) oracle.insert({edge, OracleBucket(h)});
    ASSERT_EQ(m.TotalUnits(), before + got);
    ASSERT_EQ(m.TotalUnits(), gained);
    ASSERT_EQ(m.TotalUnits(), oracle.size());
    ASSERT_EQ(m.RecountUnits(), m.TotalUnits());
    ASSERT_LE(m.TotalUnits(), m.EdgeCount() * kBucketCount);
  }
}

TEST(Feedback, SourceMapping) {
  EXPECT_EQ(DutOf(Direction::kDownlink), Component::kUe);
  EXPECT_EQ(PeerOf(Direction::kDownlink), Component::kEnb);
  EXPECT_EQ(DutOf(Direction::kUplink), Component::kEnb);
  EXPECT_EQ(PeerOf(Direction::kUplink), Component::kUe);
  EXPECT_EQ(FeedbackSource(FeedbackMode::kGrey, Direction::kDownlink),
            Component::kUe);
  EXPECT_EQ(FeedbackSource(FeedbackMode::kBlack, Direction::kDownlink),
            Component::kEnb);
  EXPECT_EQ(FeedbackSource(FeedbackMode::kGrey, Direction::kUplink),
            Component::kEnb);
  EXPECT_EQ(FeedbackSource(FeedbackMode::kBlack, Direction::kUplink),
            Component::kUe);
  EXPECT_EQ(ParseFeedbackMode("grey"), FeedbackMode::kGrey);
  EXPECT_EQ(ParseFeedbackMode("black"), FeedbackMode::kBlack);
  EXPECT_THROW(ParseFeedbackMode("white"), std::invalid_argument);
}

}  // namespace
}  // namespace attachfuzz
