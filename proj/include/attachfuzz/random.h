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

#ifndef ATTACHFUZZ_RANDOM_H_
#define ATTACHFUZZ_RANDOM_H_

#include <cstdint>
#include <random>

namespace attachfuzz {

// Seeded random source used by every stochastic decision in the fuzzer.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The std distributions are not (their algorithms are
// implementation-defined), so the mappings to reals and bounded integers are
// done here to keep campaigns byte-identical across toolchains.
class RandomSource {
 public:
  explicit RandomSource(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, bound). `bound` must be non-zero.
  uint64_t Below(uint64_t bound) {
    // Rejection sampling on the largest multiple of `bound`.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; derives independent child seeds from (parent, index).
inline uint64_t MixSeed(uint64_t parent, uint64_t index) {
  uint64_t z = parent + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_RANDOM_H_
