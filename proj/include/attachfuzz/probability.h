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

// Per-field mutation probabilities and their coverage-driven adaptation.
//
// Each field starts at k/|F_P| for its packet type. After iteration i, every
// field mutated during the iteration moves by
//
//   delta = sign(c) * g(i) / n / log2(|V_f| + 1)
//   g(i)  = beta * i / max_i          if c > 0
//           max_i / (beta * i)        otherwise
//
// where c is the new coverage of the iteration and n the number of field
// mutations it made. All probabilities stay within [0.005, 0.90].

#ifndef ATTACHFUZZ_PROBABILITY_H_
#define ATTACHFUZZ_PROBABILITY_H_

#include <cstdint>
#include <map>
#include <ostream>
#include <vector>

#include "attachfuzz/mutation.h"
#include "attachfuzz/packet.h"

namespace attachfuzz {

inline constexpr double kMinProbability = 0.005;
inline constexpr double kMaxProbability = 0.90;

double ClampProbability(double p);

// Iteration schedule. Throws DomainError unless 1 <= i and beta > 0.
double GrowthFactor(int64_t iteration, uint64_t new_coverage, double beta,
                    int64_t max_iterations);

// +1 when new coverage was found, -1 otherwise.
double CoverageSign(uint64_t new_coverage);

// Unclamped probability change for one mutated field.
double ProbabilityIncrement(uint64_t new_coverage, int64_t iteration,
                            double beta, int64_t max_iterations,
                            uint64_t mutated_count, double value_space_size);

struct MutatedField {
  FieldKey key;
  double value_space_size = 0;  // |V_f|
};

// What one iteration mutated. A field mutated in several packets appears
// once per mutation.
struct IterationLedger {
  int64_t iteration = 1;
  std::vector<MutatedField> mutated;
  uint64_t new_coverage = 0;
  uint64_t packets_fuzzed = 0;

  uint64_t MutatedCount() const { return mutated.size(); }
  void Reset(int64_t next_iteration);
};

class ProbabilityTable {
 public:
  ProbabilityTable(double k, double beta, int64_t max_iterations)
      : k_(k), beta_(beta), max_iterations_(max_iterations) {}

  // Adds missing keys of `packet` at clamp(k / |F_P|); existing keys are left
  // alone.
  void Initialize(const Packet& packet);

  bool Contains(const FieldKey& key) const;
  // Throws std::out_of_range for unknown keys.
  double Get(const FieldKey& key) const;
  // Stores `p` as given, without clamping. Test and tooling hook.
  void Set(const FieldKey& key, double p);

  // Applies the adaptation step for `ledger`. No-op when nothing was mutated.
  // Throws StructuralError on |V_f| < 1.
  void Update(const IterationLedger& ledger);

  double k() const { return k_; }
  double beta() const { return beta_; }
  int64_t max_iterations() const { return max_iterations_; }
  const std::map<FieldKey, double>& entries() const { return table_; }

  // CSV rows `iteration,packet_type,field,index,p`.
  void WriteCsv(std::ostream& out, int64_t iteration) const;

 private:
  double k_;
  double beta_;
  int64_t max_iterations_;
  std::map<FieldKey, double> table_;
};

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_PROBABILITY_H_
