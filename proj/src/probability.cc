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

#include "attachfuzz/probability.h"

#include <algorithm>
#include <cmath>
#include <set>

namespace attachfuzz {

double ClampProbability(double p) {
  return std::clamp(p, kMinProbability, kMaxProbability);
}

double GrowthFactor(int64_t iteration, uint64_t new_coverage, double beta,
                    int64_t max_iterations) {
  if (iteration < 1) throw DomainError("iterations are 1-based");
  if (!(beta > 0)) throw DomainError("beta must be positive");
  if (max_iterations < 1) throw DomainError("max_iterations must be positive");
  const double progress = beta * static_cast<double>(iteration) /
                          static_cast<double>(max_iterations);
  return new_coverage > 0 ? progress : 1.0 / progress;
}

double CoverageSign(uint64_t new_coverage) {
  return new_coverage > 0 ? 1.0 : -1.0;
}

double ProbabilityIncrement(uint64_t new_coverage, int64_t iteration,
                            double beta, int64_t max_iterations,
                            uint64_t mutated_count, double value_space_size) {
  if (mutated_count == 0) throw DomainError("no mutated fields");
  if (!(value_space_size >= 1)) {
    throw StructuralError("field value space below 1");
  }
  const double step =
      CoverageSign(new_coverage) *
      GrowthFactor(iteration, new_coverage, beta, max_iterations) /
      static_cast<double>(mutated_count);
  return step / std::log2(value_space_size + 1);
}

void IterationLedger::Reset(int64_t next_iteration) {
  iteration = next_iteration;
  mutated.clear();
  new_coverage = 0;
  packets_fuzzed = 0;
}

void ProbabilityTable::Initialize(const Packet& packet) {
  if (packet.fields.empty()) return;
  const double p0 =
      ClampProbability(k_ / static_cast<double>(packet.fields.size()));
  for (const Field& f : packet.fields) {
    table_.try_emplace(FieldKey{packet.packet_type, f.name, f.index}, p0);
  }
}

bool ProbabilityTable::Contains(const FieldKey& key) const {
  return table_.contains(key);
}

double ProbabilityTable::Get(const FieldKey& key) const {
  return table_.at(key);
}

void ProbabilityTable::Set(const FieldKey& key, double p) { table_[key] = p; }

void ProbabilityTable::Update(const IterationLedger& ledger) {
  const uint64_t n = ledger.MutatedCount();
  if (n == 0) return;
  // Each distinct key moves once; n still counts every mutation.
  std::set<FieldKey> done;
  for (const MutatedField& m : ledger.mutated) {
    if (!done.insert(m.key).second) continue;
    const double delta =
        ProbabilityIncrement(ledger.new_coverage, ledger.iteration, beta_,
                             max_iterations_, n, m.value_space_size);
    double& p = table_[m.key];
    p = ClampProbability(p + delta);
  }
}

void ProbabilityTable::WriteCsv(std::ostream& out, int64_t iteration) const {
  for (const auto& [key, p] : table_) {
    out << iteration << "," << key.packet_type << "," << key.name << ","
        << key.index << "," << p << "\n";
  }
}

}  // namespace attachfuzz
