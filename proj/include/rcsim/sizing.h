// Copyright 2026 The rcsim Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Sizing policies: the history-driven (initial, incremental) allocation
// optimizer, the parallel scale-out vCPU rule, and the zero-one programs
// that pick which component pairs to aggregate or split apart.

#ifndef RCSIM_SIZING_H_
#define RCSIM_SIZING_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "rcsim/common.h"
#include "rcsim/history.h"

namespace rcsim {

enum class SizingDimension { kMemory, kCpu };

struct SizingParams {
  Bytes init = 0;
  Bytes step = 0;
  SizingDimension dimension = SizingDimension::kMemory;

  friend bool operator==(const SizingParams&, const SizingParams&) = default;
};

// Fixed-size comparison point: 256 MB initial, 64 MB increments.
inline constexpr SizingParams kFixedSizing{256 * kMiB, 64 * kMiB, SizingDimension::kMemory};

struct SizingProblem {
  std::vector<WeightedPeak> history;
  double cost_factor = 1.0;
  double thres = 0.2;
  Bytes granule = 64 * kMiB;
  Bytes max_init = 63 * 64 * kMiB;
  Bytes max_step = 64 * 64 * kMiB;
};

// Smallest k >= 0 with k * step + init > h.
int64_t IncrementsNeeded(Bytes h, Bytes init, Bytes step);

// init + cost_factor * step * sum_h(weight_h * k_h), summed in history order.
double SizingObjective(const SizingProblem& p, Bytes init, Bytes step);

// sum_h max(init - h, 0) * t_h / sum_h h * t_h.
double WasteRatio(const SizingProblem& p, Bytes init);

// Objectives within this relative distance count as equal.
inline constexpr double kSizingTieTolerance = 1e-12;

// Feasible lattice point minimizing SizingObjective; ties go to smaller init,
// then smaller step. Throws kEmptyHistory, kInvalidArgument, or kInfeasible
// when no lattice point within the caps satisfies the waste bound.
SizingParams SolveSizing(const SizingProblem& p);

// Peak provisioning: init covers the largest observed peak.
SizingParams PeakSizing(const SizingProblem& p);

// Builds a sizing problem on the `granule` lattice. Initial sizes reach one
// granule past the largest peak; steps reach 64 granules.
SizingProblem MakeSizingProblem(const ResourceProfile& profile, double cost_factor, double thres,
                                Bytes granule);

// vCPUs for a component asked to run `requested_parallelism` instances:
// the historical mean utilization scales the request down, never below one.
int SelectParallelVcpus(const ResourceProfile& profile, int requested_parallelism);

struct AggregationCandidate {
  int64_t id = 0;
  int64_t bandwidth = 0;  // bytes/s kept local when selected
  int cpu = 0;
  Bytes mem = 0;
};

struct AggregationProblem {
  std::vector<AggregationCandidate> candidates;
  int pool_cpu = 0;
  Bytes pool_mem = 0;
  // Present for the disaggregation direction.
  std::optional<Resources> min_reclaim;
};

struct AggregationResult {
  std::vector<int64_t> selected;  // candidate ids, ascending
  int64_t bandwidth = 0;
  Resources usage;
  bool exact = true;
  int relax_rounds = 0;  // disaggregation only
  bool best_effort = false;
};

// Candidate counts above this are solved greedily.
inline constexpr size_t kExactAggregationLimit = 28;

// Aggregation: maximize selected bandwidth within the pool. Disaggregation:
// minimize selected bandwidth while freeing at least min_reclaim, relaxing
// the reclaim target by 20% per round for up to 10 rounds before falling
// back to the largest reclaim that fits the pool.
AggregationResult SolveAggregation(const AggregationProblem& p);

}  // namespace rcsim

#endif  // RCSIM_SIZING_H_
