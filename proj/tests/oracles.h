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

// Brute-force reference implementations used only by tests. None of these
// call into the library code they check.

#ifndef RCSIM_TESTS_ORACLES_H_
#define RCSIM_TESTS_ORACLES_H_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "rcsim/resource_graph.h"
#include "rcsim/sizing.h"

namespace rcsim::oracle {

struct SizingAnswer {
  Bytes init = 0;
  Bytes step = 0;
  double objective = 0;
};

// Scans every (init, step) on the lattice. k is the number of whole steps
// added until the allocation strictly exceeds h, found by counting.
inline std::optional<SizingAnswer> ScanSizing(const SizingProblem& p) {
  std::optional<SizingAnswer> best;
  for (Bytes init = 0; init <= p.max_init; init += p.granule) {
    double waste = 0, used = 0;
    for (const auto& h : p.history) {
      waste += static_cast<double>(init > h.peak_mem ? init - h.peak_mem : 0) * h.exec_time;
      used += static_cast<double>(h.peak_mem) * h.exec_time;
    }
    const double ratio = used > 0 ? waste / used : (waste > 0 ? 1e300 : 0.0);
    if (!(ratio < p.thres)) continue;
    for (Bytes step = p.granule; step <= p.max_step; step += p.granule) {
      double wk = 0;
      for (const auto& h : p.history) {
        int64_t k = 0;
        while (init + k * step <= h.peak_mem) ++k;
        wk += h.weight * static_cast<double>(k);
      }
      const double obj = static_cast<double>(init) + p.cost_factor * (static_cast<double>(step) * wk);
      // Near-equal objectives are ties and keep the first point in scan order.
      if (!best || obj < best->objective * (1 - 1e-12)) best = SizingAnswer{init, step, obj};
    }
  }
  return best;
}

struct SubsetAnswer {
  int64_t bandwidth = -1;
  std::vector<int64_t> ids;  // ascending
};

// Maximum-bandwidth subset within the pool over all 2^n subsets.
inline SubsetAnswer EnumerateAggregation(const AggregationProblem& p) {
  const size_t n = p.candidates.size();
  SubsetAnswer best;
  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
    int64_t bw = 0, cpu = 0;
    Bytes mem = 0;
    for (size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      bw += p.candidates[i].bandwidth;
      cpu += p.candidates[i].cpu;
      mem += p.candidates[i].mem;
    }
    if (cpu > p.pool_cpu || mem > p.pool_mem) continue;
    if (bw > best.bandwidth) {
      best.bandwidth = bw;
      best.ids.clear();
      for (size_t i = 0; i < n; ++i) {
        if (mask >> i & 1) best.ids.push_back(p.candidates[i].id);
      }
      std::sort(best.ids.begin(), best.ids.end());
    }
  }
  return best;
}

// Kahn's algorithm with a sorted ready list.
inline std::vector<int> KahnOrder(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> indeg(n, 0);
  for (const auto& [u, v] : edges) ++indeg[v];
  std::vector<int> ready, out;
  for (int i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push_back(i);
  }
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end());
    const int u = *it;
    ready.erase(it);
    out.push_back(u);
    for (const auto& [a, b] : edges) {
      if (a == u && --indeg[b] == 0) ready.push_back(b);
    }
  }
  return out;
}

// Largest downward-closed set whose leaving edges (exit edges of sinks
// included) are all recorded, by enumerating every subset of computes.
// `recorded` is indexed like ResourceGraph edge ids: triggers first, then one
// exit edge per sink in ascending sink order.
inline std::vector<bool> BruteForceCut(int n, const std::vector<std::pair<int, int>>& edges,
                                       const std::vector<bool>& recorded) {
  std::vector<int> sinks;
  for (int u = 0; u < n; ++u) {
    bool has_out = false;
    for (const auto& e : edges) has_out |= e.first == u;
    if (!has_out) sinks.push_back(u);
  }
  std::vector<bool> best(n, false);
  int best_size = -1;
  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
    bool ok = true;
    for (size_t e = 0; e < edges.size() && ok; ++e) {
      const bool in_u = mask >> edges[e].first & 1;
      const bool in_v = mask >> edges[e].second & 1;
      if (in_v && !in_u) ok = false;               // not downward closed
      if (in_u && !in_v && !recorded[e]) ok = false;  // unrecorded leaving edge
    }
    for (size_t s = 0; s < sinks.size() && ok; ++s) {
      if ((mask >> sinks[s] & 1) && !recorded[edges.size() + s]) ok = false;
    }
    if (!ok) continue;
    const int size = __builtin_popcountll(mask);
    if (size > best_size) {
      best_size = size;
      for (int i = 0; i < n; ++i) best[i] = mask >> i & 1;
    }
  }
  return best;
}

// Random DAG over n nodes where node 0 reaches everything: every node i > 0
// gets a parent below it, plus extra forward edges with probability p.
inline std::vector<std::pair<int, int>> RandomRootedDag(int n, double p, std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> parent(0, v - 1);
    const int u = parent(rng);
    edges.emplace_back(u, v);
    for (int w = 0; w < v; ++w) {
      if (w != u && std::bernoulli_distribution(p)(rng)) edges.emplace_back(w, v);
    }
  }
  return edges;
}

}  // namespace rcsim::oracle

#endif  // RCSIM_TESTS_ORACLES_H_
