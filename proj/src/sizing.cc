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

#include "rcsim/sizing.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rcsim {

int64_t IncrementsNeeded(Bytes h, Bytes init, Bytes step) {
  if (h < init) return 0;
  return (h - init) / step + 1;
}

double SizingObjective(const SizingProblem& p, Bytes init, Bytes step) {
  double weighted_k = 0;
  for (const auto& hp : p.history) {
    weighted_k += hp.weight * static_cast<double>(IncrementsNeeded(hp.peak_mem, init, step));
  }
  return static_cast<double>(init) + p.cost_factor * (static_cast<double>(step) * weighted_k);
}

double WasteRatio(const SizingProblem& p, Bytes init) {
  double waste = 0;
  double used = 0;
  for (const auto& hp : p.history) {
    waste += static_cast<double>(std::max<Bytes>(init - hp.peak_mem, 0)) * hp.exec_time;
    used += static_cast<double>(hp.peak_mem) * hp.exec_time;
  }
  if (used > 0) return waste / used;
  return waste > 0 ? std::numeric_limits<double>::infinity() : 0.0;
}

namespace {

void Validate(const SizingProblem& p) {
  if (p.history.empty()) throw Error(ErrorCode::kEmptyHistory, "sizing problem has no history");
  if (!(p.cost_factor > 0)) throw Error(ErrorCode::kInvalidArgument, "cost_factor must be > 0");
  if (!(p.thres > 0 && p.thres <= 1)) throw Error(ErrorCode::kInvalidArgument, "thres must be in (0,1]");
  if (p.granule <= 0) throw Error(ErrorCode::kInvalidArgument, "granule must be > 0");
  for (const auto& hp : p.history) {
    if (hp.peak_mem < 0 || hp.exec_time < 0 || hp.weight < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative history entry");
    }
  }
}

}  // namespace

SizingParams SolveSizing(const SizingProblem& p) {
  Validate(p);
  const int64_t init_points = p.max_init < 0 ? 0 : p.max_init / p.granule + 1;
  const int64_t step_points = p.max_step / p.granule;
  if (init_points <= 0 || step_points <= 0) {
    throw Error(ErrorCode::kInfeasible, "empty sizing lattice");
  }
  Bytes max_h = 0;
  for (const auto& hp : p.history) max_h = std::max(max_h, hp.peak_mem);

  bool found = false;
  double best = 0;
  SizingParams best_params;
  for (int64_t i = 0; i < init_points; ++i) {
    const Bytes init = i * p.granule;
    // The waste ratio only grows with init, so the feasible inits form a prefix.
    if (!(WasteRatio(p, init) < p.thres)) break;
    // Every candidate at this init costs at least init.
    if (found && static_cast<double>(init) >= best) break;
    for (int64_t s = 1; s <= step_points; ++s) {
      const Bytes step = s * p.granule;
      const double obj = SizingObjective(p, init, step);
      // Rounding can split exact ties; those keep the earlier point.
      if (!found || obj < best - kSizingTieTolerance * best) {
        found = true;
        best = obj;
        best_params = {init, step, SizingDimension::kMemory};
      }
      // Past this step every peak needs at most one increment, and the
      // objective only grows with the step.
      if (step > max_h - init) break;
    }
  }
  if (!found) throw Error(ErrorCode::kInfeasible, "no lattice point meets the waste bound");
  return best_params;
}

SizingParams PeakSizing(const SizingProblem& p) {
  Bytes max_h = 0;
  for (const auto& hp : p.history) max_h = std::max(max_h, hp.peak_mem);
  return {RoundUp(max_h, p.granule), p.granule, SizingDimension::kMemory};
}

SizingProblem MakeSizingProblem(const ResourceProfile& profile, double cost_factor, double thres,
                                Bytes granule) {
  SizingProblem p;
  p.history = profile.WeightedPeaks();
  p.cost_factor = cost_factor;
  p.thres = thres;
  Bytes max_h = 0;
  for (const auto& hp : p.history) max_h = std::max(max_h, hp.peak_mem);
  p.granule = granule;
  p.max_init = RoundUp(max_h, granule) + granule;
  p.max_step = 64 * granule;
  return p;
}

int SelectParallelVcpus(const ResourceProfile& profile, int requested_parallelism) {
  if (requested_parallelism < 1) {
    throw Error(ErrorCode::kInvalidArgument, "requested parallelism must be >= 1");
  }
  if (profile.empty()) return requested_parallelism;
  // The epsilon keeps exact products such as 10 * 0.5 from rounding up.
  const double want = std::ceil(requested_parallelism * profile.ema_cpu_util() - 1e-9);
  return static_cast<int>(std::clamp<double>(want, 1, requested_parallelism));
}

namespace {

struct Item {
  int64_t id;
  int64_t bw;
  int cpu;
  Bytes mem;
};

class AggregationSearch {
 public:
  AggregationSearch(std::vector<Item> items, int pool_cpu, Bytes pool_mem)
      : items_(std::move(items)), pool_cpu_(pool_cpu), pool_mem_(pool_mem) {
    // Highest bandwidth per unit of normalized footprint first, so the
    // fractional bound below is tight early.
    std::stable_sort(items_.begin(), items_.end(), [&](const Item& a, const Item& b) {
      return Density(a) > Density(b);
    });
    by_cpu_.resize(items_.size());
    std::iota(by_cpu_.begin(), by_cpu_.end(), 0);
    by_mem_ = by_cpu_;
    auto ratio = [&](size_t k, double w) {
      return w > 0 ? static_cast<double>(items_[k].bw) / w : std::numeric_limits<double>::infinity();
    };
    std::stable_sort(by_cpu_.begin(), by_cpu_.end(), [&](size_t a, size_t b) {
      return ratio(a, items_[a].cpu) > ratio(b, items_[b].cpu);
    });
    std::stable_sort(by_mem_.begin(), by_mem_.end(), [&](size_t a, size_t b) {
      return ratio(a, static_cast<double>(items_[a].mem)) > ratio(b, static_cast<double>(items_[b].mem));
    });
    suffix_bw_.assign(items_.size() + 1, 0);
    for (size_t i = items_.size(); i-- > 0;) suffix_bw_[i] = suffix_bw_[i + 1] + items_[i].bw;
  }

  void Run() {
    chosen_.assign(items_.size(), false);
    Dfs(0, 0, 0, 0);
  }

  const std::vector<bool>& best() const { return best_chosen_; }
  const std::vector<Item>& items() const { return items_; }

 private:
  double Density(const Item& it) const {
    const double c = pool_cpu_ > 0 ? static_cast<double>(it.cpu) / pool_cpu_ : (it.cpu > 0 ? 1e9 : 0);
    const double m = pool_mem_ > 0 ? static_cast<double>(it.mem) / pool_mem_ : (it.mem > 0 ? 1e9 : 0);
    return static_cast<double>(it.bw) / (c + m + 1e-12);
  }

  // Upper bound: the smaller of the two single-dimension fractional
  // knapsack relaxations over the items not yet decided.
  double Bound(size_t i, int cpu, Bytes mem) const {
    return std::min(DimBound(by_cpu_, i, static_cast<double>(pool_cpu_ - cpu), true),
                    DimBound(by_mem_, i, static_cast<double>(pool_mem_ - mem), false));
  }

  double DimBound(const std::vector<size_t>& order, size_t i, double cap, bool cpu_dim) const {
    double bound = 0;
    for (size_t k : order) {
      if (k < i) continue;
      const auto& it = items_[k];
      const double w = cpu_dim ? it.cpu : static_cast<double>(it.mem);
      if (w <= cap) {
        bound += static_cast<double>(it.bw);
        cap -= w;
      } else {
        bound += static_cast<double>(it.bw) * cap / w;
        break;
      }
    }
    return bound;
  }

  void Dfs(size_t i, int64_t bw, int cpu, Bytes mem) {
    if (bw > best_bw_ || best_chosen_.empty()) {
      best_bw_ = bw;
      best_chosen_ = chosen_;
    }
    if (i == items_.size()) return;
    if (bw + suffix_bw_[i] <= best_bw_) return;
    if (static_cast<double>(bw) + Bound(i, cpu, mem) < static_cast<double>(best_bw_) + 0.5) return;
    const auto& it = items_[i];
    if (cpu + it.cpu <= pool_cpu_ && mem + it.mem <= pool_mem_) {
      chosen_[i] = true;
      Dfs(i + 1, bw + it.bw, cpu + it.cpu, mem + it.mem);
      chosen_[i] = false;
    }
    Dfs(i + 1, bw, cpu, mem);
  }

  std::vector<Item> items_;
  int pool_cpu_;
  Bytes pool_mem_;
  std::vector<size_t> by_cpu_, by_mem_;
  std::vector<int64_t> suffix_bw_;
  std::vector<bool> chosen_;
  std::vector<bool> best_chosen_;
  int64_t best_bw_ = -1;
};

AggregationResult Finish(const std::vector<Item>& items, const std::vector<bool>& chosen) {
  AggregationResult r;
  for (size_t i = 0; i < items.size(); ++i) {
    if (!chosen[i]) continue;
    r.selected.push_back(items[i].id);
    r.bandwidth += items[i].bw;
    r.usage += Resources{items[i].cpu, items[i].mem};
  }
  std::sort(r.selected.begin(), r.selected.end());
  return r;
}

AggregationResult Aggregate(const std::vector<Item>& items, int pool_cpu, Bytes pool_mem) {
  if (items.size() <= kExactAggregationLimit) {
    AggregationSearch search(items, pool_cpu, pool_mem);
    search.Run();
    return Finish(search.items(), search.best());
  }
  // Greedy by density for large instances.
  AggregationSearch order(items, pool_cpu, pool_mem);
  const auto& sorted = order.items();
  std::vector<bool> chosen(sorted.size(), false);
  int cpu = 0;
  Bytes mem = 0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (cpu + sorted[i].cpu <= pool_cpu && mem + sorted[i].mem <= pool_mem) {
      chosen[i] = true;
      cpu += sorted[i].cpu;
      mem += sorted[i].mem;
    }
  }
  auto r = Finish(sorted, chosen);
  r.exact = false;
  return r;
}

// Minimum-bandwidth subset freeing at least (need_cpu, need_mem) and fitting
// the destination pool. Returns nullopt when no such subset exists.
std::optional<std::vector<bool>> Disaggregate(const std::vector<Item>& items, double need_cpu,
                                              double need_mem, int pool_cpu, Bytes pool_mem,
                                              bool* exact) {
  const size_t n = items.size();
  if (n > kExactAggregationLimit) {
    // Greedy: cheapest bandwidth per freed byte first until the target is met.
    *exact = false;
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      const double da = static_cast<double>(items[a].bw) / (static_cast<double>(items[a].mem) + 1);
      const double db = static_cast<double>(items[b].bw) / (static_cast<double>(items[b].mem) + 1);
      return da < db;
    });
    std::vector<bool> chosen(n, false);
    int cpu = 0;
    Bytes mem = 0;
    for (size_t i : order) {
      if (cpu >= need_cpu && static_cast<double>(mem) >= need_mem) break;
      if (cpu + items[i].cpu > pool_cpu || mem + items[i].mem > pool_mem) continue;
      chosen[i] = true;
      cpu += items[i].cpu;
      mem += items[i].mem;
    }
    if (cpu >= need_cpu && static_cast<double>(mem) >= need_mem) return chosen;
    return std::nullopt;
  }

  *exact = true;
  std::vector<int> suffix_cpu(n + 1, 0);
  std::vector<Bytes> suffix_mem(n + 1, 0);
  for (size_t i = n; i-- > 0;) {
    suffix_cpu[i] = suffix_cpu[i + 1] + items[i].cpu;
    suffix_mem[i] = suffix_mem[i + 1] + items[i].mem;
  }
  std::vector<bool> chosen(n, false);
  std::optional<std::vector<bool>> best;
  int64_t best_bw = 0;
  auto dfs = [&](auto&& self, size_t i, int64_t bw, int cpu, Bytes mem) -> void {
    if (best && bw >= best_bw) return;
    if (cpu >= need_cpu && static_cast<double>(mem) >= need_mem) {
      best = chosen;
      best_bw = bw;
      return;
    }
    if (i == n) return;
    if (cpu + suffix_cpu[i] < need_cpu || static_cast<double>(mem + suffix_mem[i]) < need_mem) return;
    if (cpu + items[i].cpu <= pool_cpu && mem + items[i].mem <= pool_mem) {
      chosen[i] = true;
      self(self, i + 1, bw + items[i].bw, cpu + items[i].cpu, mem + items[i].mem);
      chosen[i] = false;
    }
    self(self, i + 1, bw, cpu, mem);
  };
  dfs(dfs, 0, 0, 0, 0);
  return best;
}

}  // namespace

AggregationResult SolveAggregation(const AggregationProblem& p) {
  if (p.pool_cpu < 0 || p.pool_mem < 0) {
    throw Error(ErrorCode::kInvalidArgument, "pool capacities must be >= 0");
  }
  std::vector<Item> items;
  items.reserve(p.candidates.size());
  for (const auto& c : p.candidates) {
    if (c.bandwidth < 0 || c.cpu < 0 || c.mem < 0) {
      throw Error(ErrorCode::kInvalidArgument, "aggregation candidate with negative field");
    }
    items.push_back({c.id, c.bandwidth, c.cpu, c.mem});
  }
  if (!p.min_reclaim) return Aggregate(items, p.pool_cpu, p.pool_mem);

  double need_cpu = p.min_reclaim->cpu;
  double need_mem = static_cast<double>(p.min_reclaim->mem);
  for (int round = 0; round <= 10; ++round) {
    bool exact = true;
    if (auto chosen = Disaggregate(items, need_cpu, need_mem, p.pool_cpu, p.pool_mem, &exact)) {
      auto r = Finish(items, *chosen);
      r.exact = exact;
      r.relax_rounds = round;
      return r;
    }
    need_cpu *= 0.8;
    need_mem *= 0.8;
  }
  // Best effort: reclaim as much memory as the pool accepts, biggest first.
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return items[a].mem > items[b].mem; });
  std::vector<bool> chosen(items.size(), false);
  int cpu = 0;
  Bytes mem = 0;
  for (size_t i : order) {
    if (cpu + items[i].cpu <= p.pool_cpu && mem + items[i].mem <= p.pool_mem) {
      chosen[i] = true;
      cpu += items[i].cpu;
      mem += items[i].mem;
    }
  }
  auto r = Finish(items, chosen);
  r.exact = false;
  r.relax_rounds = 10;
  r.best_effort = true;
  return r;
}

}  // namespace rcsim
