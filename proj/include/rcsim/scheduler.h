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

// Two-level scheduling. The global scheduler keeps a rough per-rack view of
// free memory and routes each invocation to the emptiest rack. A rack
// scheduler owns exact placement inside its rack:
//
//  * an invocation starts on the fitting server with the least free
//    resources when some server can hold the whole application, with a
//    soft mark covering the rest of its expected footprint; otherwise its
//    first component goes to the smallest server that fits it alone;
//  * later components continue in the predecessor's container (resized)
//    or on the same server when it still has room, and fall back to the
//    smallest fitting server with remote access to data left behind;
//  * data growth stays on the data's server when possible, then moves to
//    servers running its accessors, then anywhere.
//
// "Smallest" compares free memory first, then free CPU, then server id.
// Capacity soft-marked by other applications is used only when no server
// fits without it.

#ifndef RCSIM_SCHEDULER_H_
#define RCSIM_SCHEDULER_H_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rcsim/cluster.h"
#include "rcsim/resource_graph.h"

namespace rcsim {

class GlobalScheduler {
 public:
  explicit GlobalScheduler(std::vector<Resources> rack_free);

  // Rack with the most estimated free memory (ties: lowest id) among racks
  // not in `excluded`; the estimate is charged with `footprint`. Throws
  // kClusterFull when every rack is excluded.
  int Route(Resources footprint, const std::vector<bool>& excluded = {});
  // Replaces the estimate with a fresh report from the rack.
  void Report(int rack, Resources free) { estimate_.at(rack) = free; }
  const std::vector<Resources>& estimate() const { return estimate_; }

 private:
  std::vector<Resources> estimate_;
};

// Per-invocation state the rack scheduler reads and updates.
struct InvocationContext {
  int64_t id = 0;
  const ResourceGraph* graph = nullptr;
  double scale = 1.0;
  // Planned size per component index. Data components use cpu = 0.
  std::vector<Resources> size;
  // Live container per compute, or -1.
  std::vector<PhysicalId> container;
  // Live chunks per data component (indexed by component index - num_computes).
  std::vector<std::vector<PhysicalId>> data_chunks;
  // Server each compute last ran on, or -1.
  std::vector<int> last_server;
  bool force_remote = false;
  int home_server = -1;

  static InvocationContext Make(int64_t id, const ResourceGraph& g, double scale);
  const std::string& app() const { return graph->app(); }
  std::vector<PhysicalId>& chunks(int data) { return data_chunks.at(data - graph->num_computes()); }
  const std::vector<PhysicalId>& chunks(int data) const {
    return data_chunks.at(data - graph->num_computes());
  }
};

// Sum of every component's planned size; data counted once.
Resources WholeAppFootprint(const InvocationContext& ctx);
// Largest footprint of any level of the as-soon-as-possible schedule:
// computes at the same trigger depth plus data live across that depth.
Resources PeakConcurrentFootprint(const InvocationContext& ctx);

struct DataPlacement {
  int data = 0;
  int server = 0;
  std::vector<PhysicalId> chunks;
};

struct PlacementDecision {
  ComponentId component;
  int server = -1;
  Resources sized;
  PhysicalId container = -1;
  std::optional<PhysicalId> colocated_with;
  std::vector<std::pair<int, AccessMode>> access_modes;
  std::vector<DataPlacement> new_data;
  double local_fraction = 1.0;  // by access volume
  Resources soft_mark;
  bool used_preemption = false;
  // Set only for layouts mixing local and remote access.
  std::optional<bool> cache_hit;
  std::string layout;
};

struct GrowthDecision {
  int data = 0;
  int server = -1;
  Bytes bytes = 0;
  std::vector<PhysicalId> chunks;
};

struct SchedulerOptions {
  bool continue_in_process = true;
};

class RackScheduler {
 public:
  RackScheduler(int rack, ClusterState& cluster, SchedulerOptions options = {});

  int rack() const { return rack_; }
  const std::vector<int>& servers() const { return cluster_.rack_servers(rack_); }

  // Smallest server in this rack fitting `need` for `app`, and whether
  // other applications' soft marks must be preempted to use it.
  std::optional<std::pair<int, bool>> SmallestFit(Resources need, std::string_view app,
                                                  int exclude = -1) const;

  // Places the root component. nullopt means Insufficient.
  std::optional<PlacementDecision> PlaceInvocation(InvocationContext& ctx);
  // Places compute `comp`. `continue_from` is a finished predecessor's
  // container that may be resized in place; it is released when not reused.
  std::optional<PlacementDecision> PlaceNext(InvocationContext& ctx, int comp,
                                             std::optional<PhysicalId> continue_from = std::nullopt);
  // Adds at least `extra` bytes, rounded up to `step`, to data component
  // `data`. For container swap space pass the compute's index and its server
  // is treated as the current server.
  std::optional<GrowthDecision> PlaceGrowth(InvocationContext& ctx, int data, Bytes extra, Bytes step);

  // Places compute `comp` and its new data on `server` (data spills to other
  // servers only when it does not fit). Used by the migration baseline.
  std::optional<PlacementDecision> PlaceOn(InvocationContext& ctx, int comp, int server);
  // Re-allocates every chunk of live data component `data`, preferring
  // `server`. Returns the bytes moved, or nullopt (data unchanged) on failure.
  std::optional<Bytes> MoveData(InvocationContext& ctx, int data, int server);

  // Access layout of `comp` given where its data currently lives.
  void ResolveAccess(const InvocationContext& ctx, int comp, PlacementDecision& d);

  size_t compile_cache_size() const { return compile_cache_.size(); }

 private:
  std::optional<PhysicalId> AllocContainer(InvocationContext& ctx, int comp, int server, bool preempt);
  // Allocates every not-yet-live data component of `comp`, preferring
  // `server` and choosing what to co-locate by access bandwidth when not
  // everything fits.
  bool PlaceData(InvocationContext& ctx, int comp, int server, PlacementDecision& d);
  // Allocates `bytes` as chunks tagged with component `owner`, on the first
  // server of `order` holding all of it, else chunk by chunk.
  std::optional<std::vector<PhysicalId>> AllocChunks(InvocationContext& ctx, int owner,
                                                     const std::vector<int>& order, Bytes bytes);
  // Rack servers by ascending unmarked free resources.
  std::vector<int> BySmallest(std::string_view app) const;
  // `prefer` first (or last when `avoid_prefer`), then the rest by size.
  std::vector<int> PreferenceOrder(std::string_view app, int prefer, bool avoid_prefer) const;
  void Consume(const InvocationContext& ctx, int server, Resources used);

  int rack_;
  ClusterState& cluster_;
  SchedulerOptions options_;
  std::set<std::pair<std::string, std::string>> compile_cache_;
};

// One component launched ahead of need.
struct PrelaunchItem {
  int component = 0;
  Seconds launch_at = 0;
  Seconds predicted_start = 0;
};

// Just-in-time launch plan. `finish[c]` is the known or predicted finish
// time of compute c (negative when unknown) and `exec_estimate[c]` its
// predicted runtime (negative without history). Walking the graph in trigger
// order, a compute whose predecessors all have a finish time is predicted to
// start at the latest of them; unless `skip[c]`, it is launched `startup_s`
// earlier, never before `now`. Unknown runtimes stop the walk along that path.
std::vector<PrelaunchItem> PlanPrelaunch(const ResourceGraph& g, Seconds now,
                                         std::vector<Seconds> finish,
                                         const std::vector<Seconds>& exec_estimate,
                                         Seconds startup_s, const std::vector<bool>& skip);

}  // namespace rcsim

#endif  // RCSIM_SCHEDULER_H_
