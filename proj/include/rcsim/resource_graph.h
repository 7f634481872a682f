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

// The resource graph: a DAG of compute components connected by trigger
// edges, plus data components attached to computes by access edges.
//
// Components of one graph share a single index space. Compute components
// come first, in declaration order, followed by data components. Trigger
// edges are numbered in declaration order; every sink compute additionally
// owns an "exit edge" (numbered after all trigger edges, ascending by sink
// index) that stands for its durably recorded final result. A recovery cut
// can only include a sink once its exit edge has been recorded.

#ifndef RCSIM_RESOURCE_GRAPH_H_
#define RCSIM_RESOURCE_GRAPH_H_

#include <compare>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rcsim/common.h"

namespace rcsim {

// Piecewise-linear function of the scalar input scale, given as a breakpoint
// table. Values are clamped to the end points outside the table.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  explicit PiecewiseLinear(double constant) : points_{{0.0, constant}} {}
  // Breakpoints must have strictly increasing x. Throws kConfigError.
  explicit PiecewiseLinear(std::vector<std::pair<double, double>> points);

  double operator()(double x) const;
  double MinValue() const;
  double MaxValue() const;
  bool empty() const { return points_.empty(); }
  const std::vector<std::pair<double, double>>& points() const { return points_; }

 private:
  std::vector<std::pair<double, double>> points_;
};

struct ComponentId {
  std::string app;
  int index = 0;

  friend auto operator<=>(const ComponentId&, const ComponentId&) = default;
};

struct DataAccess {
  int data = 0;                // graph index of the data component
  PiecewiseLinear volume;      // bytes per instance, by scale
};

struct ComputeSpec {
  ComponentId id;
  std::string name;
  double base_work_cpu_s = 0;  // busy CPU-seconds per instance
  double cpu_util = 1.0;       // fraction of a vCPU one instance keeps busy
  PiecewiseLinear parallelism;
  PiecewiseLinear peak_mem_local;  // bytes per instance
  std::vector<DataAccess> accesses;

  int Parallelism(double scale) const;
  // Local working memory of all instances together.
  Bytes LocalMem(double scale) const;
  // Total busy CPU-seconds of all instances.
  double TotalWork(double scale) const { return base_work_cpu_s * Parallelism(scale); }
  // vCPUs the component can keep busy at once.
  double CpuDemand(double scale) const { return cpu_util * Parallelism(scale); }
  Bytes AccessVolume(const DataAccess& a, double scale) const;
};

struct GrowthEvent {
  double fraction = 0;  // of the first accessor's runtime
  Bytes extra = 0;
};

struct DataSpec {
  ComponentId id;
  std::string name;
  PiecewiseLinear size;  // bytes, by scale
  std::vector<GrowthEvent> growth;

  Bytes Size(double scale) const;
  Bytes PeakSize(double scale) const;
};

struct TriggerEdge {
  int src = 0;
  int dst = 0;
};

struct AppLimit {
  int max_cpu = 0;
  Bytes max_mem = 0;
};

class ResourceGraph {
 public:
  const std::string& app() const { return app_; }
  const AppLimit& app_limit() const { return app_limit_; }

  std::span<const ComputeSpec> computes() const { return computes_; }
  std::span<const DataSpec> datas() const { return datas_; }
  int num_computes() const { return static_cast<int>(computes_.size()); }
  int num_components() const { return static_cast<int>(computes_.size() + datas_.size()); }
  bool IsCompute(int index) const { return index >= 0 && index < num_computes(); }
  bool IsData(int index) const { return index >= num_computes() && index < num_components(); }
  const ComputeSpec& compute(int index) const { return computes_.at(index); }
  const DataSpec& data(int index) const { return datas_.at(index - num_computes()); }
  const std::string& name(int index) const;
  std::optional<int> Find(std::string_view name) const;

  int root() const { return root_; }
  const std::vector<TriggerEdge>& triggers() const { return triggers_; }
  int num_trigger_edges() const { return static_cast<int>(triggers_.size()); }
  // Trigger edges plus one exit edge per sink.
  int num_edges() const { return num_trigger_edges() + static_cast<int>(sinks_.size()); }
  bool IsExitEdge(int edge) const { return edge >= num_trigger_edges(); }
  int EdgeSource(int edge) const;
  // Outgoing edge ids of compute `c`, exit edge included.
  const std::vector<int>& out_edges(int c) const { return out_edges_.at(c); }
  const std::vector<int>& in_edges(int c) const { return in_edges_.at(c); }
  const std::vector<int>& successors(int c) const { return succ_.at(c); }
  const std::vector<int>& predecessors(int c) const { return pred_.at(c); }
  // Compute indices accessing data component `d`, ascending.
  const std::vector<int>& accessors(int d) const { return accessors_.at(d - num_computes()); }
  const std::vector<int>& sinks() const { return sinks_; }

  // Compute ids in trigger order; ties broken by ascending index.
  const std::vector<int>& TopoOrder() const { return topo_; }

 private:
  friend ResourceGraph BuildGraph(const nlohmann::json& spec);

  void Finalize();

  std::string app_;
  AppLimit app_limit_;
  std::vector<ComputeSpec> computes_;
  std::vector<DataSpec> datas_;
  std::vector<TriggerEdge> triggers_;
  int root_ = 0;
  std::vector<int> sinks_;
  std::vector<std::vector<int>> out_edges_, in_edges_, succ_, pred_, accessors_;
  std::vector<int> topo_;
};

// Builds and validates a graph from a workload-spec document. Throws Error
// with kCyclicTriggers, kDanglingAccess, kNoRoot or kConfigError.
ResourceGraph BuildGraph(const nlohmann::json& spec);
ResourceGraph BuildGraphFromText(std::string_view text);
ResourceGraph BuildGraphFromFile(const std::filesystem::path& path);

std::vector<int> TopoOrder(const ResourceGraph& g);

struct GraphCut {
  std::vector<bool> in_prefix;  // indexed by compute id
  std::vector<int> prefix;      // ascending
  std::vector<int> frontier;    // computes outside the prefix whose predecessors are all inside
};

// Maximal downward-closed set of computes whose every edge leaving the set
// (exit edges included) is in `recorded`. `recorded` is indexed by edge id.
GraphCut GraphCutBefore(const ResourceGraph& g, const std::vector<bool>& recorded);
GraphCut GraphCutBefore(const ResourceGraph& g, const std::set<int>& recorded);

}  // namespace rcsim

#endif  // RCSIM_RESOURCE_GRAPH_H_
