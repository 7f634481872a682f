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

// Discrete-event execution of invocations on a cluster.
//
// Events are ordered by (time, sequence number). A compute component moves
// through pending -> launching -> ready -> running -> finished; it becomes
// runnable once every trigger predecessor has finished and starts as soon as
// it is both runnable and ready. Finishing a component atomically records
// its outgoing trigger edges (and its exit edge for sinks), which is what
// failure recovery restarts from.

#ifndef RCSIM_SIM_H_
#define RCSIM_SIM_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rcsim/cluster.h"
#include "rcsim/resource_graph.h"

namespace rcsim {

struct CostModel {
  Seconds cold_start_s = 0.5;
  Seconds warm_start_s = 0.01;
  Seconds conn_setup_s = 0.034;
  Seconds compile_s = 0.2;
  double local_access_s_per_gb = 0.0;
  double remote_eta = 0.8;  // batching efficiency of remote access
  // Remote rate; negative means derive it from the link speed and eta.
  double remote_access_s_per_gb = -1;
  double swap_multiplier = 1.26;  // at 100% overflow, random access
  double swap_multiplier_sequential = 1.01;
  Seconds growth_latency_s = 0.005;  // per memory scale-up step
  Seconds message_latency_s = 0.0002;
  Seconds cpu_sample_period_s = 0.25;
  double cpu_low_watermark = 0.5;
  int cpu_low_samples = 2;

  // Seconds per GB of remote access over a link of `link_gbps`.
  double RemotePerGb(double link_gbps) const;
  static CostModel FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

enum class PolicyKind { kAdaptive, kFaasPeak, kDagFixed, kAlwaysRemote, kMigrationBest };
enum class SizingMode { kHistory, kFixed, kPeak };

std::string_view PolicyName(PolicyKind kind);
// Throws kConfigError on an unknown name.
PolicyKind ParsePolicy(std::string_view name);
std::string_view SizingModeName(SizingMode mode);
SizingMode ParseSizingMode(std::string_view name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kAdaptive;
  SizingMode sizing = SizingMode::kHistory;
  bool continue_in_process = true;
  bool prelaunch = true;
  bool prewarm = true;
  bool autoscale = true;
  int retune_every = 100;  // samples between sizing re-solves
  double cost_factor = 1.0;
  double thres = 0.2;
  double migration_gbps = 100;

  // Defaults for each policy; baselines switch off what they do not model.
  static PolicyConfig For(PolicyKind kind);
  nlohmann::json ToJson() const;
};

struct TraceRecord {
  std::string app;
  Seconds arrival_s = 0;
  double scale = 1.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Workload {
  std::vector<ResourceGraph> apps;
  std::vector<TraceRecord> trace;

  // Index of the application called `name`. Throws kConfigError.
  int AppIndex(std::string_view name) const;
};

// Crashes component `component` of invocation `invocation` (trace index)
// `after_start_s` seconds after each of the first `times` executions start.
struct FailureSpec {
  int64_t invocation = 0;
  std::string component;
  Seconds after_start_s = 0;
  int times = 1;
};

struct SimOptions {
  CostModel cost;
  PolicyConfig policy;
  uint64_t seed = 0;
  double jitter = 0;  // runtimes are scaled by 1 + jitter * U(-1, 1)
  std::vector<FailureSpec> failures;
  bool check_invariants = false;
  std::ostream* event_log = nullptr;
};

struct InvocationReport {
  int64_t id = 0;
  std::string app;
  double scale = 1.0;
  Seconds arrival_s = 0;
  Seconds end_to_end_s = 0;
  double mem_gb_min = 0;
  double mem_used_gb_min = 0;
  double cpu_core_s = 0;
  double cpu_used_core_s = 0;
  double local_access_fraction = 1.0;
  Seconds startup_overhead_s = 0;
  int recoveries = 0;
  double work_completed_cpu_s = 0;
  double reexecuted_cpu_s = 0;
  std::vector<int> executions;  // per compute
  uint64_t output_digest = 0;
};

struct Summary {
  double mean = 0, p50 = 0, p99 = 0;
};

struct RunReport {
  std::string policy;
  uint64_t seed = 0;
  std::vector<InvocationReport> invocations;
  double mem_gb_min = 0;
  double mem_used_gb_min = 0;
  double cpu_core_s = 0;
  double cpu_used_core_s = 0;
  double local_access_fraction = 1.0;  // mean over invocations
  int recoveries = 0;
  Summary end_to_end;
  uint64_t events = 0;
  uint64_t decisions = 0;
  uint64_t compile_misses = 0;
  uint64_t compile_hits = 0;
  uint64_t scale_up_failures = 0;
  uint64_t swap_events = 0;
  Seconds makespan_s = 0;

  nlohmann::json ToJson() const;
};

// Nearest-rank percentiles; p in [0, 100].
double Percentile(std::vector<double> values, double p);

// Busy time of a component given its vCPUs and, per access, the fraction of
// the volume read locally: work / min(vcpus, demand) scaled by the swap
// multiplier, plus access volume at the local or remote rate.
Seconds ComponentRuntime(const ComputeSpec& c, double scale, int vcpus,
                         const std::vector<double>& local_fraction, const CostModel& cost,
                         double link_gbps, double swap_multiplier = 1.0);

// 1 + (swap_multiplier - 1) * overflow / need.
double SwapMultiplier(Bytes overflow, Bytes need, const CostModel& cost);

struct AutoscaleState {
  int low_count = 0;
};

// One utilization sample: +1 vCPU at full utilization (up to `max_vcpus`),
// -1 after `low_samples` consecutive samples below `low_watermark` (never
// below one), otherwise unchanged.
int CpuAutoscaleTick(int vcpus, double util, int max_vcpus, AutoscaleState& state,
                     double low_watermark = 0.5, int low_samples = 2);

// Runs every trace arrival to completion. Throws kDeadlock when work is
// pending but nothing can make progress.
RunReport Run(const ClusterConfig& cluster, const Workload& workload, const SimOptions& options);

}  // namespace rcsim

#endif  // RCSIM_SIM_H_
