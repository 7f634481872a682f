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

// Synthetic workload generation, trace files and baseline execution.

#ifndef RCSIM_WORKLOAD_H_
#define RCSIM_WORKLOAD_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rcsim/sim.h"

namespace rcsim {

// One stage of a multi-phase application. At scale_lo a phase keeps `vcpus`
// instances busy for `duration_s` with `mem_mb` of working memory in total.
struct PhaseParams {
  int vcpus = 1;
  double mem_mb = 0;
  Seconds duration_s = 1;
  // Total memory at scale_hi; linear in between. Unset means constant.
  std::optional<double> mem_mb_at_hi;
  // Instance count by scale. When set it replaces `vcpus` and `mem_mb` is
  // per instance.
  std::vector<std::pair<double, double>> parallelism;
  // Output handed to the next phase as a data component.
  double output_mb = 0;
};

struct MultiphaseParams {
  std::string app = "multiphase";
  std::vector<PhaseParams> phases;
  double scale_lo = 1;
  double scale_hi = 1;
  int max_cpu = 0;        // 0: widest phase
  double max_mem_mb = 0;  // 0: largest phase plus its data
};

// Chain of one compute per phase (named p0, p1, ...), with data d<i> written
// by phase i and read by phase i + 1. Throws kInvalidPhase.
nlohmann::json GenMultiphase(const MultiphaseParams& params);

enum class Distribution { kSmall, kLarge, kVarying, kStable };

std::string_view DistributionName(Distribution d);
// Throws kConfigError.
Distribution ParseDistribution(std::string_view name);

// n input scales with the named shape: log-normal around 64 (Small) or 1024
// (Large), a 70/30 mix of modes at 32 and 2048 (Varying), constant 256
// (Stable). Same seed, same sample.
std::vector<double> GenDistribution(Distribution kind, int n, uint64_t seed);

// Arrivals every `interval_s` starting at 0.
std::vector<TraceRecord> MakeTrace(const std::string& app, const std::vector<double>& scales,
                                   Seconds interval_s);

// CSV with header `app,arrival_s,scale`. Throws kConfigError on bad rows or
// decreasing arrivals, kIoError when the file cannot be read or written.
std::vector<TraceRecord> ParseTraceCsv(std::istream& in, const std::string& source = "trace");
std::vector<TraceRecord> LoadTraceCsv(const std::filesystem::path& path);
void WriteTraceCsv(std::ostream& out, const std::vector<TraceRecord>& trace);

// A workload bundle: {"apps": [spec | "path.json", ...], "trace": "path.csv" |
// [{"app", "arrival_s", "scale"}, ...]}. Relative paths resolve against
// `base_dir`.
Workload WorkloadFromJson(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Workload LoadWorkload(const std::filesystem::path& path);

struct BaselinePolicy {
  PolicyKind variant = PolicyKind::kFaasPeak;
  double migration_gbps = 100;  // kMigrationBest only
};

// Runs `workload` under the baseline with the remaining options taken from
// `base`. Throws kInvalidArgument for a non-baseline variant.
RunReport ExecuteBaseline(const BaselinePolicy& policy, const Workload& workload,
                          const ClusterConfig& cluster, const SimOptions& base = {});

}  // namespace rcsim

#endif  // RCSIM_WORKLOAD_H_
