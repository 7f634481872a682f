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

// summary.csv rows and the policy comparison built from them.

#ifndef RCSIM_REPORT_H_
#define RCSIM_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rcsim/sim.h"

namespace rcsim {

struct SummaryRow {
  std::string workload;
  std::string policy;
  uint64_t seed = 0;
  double mem_gb_min = 0;
  double used_gb_min = 0;
  double cpu_core_s = 0;
  double e2e_p50 = 0;
  double e2e_p99 = 0;
  double local_frac = 0;
  int recoveries = 0;
};

inline constexpr const char* kSummaryHeader =
    "workload,policy,seed,mem_gb_min,used_gb_min,cpu_core_s,e2e_p50,e2e_p99,local_frac,recoveries";

SummaryRow MakeSummaryRow(const std::string& workload, const RunReport& report);
void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows);
// Throws kConfigError on a malformed file, kIoError when unreadable.
std::vector<SummaryRow> ParseSummaryCsv(std::istream& in, const std::string& source = "summary");
std::vector<SummaryRow> LoadSummaryCsv(const std::filesystem::path& path);

// One policy on one workload against faas-peak, averaged over seeds.
struct SavingsRow {
  std::string workload;
  std::string policy;
  double mem_gb_min = 0;
  double base_mem_gb_min = 0;
  double reduction_pct = 0;  // (base - x) / base * 100
  double e2e_p50 = 0;
  double base_e2e_p50 = 0;
  double speedup = 1;  // base p50 / policy p50
};

inline constexpr const char* kBaselinePolicy = "faas-peak";

// Rows ordered by workload, then policy name. Throws kKeyMismatch when the
// summaries cover different workloads or a workload has no faas-peak row.
std::vector<SavingsRow> Compare(const std::vector<std::vector<SummaryRow>>& summaries);
void WriteSavingsCsv(std::ostream& out, const std::vector<SavingsRow>& rows);
void PrintSavingsTable(std::ostream& out, const std::vector<SavingsRow>& rows);

}  // namespace rcsim

#endif  // RCSIM_REPORT_H_
