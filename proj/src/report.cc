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

#include "rcsim/report.h"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

namespace rcsim {

namespace {

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfigError, where + ": malformed number '" + s + "'");
}

}  // namespace

SummaryRow MakeSummaryRow(const std::string& workload, const RunReport& report) {
  SummaryRow r;
  r.workload = workload;
  r.policy = report.policy;
  r.seed = report.seed;
  r.mem_gb_min = report.mem_gb_min;
  r.used_gb_min = report.mem_used_gb_min;
  r.cpu_core_s = report.cpu_core_s;
  r.e2e_p50 = report.end_to_end.p50;
  r.e2e_p99 = report.end_to_end.p99;
  r.local_frac = report.local_access_fraction;
  r.recoveries = report.recoveries;
  return r;
}

void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.workload << ',' << r.policy << ',' << r.seed << ',' << Fixed(r.mem_gb_min) << ','
        << Fixed(r.used_gb_min) << ',' << Fixed(r.cpu_core_s) << ',' << Fixed(r.e2e_p50) << ','
        << Fixed(r.e2e_p99) << ',' << Fixed(r.local_frac) << ',' << r.recoveries << '\n';
  }
}

std::vector<SummaryRow> ParseSummaryCsv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) {
    throw Error(ErrorCode::kConfigError, source + ": missing summary header");
  }
  std::vector<SummaryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto f = SplitCsv(line);
    if (f.size() != 10) throw Error(ErrorCode::kConfigError, where + ": expected 10 fields");
    SummaryRow r;
    r.workload = f[0];
    r.policy = f[1];
    r.seed = static_cast<uint64_t>(ParseDouble(f[2], where));
    r.mem_gb_min = ParseDouble(f[3], where);
    r.used_gb_min = ParseDouble(f[4], where);
    r.cpu_core_s = ParseDouble(f[5], where);
    r.e2e_p50 = ParseDouble(f[6], where);
    r.e2e_p99 = ParseDouble(f[7], where);
    r.local_frac = ParseDouble(f[8], where);
    r.recoveries = static_cast<int>(ParseDouble(f[9], where));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> LoadSummaryCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return ParseSummaryCsv(in, path.string());
}

std::vector<SavingsRow> Compare(const std::vector<std::vector<SummaryRow>>& summaries) {
  if (summaries.empty()) throw Error(ErrorCode::kInvalidArgument, "no summaries to compare");
  std::optional<std::set<std::string>> keys;
  for (size_t i = 0; i < summaries.size(); ++i) {
    std::set<std::string> k;
    for (const auto& r : summaries[i]) k.insert(r.workload);
    if (keys && *keys != k) {
      throw Error(ErrorCode::kKeyMismatch, "summary " + std::to_string(i) + " covers different workloads");
    }
    keys = std::move(k);
  }
  struct Acc {
    double mem = 0, p50 = 0;
    int n = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (const auto& s : summaries) {
    for (const auto& r : s) {
      Acc& a = acc[{r.workload, r.policy}];
      a.mem += r.mem_gb_min;
      a.p50 += r.e2e_p50;
      ++a.n;
    }
  }
  std::vector<SavingsRow> out;
  for (const auto& w : *keys) {
    auto base = acc.find({w, kBaselinePolicy});
    if (base == acc.end()) throw Error(ErrorCode::kKeyMismatch, "workload '" + w + "' has no faas-peak run");
    const double bm = base->second.mem / base->second.n;
    const double bp = base->second.p50 / base->second.n;
    for (const auto& [key, a] : acc) {
      if (key.first != w) continue;
      SavingsRow r;
      r.workload = w;
      r.policy = key.second;
      r.mem_gb_min = a.mem / a.n;
      r.base_mem_gb_min = bm;
      r.reduction_pct = bm > 0 ? (bm - r.mem_gb_min) / bm * 100.0 : 0.0;
      r.e2e_p50 = a.p50 / a.n;
      r.base_e2e_p50 = bp;
      r.speedup = r.e2e_p50 > 0 ? bp / r.e2e_p50 : 1.0;
      out.push_back(std::move(r));
    }
  }
  return out;
}

void WriteSavingsCsv(std::ostream& out, const std::vector<SavingsRow>& rows) {
  out << "workload,policy,mem_gb_min,base_mem_gb_min,reduction_pct,e2e_p50,base_e2e_p50,speedup\n";
  for (const auto& r : rows) {
    out << r.workload << ',' << r.policy << ',' << Fixed(r.mem_gb_min) << ',' << Fixed(r.base_mem_gb_min) << ','
        << Fixed(r.reduction_pct, 3) << ',' << Fixed(r.e2e_p50) << ',' << Fixed(r.base_e2e_p50) << ','
        << Fixed(r.speedup, 3) << '\n';
  }
}

void PrintSavingsTable(std::ostream& out, const std::vector<SavingsRow>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-24s %-16s %14s %12s %12s %9s\n", "workload", "policy", "GBxmin",
                "reduction%", "e2e_p50_s", "speedup");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-24s %-16s %14.4f %12.1f %12.4f %9.2f\n", r.workload.c_str(),
                  r.policy.c_str(), r.mem_gb_min, r.reduction_pct, r.e2e_p50, r.speedup);
    out << buf;
  }
}

}  // namespace rcsim
