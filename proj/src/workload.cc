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

#include "rcsim/workload.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace rcsim {

namespace {

[[noreturn]] void InvalidPhase(size_t i, const std::string& what) {
  throw Error(ErrorCode::kInvalidPhase, "phase " + std::to_string(i) + ": " + what);
}

nlohmann::json Table(const std::vector<std::pair<double, double>>& pts) {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& [x, y] : pts) t.push_back({x, y});
  return t;
}

}  // namespace

nlohmann::json GenMultiphase(const MultiphaseParams& params) {
  if (params.phases.empty()) throw Error(ErrorCode::kInvalidPhase, "at least one phase is required");
  if (!(params.scale_lo > 0) || params.scale_hi < params.scale_lo) {
    throw Error(ErrorCode::kInvalidPhase, "scale range must satisfy 0 < lo <= hi");
  }
  nlohmann::json computes = nlohmann::json::array();
  nlohmann::json datas = nlohmann::json::array();
  nlohmann::json triggers = nlohmann::json::array();
  int widest = 0;
  double biggest = 0;
  const size_t n = params.phases.size();
  for (size_t i = 0; i < n; ++i) {
    const PhaseParams& ph = params.phases[i];
    if (!(ph.mem_mb > 0)) InvalidPhase(i, "mem_mb must be > 0");
    if (ph.duration_s < 0) InvalidPhase(i, "duration_s must be >= 0");
    if (ph.output_mb < 0) InvalidPhase(i, "output_mb must be >= 0");
    if (ph.mem_mb_at_hi && !(*ph.mem_mb_at_hi > 0)) InvalidPhase(i, "mem_mb_at_hi must be > 0");
    if (ph.output_mb > 0 && i + 1 == n) InvalidPhase(i, "the last phase has no reader for its output");

    nlohmann::json c = {{"id", "p" + std::to_string(i)}, {"base_work_cpu_s", ph.duration_s}};
    double per_instance_lo, per_instance_hi;
    int width;
    if (!ph.parallelism.empty()) {
      double prev = -1;
      width = 0;
      for (const auto& [x, count] : ph.parallelism) {
        if (x <= prev) InvalidPhase(i, "parallelism scales must increase");
        if (count < 1) InvalidPhase(i, "parallelism must be >= 1");
        prev = x;
        width = std::max(width, static_cast<int>(std::llround(count)));
      }
      c["parallelism"] = Table(ph.parallelism);
      per_instance_lo = ph.mem_mb;
      per_instance_hi = ph.mem_mb_at_hi.value_or(ph.mem_mb);
      biggest = std::max(biggest, std::max(per_instance_lo, per_instance_hi) * width);
    } else {
      if (ph.vcpus < 1) InvalidPhase(i, "vcpus must be >= 1");
      width = ph.vcpus;
      c["parallelism"] = ph.vcpus;
      per_instance_lo = ph.mem_mb / ph.vcpus;
      per_instance_hi = ph.mem_mb_at_hi.value_or(ph.mem_mb) / ph.vcpus;
      biggest = std::max(biggest, std::max(ph.mem_mb, ph.mem_mb_at_hi.value_or(0)));
    }
    widest = std::max(widest, width);
    if (per_instance_hi != per_instance_lo && params.scale_hi > params.scale_lo) {
      c["peak_mem_local_mb"] = Table({{params.scale_lo, per_instance_lo}, {params.scale_hi, per_instance_hi}});
    } else {
      c["peak_mem_local_mb"] = per_instance_lo;
    }
    nlohmann::json acc = nlohmann::json::array();
    if (i > 0 && params.phases[i - 1].output_mb > 0) {
      acc.push_back({{"data", "d" + std::to_string(i - 1)},
                     {"volume_mb", params.phases[i - 1].output_mb / width}});
    }
    if (ph.output_mb > 0) {
      acc.push_back({{"data", "d" + std::to_string(i)}, {"volume_mb", ph.output_mb / width}});
      datas.push_back({{"id", "d" + std::to_string(i)}, {"size_mb", ph.output_mb}});
    }
    if (!acc.empty()) c["accesses"] = acc;
    computes.push_back(std::move(c));
    if (i > 0) triggers.push_back({"p" + std::to_string(i - 1), "p" + std::to_string(i)});
  }
  double data_max = 0;
  for (const auto& ph : params.phases) data_max = std::max(data_max, ph.output_mb);
  nlohmann::json spec = {{"app", params.app}, {"computes", computes}, {"datas", datas}, {"triggers", triggers}};
  spec["app_limit"] = {{"max_cpu", params.max_cpu > 0 ? params.max_cpu : widest},
                       {"max_mem_mb", params.max_mem_mb > 0 ? params.max_mem_mb : biggest + 2 * data_max}};
  return spec;
}

namespace {

constexpr std::pair<Distribution, std::string_view> kDistNames[] = {
    {Distribution::kSmall, "small"},
    {Distribution::kLarge, "large"},
    {Distribution::kVarying, "varying"},
    {Distribution::kStable, "stable"},
};

}  // namespace

std::string_view DistributionName(Distribution d) {
  for (const auto& [k, n] : kDistNames) {
    if (k == d) return n;
  }
  return "unknown";
}

Distribution ParseDistribution(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const auto& [k, n] : kDistNames) {
    if (n == lower) return k;
  }
  throw Error(ErrorCode::kConfigError, "unknown distribution '" + std::string(name) + "'");
}

std::vector<double> GenDistribution(Distribution kind, int n, uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> small(std::log(64.0), 0.5);
  std::lognormal_distribution<double> large(std::log(1024.0), 0.5);
  std::lognormal_distribution<double> low_mode(std::log(32.0), 0.3);
  std::lognormal_distribution<double> high_mode(std::log(2048.0), 0.3);
  std::bernoulli_distribution pick_high(0.3);
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    double x = 256;
    switch (kind) {
      case Distribution::kSmall:
        x = small(rng);
        break;
      case Distribution::kLarge:
        x = large(rng);
        break;
      case Distribution::kVarying:
        x = pick_high(rng) ? high_mode(rng) : low_mode(rng);
        break;
      case Distribution::kStable:
        break;
    }
    out.push_back(std::max(1.0, std::round(x)));
  }
  return out;
}

std::vector<TraceRecord> MakeTrace(const std::string& app, const std::vector<double>& scales,
                                   Seconds interval_s) {
  std::vector<TraceRecord> t;
  t.reserve(scales.size());
  for (size_t i = 0; i < scales.size(); ++i) t.push_back({app, interval_s * static_cast<double>(i), scales[i]});
  return t;
}

std::vector<TraceRecord> ParseTraceCsv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kConfigError, source + ": empty trace");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "app,arrival_s,scale") {
    throw Error(ErrorCode::kConfigError, source + ": header must be 'app,arrival_s,scale'");
  }
  std::vector<TraceRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    std::stringstream ss(line);
    std::string app, arrival, scale, extra;
    if (!std::getline(ss, app, ',') || !std::getline(ss, arrival, ',') || !std::getline(ss, scale, ',') ||
        std::getline(ss, extra, ',') || app.empty()) {
      throw Error(ErrorCode::kConfigError, where + ": expected 3 fields");
    }
    TraceRecord r;
    r.app = app;
    try {
      size_t used = 0;
      r.arrival_s = std::stod(arrival, &used);
      if (used != arrival.size()) throw std::invalid_argument("trailing");
      r.scale = std::stod(scale, &used);
      if (used != scale.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfigError, where + ": malformed number");
    }
    if (!(r.arrival_s >= 0) || !(r.scale > 0)) {
      throw Error(ErrorCode::kConfigError, where + ": arrival must be >= 0 and scale > 0");
    }
    if (!out.empty() && r.arrival_s < out.back().arrival_s) {
      throw Error(ErrorCode::kConfigError, where + ": arrival times must be nondecreasing");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TraceRecord> LoadTraceCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return ParseTraceCsv(in, path.string());
}

void WriteTraceCsv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "app,arrival_s,scale\n";
  char buf[64];
  for (const auto& r : trace) {
    out << r.app << ',';
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", r.arrival_s, r.scale);
    out << buf;
  }
}

Workload WorkloadFromJson(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object() || !j.contains("apps") || !j["apps"].is_array() || !j.contains("trace")) {
    throw Error(ErrorCode::kConfigError, "workload bundle needs 'apps' (array) and 'trace'");
  }
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  Workload w;
  for (const auto& a : j["apps"]) {
    if (a.is_string()) {
      w.apps.push_back(BuildGraphFromFile(resolve(a.get<std::string>())));
    } else {
      w.apps.push_back(BuildGraph(a));
    }
    for (size_t i = 0; i + 1 < w.apps.size(); ++i) {
      if (w.apps[i].app() == w.apps.back().app()) {
        throw Error(ErrorCode::kConfigError, "duplicate app '" + w.apps.back().app() + "'");
      }
    }
  }
  const auto& t = j["trace"];
  if (t.is_string()) {
    w.trace = LoadTraceCsv(resolve(t.get<std::string>()));
  } else if (t.is_array()) {
    for (const auto& r : t) {
      TraceRecord rec;
      try {
        rec.app = r.at("app").get<std::string>();
        rec.arrival_s = r.at("arrival_s").get<double>();
        rec.scale = r.value("scale", 1.0);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfigError, std::string("malformed trace record: ") + e.what());
      }
      if (!(rec.arrival_s >= 0) || !(rec.scale > 0)) {
        throw Error(ErrorCode::kConfigError, "trace: arrival must be >= 0 and scale > 0");
      }
      if (!w.trace.empty() && rec.arrival_s < w.trace.back().arrival_s) {
        throw Error(ErrorCode::kConfigError, "trace: arrival times must be nondecreasing");
      }
      w.trace.push_back(std::move(rec));
    }
  } else {
    throw Error(ErrorCode::kConfigError, "'trace' must be a path or an array");
  }
  for (const auto& r : w.trace) w.AppIndex(r.app);
  return w;
}

Workload LoadWorkload(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  // A bare application spec runs once at scale 1.
  if (j.is_object() && j.contains("computes") && !j.contains("apps")) {
    Workload w;
    w.apps.push_back(BuildGraph(j));
    w.trace.push_back({w.apps[0].app(), 0, 1});
    return w;
  }
  return WorkloadFromJson(j, path.parent_path());
}

RunReport ExecuteBaseline(const BaselinePolicy& policy, const Workload& workload, const ClusterConfig& cluster,
                          const SimOptions& base) {
  if (policy.variant == PolicyKind::kAdaptive) {
    throw Error(ErrorCode::kInvalidArgument, "adaptive is not a baseline");
  }
  if (!(policy.migration_gbps > 0)) throw Error(ErrorCode::kInvalidArgument, "migration_gbps must be > 0");
  SimOptions opt = base;
  opt.policy = PolicyConfig::For(policy.variant);
  opt.policy.migration_gbps = policy.migration_gbps;
  return Run(cluster, workload, opt);
}

}  // namespace rcsim
