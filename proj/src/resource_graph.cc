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

#include "rcsim/resource_graph.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <queue>
#include <sstream>

namespace rcsim {

using nlohmann::json;

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kCyclicTriggers: return "CyclicTriggers";
    case ErrorCode::kDanglingAccess: return "DanglingAccess";
    case ErrorCode::kNoRoot: return "NoRoot";
    case ErrorCode::kEmptyHistory: return "EmptyHistory";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kInsufficient: return "Insufficient";
    case ErrorCode::kDoubleRelease: return "DoubleRelease";
    case ErrorCode::kUnknownServer: return "UnknownServer";
    case ErrorCode::kClusterFull: return "ClusterFull";
    case ErrorCode::kDeadlock: return "Deadlock";
    case ErrorCode::kInvalidPhase: return "InvalidPhase";
    case ErrorCode::kKeyMismatch: return "KeyMismatch";
  }
  return "Unknown";
}

PiecewiseLinear::PiecewiseLinear(std::vector<std::pair<double, double>> points)
    : points_(std::move(points)) {
  if (points_.empty()) throw Error(ErrorCode::kConfigError, "empty breakpoint table");
  for (size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i].first > points_[i - 1].first)) {
      throw Error(ErrorCode::kConfigError, "breakpoint scales must be strictly increasing");
    }
  }
}

double PiecewiseLinear::operator()(double x) const {
  if (points_.empty()) return 0;
  if (x <= points_.front().first) return points_.front().second;
  if (x >= points_.back().first) return points_.back().second;
  auto hi = std::upper_bound(points_.begin(), points_.end(), x,
                             [](double v, const auto& p) { return v < p.first; });
  auto lo = hi - 1;
  const double t = (x - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

double PiecewiseLinear::MinValue() const {
  double m = points_.empty() ? 0 : points_.front().second;
  for (const auto& [x, y] : points_) m = std::min(m, y);
  return m;
}

double PiecewiseLinear::MaxValue() const {
  double m = points_.empty() ? 0 : points_.front().second;
  for (const auto& [x, y] : points_) m = std::max(m, y);
  return m;
}

int ComputeSpec::Parallelism(double scale) const {
  return std::max<int>(1, static_cast<int>(std::llround(parallelism(scale))));
}

Bytes ComputeSpec::LocalMem(double scale) const {
  return static_cast<Bytes>(std::llround(peak_mem_local(scale))) * Parallelism(scale);
}

Bytes ComputeSpec::AccessVolume(const DataAccess& a, double scale) const {
  return static_cast<Bytes>(std::llround(a.volume(scale))) * Parallelism(scale);
}

Bytes DataSpec::Size(double scale) const {
  return static_cast<Bytes>(std::llround(size(scale)));
}

Bytes DataSpec::PeakSize(double scale) const {
  Bytes total = Size(scale);
  for (const auto& g : growth) total += g.extra;
  return total;
}

const std::string& ResourceGraph::name(int index) const {
  return IsCompute(index) ? compute(index).name : data(index).name;
}

std::optional<int> ResourceGraph::Find(std::string_view name) const {
  for (int i = 0; i < num_components(); ++i) {
    if (this->name(i) == name) return i;
  }
  return std::nullopt;
}

int ResourceGraph::EdgeSource(int edge) const {
  if (edge < num_trigger_edges()) return triggers_.at(edge).src;
  return sinks_.at(edge - num_trigger_edges());
}

namespace {

[[noreturn]] void ConfigError(const std::string& what) {
  throw Error(ErrorCode::kConfigError, what);
}

// A table [[scale, value], ...] scaled by `unit`, or a bare number.
PiecewiseLinear ParseTable(const json& j, double unit, const std::string& what) {
  if (j.is_number()) return PiecewiseLinear(j.get<double>() * unit);
  if (!j.is_array() || j.empty()) ConfigError(what + ": expected number or [[scale, value], ...]");
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
      ConfigError(what + ": malformed breakpoint");
    }
    pts.emplace_back(row[0].get<double>(), row[1].get<double>() * unit);
  }
  return PiecewiseLinear(std::move(pts));
}

const json& Require(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) ConfigError(ctx + ": missing field '" + key + "'");
  return *it;
}

}  // namespace

void ResourceGraph::Finalize() {
  const int nc = num_computes();
  out_edges_.assign(nc, {});
  in_edges_.assign(nc, {});
  succ_.assign(nc, {});
  pred_.assign(nc, {});
  accessors_.assign(datas_.size(), {});

  for (int e = 0; e < num_trigger_edges(); ++e) {
    const auto& t = triggers_[e];
    out_edges_[t.src].push_back(e);
    in_edges_[t.dst].push_back(e);
    succ_[t.src].push_back(t.dst);
    pred_[t.dst].push_back(t.src);
  }
  for (int c = 0; c < nc; ++c) {
    std::sort(succ_[c].begin(), succ_[c].end());
    std::sort(pred_[c].begin(), pred_[c].end());
    if (succ_[c].empty()) sinks_.push_back(c);
    for (const auto& a : computes_[c].accesses) accessors_[a.data - nc].push_back(c);
  }
  for (size_t k = 0; k < sinks_.size(); ++k) {
    out_edges_[sinks_[k]].push_back(num_trigger_edges() + static_cast<int>(k));
  }
  for (auto& acc : accessors_) {
    std::sort(acc.begin(), acc.end());
    acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
  }

  // Kahn's algorithm with a min-heap gives the index tie-break.
  std::vector<int> indeg(nc, 0);
  for (const auto& t : triggers_) ++indeg[t.dst];
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int c = 0; c < nc; ++c) {
    if (indeg[c] == 0) ready.push(c);
  }
  topo_.clear();
  while (!ready.empty()) {
    const int c = ready.top();
    ready.pop();
    topo_.push_back(c);
    for (int s : succ_[c]) {
      if (--indeg[s] == 0) ready.push(s);
    }
  }
  if (static_cast<int>(topo_.size()) != nc) {
    throw Error(ErrorCode::kCyclicTriggers, "trigger edges of '" + app_ + "' contain a cycle");
  }

  std::vector<int> roots;
  for (int c = 0; c < nc; ++c) {
    if (pred_[c].empty()) roots.push_back(c);
  }
  if (roots.size() != 1) {
    throw Error(ErrorCode::kNoRoot, "'" + app_ + "' has " + std::to_string(roots.size()) +
                                        " root compute components, expected exactly one");
  }
  root_ = roots.front();
  for (size_t d = 0; d < datas_.size(); ++d) {
    if (accessors_[d].empty()) {
      ConfigError("data component '" + datas_[d].name + "' has no access edge");
    }
  }
}

ResourceGraph BuildGraph(const json& spec) {
  ResourceGraph g;
  try {
    if (!spec.is_object()) ConfigError("workload spec must be a JSON object");
    g.app_ = Require(spec, "app", "spec").get<std::string>();
    if (g.app_.empty()) ConfigError("app name is empty");
    const std::string ctx = "app '" + g.app_ + "'";

    if (auto it = spec.find("app_limit"); it != spec.end()) {
      g.app_limit_.max_cpu = Require(*it, "max_cpu", ctx + " app_limit").get<int>();
      g.app_limit_.max_mem = MiB(Require(*it, "max_mem_mb", ctx + " app_limit").get<double>());
      if (g.app_limit_.max_cpu < 1 || g.app_limit_.max_mem <= 0) {
        ConfigError(ctx + ": app_limit must be positive");
      }
    } else {
      g.app_limit_ = {1 << 20, Bytes{1} << 50};
    }

    std::map<std::string, int, std::less<>> ids;
    const auto& computes = Require(spec, "computes", ctx);
    const json empty = json::array();
    const auto& datas = spec.contains("datas") ? spec["datas"] : empty;
    if (!computes.is_array() || !datas.is_array()) ConfigError(ctx + ": computes/datas must be arrays");
    if (computes.empty()) ConfigError(ctx + ": no compute components");

    const int nc = static_cast<int>(computes.size());
    for (int i = 0; i < nc; ++i) {
      auto name = Require(computes[i], "id", ctx).get<std::string>();
      if (!ids.emplace(name, i).second) ConfigError(ctx + ": duplicate id '" + name + "'");
    }
    for (int i = 0; i < static_cast<int>(datas.size()); ++i) {
      auto name = Require(datas[i], "id", ctx).get<std::string>();
      if (!ids.emplace(name, nc + i).second) ConfigError(ctx + ": duplicate id '" + name + "'");
    }

    for (int i = 0; i < nc; ++i) {
      const auto& jc = computes[i];
      ComputeSpec c;
      c.id = {g.app_, i};
      c.name = jc["id"].get<std::string>();
      const std::string cctx = ctx + " compute '" + c.name + "'";
      c.base_work_cpu_s = Require(jc, "base_work_cpu_s", cctx).get<double>();
      if (!(c.base_work_cpu_s >= 0)) ConfigError(cctx + ": base_work_cpu_s must be >= 0");
      c.parallelism = jc.contains("parallelism") ? ParseTable(jc["parallelism"], 1.0, cctx)
                                                 : PiecewiseLinear(1.0);
      if (c.parallelism.MinValue() < 1) ConfigError(cctx + ": parallelism must be >= 1");
      c.peak_mem_local = jc.contains("peak_mem_local_mb")
                             ? ParseTable(jc["peak_mem_local_mb"], static_cast<double>(kMiB), cctx)
                             : PiecewiseLinear(0.0);
      if (c.peak_mem_local.MinValue() < 0) ConfigError(cctx + ": peak_mem_local_mb must be >= 0");
      if (jc.contains("cpu_util")) {
        c.cpu_util = jc["cpu_util"].get<double>();
        if (!(c.cpu_util > 0 && c.cpu_util <= 1)) ConfigError(cctx + ": cpu_util must be in (0,1]");
      }
      if (jc.contains("accesses")) {
        for (const auto& ja : jc["accesses"]) {
          const auto target = Require(ja, "data", cctx).get<std::string>();
          auto it = ids.find(target);
          if (it == ids.end() || it->second < nc) {
            throw Error(ErrorCode::kDanglingAccess,
                        cctx + " accesses undefined data component '" + target + "'");
          }
          DataAccess a;
          a.data = it->second;
          a.volume = ja.contains("volume_mb")
                         ? ParseTable(ja["volume_mb"], static_cast<double>(kMiB), cctx)
                         : PiecewiseLinear(0.0);
          if (a.volume.MinValue() < 0) ConfigError(cctx + ": volume_mb must be >= 0");
          for (const auto& prev : c.accesses) {
            if (prev.data == a.data) ConfigError(cctx + ": duplicate access to '" + target + "'");
          }
          c.accesses.push_back(std::move(a));
        }
      }
      g.computes_.push_back(std::move(c));
    }

    for (int i = 0; i < static_cast<int>(datas.size()); ++i) {
      const auto& jd = datas[i];
      DataSpec d;
      d.id = {g.app_, nc + i};
      d.name = jd["id"].get<std::string>();
      const std::string dctx = ctx + " data '" + d.name + "'";
      d.size = ParseTable(Require(jd, "size_mb", dctx), static_cast<double>(kMiB), dctx);
      if (!(d.size.MinValue() > 0)) ConfigError(dctx + ": size_mb must be > 0");
      if (jd.contains("growth")) {
        double last = -1;
        for (const auto& row : jd["growth"]) {
          if (!row.is_array() || row.size() != 2) ConfigError(dctx + ": malformed growth entry");
          GrowthEvent ev{row[0].get<double>(), MiB(row[1].get<double>())};
          if (!(ev.fraction >= 0 && ev.fraction < 1) || !(ev.fraction > last)) {
            ConfigError(dctx + ": growth fractions must be strictly increasing in [0,1)");
          }
          if (ev.extra <= 0) ConfigError(dctx + ": growth bytes must be > 0");
          last = ev.fraction;
          d.growth.push_back(ev);
        }
      }
      g.datas_.push_back(std::move(d));
    }

    std::set<std::pair<int, int>> seen;
    if (spec.contains("triggers")) {
      for (const auto& row : spec["triggers"]) {
        if (!row.is_array() || row.size() != 2) ConfigError(ctx + ": malformed trigger edge");
        const auto src = row[0].get<std::string>();
        const auto dst = row[1].get<std::string>();
        auto s = ids.find(src);
        auto d = ids.find(dst);
        if (s == ids.end() || d == ids.end()) {
          ConfigError(ctx + ": trigger references undefined component");
        }
        if (s->second >= nc || d->second >= nc) {
          ConfigError(ctx + ": trigger edges must connect compute components");
        }
        if (s->second == d->second) {
          throw Error(ErrorCode::kCyclicTriggers, ctx + ": self-trigger on '" + src + "'");
        }
        if (!seen.emplace(s->second, d->second).second) {
          ConfigError(ctx + ": duplicate trigger " + src + "->" + dst);
        }
        g.triggers_.push_back({s->second, d->second});
      }
    }
  } catch (const json::exception& e) {
    ConfigError(std::string("malformed workload spec: ") + e.what());
  }
  g.Finalize();
  return g;
}

ResourceGraph BuildGraphFromText(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    ConfigError(std::string("workload spec does not parse: ") + e.what());
  }
  return BuildGraph(j);
}

ResourceGraph BuildGraphFromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return BuildGraphFromText(ss.str());
}

std::vector<int> TopoOrder(const ResourceGraph& g) { return g.TopoOrder(); }

GraphCut GraphCutBefore(const ResourceGraph& g, const std::vector<bool>& recorded) {
  const int nc = g.num_computes();
  auto is_recorded = [&](int e) { return e < static_cast<int>(recorded.size()) && recorded[e]; };

  // Greatest fixpoint: start from every compute and drop members that either
  // have a predecessor outside the set or an unrecorded edge leaving it. The
  // valid sets are closed under union, so the fixpoint is the unique maximum.
  GraphCut cut;
  cut.in_prefix.assign(nc, true);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int c : g.TopoOrder()) {
      if (!cut.in_prefix[c]) continue;
      bool keep = true;
      for (int p : g.predecessors(c)) {
        if (!cut.in_prefix[p]) keep = false;
      }
      for (int e : g.out_edges(c)) {
        if (is_recorded(e)) continue;
        if (g.IsExitEdge(e) || !cut.in_prefix[g.triggers()[e].dst]) keep = false;
      }
      if (!keep) {
        cut.in_prefix[c] = false;
        changed = true;
      }
    }
  }
  for (int c = 0; c < nc; ++c) {
    if (cut.in_prefix[c]) {
      cut.prefix.push_back(c);
      continue;
    }
    bool ready = true;
    for (int p : g.predecessors(c)) ready = ready && cut.in_prefix[p];
    if (ready) cut.frontier.push_back(c);
  }
  return cut;
}

GraphCut GraphCutBefore(const ResourceGraph& g, const std::set<int>& recorded) {
  std::vector<bool> flags(g.num_edges(), false);
  for (int e : recorded) {
    if (e >= 0 && e < g.num_edges()) flags[e] = true;
  }
  return GraphCutBefore(g, flags);
}

}  // namespace rcsim
