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

#include "rcsim/scheduler.h"

#include <algorithm>
#include <tuple>

#include "rcsim/sizing.h"

namespace rcsim {

GlobalScheduler::GlobalScheduler(std::vector<Resources> rack_free) : estimate_(std::move(rack_free)) {
  if (estimate_.empty()) throw Error(ErrorCode::kInvalidArgument, "global scheduler needs a rack");
}

int GlobalScheduler::Route(Resources footprint, const std::vector<bool>& excluded) {
  int best = -1;
  for (int r = 0; r < static_cast<int>(estimate_.size()); ++r) {
    if (r < static_cast<int>(excluded.size()) && excluded[r]) continue;
    if (best < 0 || estimate_[r].mem > estimate_[best].mem) best = r;
  }
  if (best < 0) throw Error(ErrorCode::kClusterFull, "every rack rejected the invocation");
  estimate_[best] -= footprint;
  return best;
}

InvocationContext InvocationContext::Make(int64_t id, const ResourceGraph& g, double scale) {
  InvocationContext ctx;
  ctx.id = id;
  ctx.graph = &g;
  ctx.scale = scale;
  ctx.size.assign(g.num_components(), Resources{});
  ctx.container.assign(g.num_computes(), -1);
  ctx.last_server.assign(g.num_computes(), -1);
  ctx.data_chunks.assign(g.datas().size(), {});
  return ctx;
}

Resources WholeAppFootprint(const InvocationContext& ctx) {
  Resources total;
  for (const auto& r : ctx.size) total += r;
  return total;
}

Resources PeakConcurrentFootprint(const InvocationContext& ctx) {
  const ResourceGraph& g = *ctx.graph;
  std::vector<int> depth(g.num_computes(), 0);
  int max_depth = 0;
  for (int c : g.TopoOrder()) {
    for (int p : g.predecessors(c)) depth[c] = std::max(depth[c], depth[p] + 1);
    max_depth = std::max(max_depth, depth[c]);
  }
  std::vector<Resources> level(max_depth + 1);
  for (int c = 0; c < g.num_computes(); ++c) level[depth[c]] += ctx.size[c];
  for (int d = g.num_computes(); d < g.num_components(); ++d) {
    int lo = max_depth, hi = 0;
    for (int a : g.accessors(d)) {
      lo = std::min(lo, depth[a]);
      hi = std::max(hi, depth[a]);
    }
    for (int l = lo; l <= hi; ++l) level[l] += ctx.size[d];
  }
  Resources peak;
  for (const auto& r : level) {
    peak.cpu = std::max(peak.cpu, r.cpu);
    peak.mem = std::max(peak.mem, r.mem);
  }
  return peak;
}

RackScheduler::RackScheduler(int rack, ClusterState& cluster, SchedulerOptions options)
    : rack_(rack), cluster_(cluster), options_(options) {
  if (rack < 0 || rack >= cluster.num_racks()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown rack " + std::to_string(rack));
  }
}

namespace {

auto SizeKey(Resources free, int id) { return std::make_tuple(free.mem, free.cpu, id); }

}  // namespace

std::optional<std::pair<int, bool>> RackScheduler::SmallestFit(Resources need, std::string_view app,
                                                               int exclude) const {
  for (bool preempt : {false, true}) {
    int best = -1;
    Resources best_free;
    for (int s : servers()) {
      if (s == exclude) continue;
      const Resources f = preempt ? cluster_.FreeResources(s) : cluster_.UnmarkedFree(s, app);
      if (!f.Fits(need)) continue;
      if (best < 0 || SizeKey(f, s) < SizeKey(best_free, best)) {
        best = s;
        best_free = f;
      }
    }
    if (best >= 0) return std::make_pair(best, preempt);
  }
  return std::nullopt;
}

std::vector<int> RackScheduler::BySmallest(std::string_view app) const {
  std::vector<int> order = servers();
  std::vector<std::tuple<Bytes, int, int>> keys;
  keys.reserve(order.size());
  for (int s : order) keys.push_back(SizeKey(cluster_.UnmarkedFree(s, app), s));
  std::sort(keys.begin(), keys.end());
  for (size_t i = 0; i < keys.size(); ++i) order[i] = std::get<2>(keys[i]);
  return order;
}

std::vector<int> RackScheduler::PreferenceOrder(std::string_view app, int prefer, bool avoid_prefer) const {
  std::vector<int> order = BySmallest(app);
  auto it = std::find(order.begin(), order.end(), prefer);
  if (it == order.end()) return order;
  order.erase(it);
  if (avoid_prefer) {
    order.push_back(prefer);
  } else {
    order.insert(order.begin(), prefer);
  }
  return order;
}

void RackScheduler::Consume(const InvocationContext& ctx, int server, Resources used) {
  cluster_.ConsumeSoftMark(server, ctx.id, used);
}

std::optional<PhysicalId> RackScheduler::AllocContainer(InvocationContext& ctx, int comp, int server,
                                                        bool preempt) {
  AllocTag tag;
  tag.component = {ctx.app(), comp};
  tag.invocation = ctx.id;
  tag.kind = PhysicalKind::kContainer;
  auto id = cluster_.TryAlloc(server, ctx.size[comp], preempt, tag);
  if (id) Consume(ctx, server, ctx.size[comp]);
  return id;
}

std::optional<std::vector<PhysicalId>> RackScheduler::AllocChunks(InvocationContext& ctx, int owner,
                                                                  const std::vector<int>& order,
                                                                  Bytes bytes) {
  const Bytes granule = cluster_.config().granule;
  const Bytes cap = cluster_.config().chunk_cap;
  bytes = RoundUp(bytes, granule);
  std::vector<Bytes> pieces;
  for (Bytes left = bytes; left > 0; left -= std::min(left, cap)) pieces.push_back(std::min(left, cap));

  AllocTag tag;
  tag.component = {ctx.app(), owner};
  tag.invocation = ctx.id;
  tag.kind = PhysicalKind::kMemoryChunk;
  std::vector<PhysicalId> out;
  auto rollback = [&] {
    for (PhysicalId id : out) cluster_.Release(id);
    out.clear();
  };
  auto place = [&](int s, Bytes piece, bool preempt) {
    auto id = cluster_.TryAlloc(s, {0, piece}, preempt, tag);
    if (!id) return false;
    Consume(ctx, s, {0, piece});
    out.push_back(*id);
    return true;
  };

  // Whole request on one server when possible.
  for (bool preempt : {false, true}) {
    for (int s : order) {
      const Resources f = preempt ? cluster_.FreeResources(s) : cluster_.UnmarkedFree(s, ctx.app());
      if (f.mem < bytes) continue;
      bool ok = true;
      for (Bytes piece : pieces) ok = ok && place(s, piece, preempt);
      if (ok) return out;
      rollback();
    }
  }
  for (Bytes piece : pieces) {
    bool placed = false;
    for (bool preempt : {false, true}) {
      for (int s : order) {
        if (place(s, piece, preempt)) {
          placed = true;
          break;
        }
      }
      if (placed) break;
    }
    if (!placed) {
      rollback();
      return std::nullopt;
    }
  }
  return out;
}

bool RackScheduler::PlaceData(InvocationContext& ctx, int comp, int server, PlacementDecision& d) {
  const ResourceGraph& g = *ctx.graph;
  std::vector<int> pending;
  for (const auto& a : g.compute(comp).accesses) {
    if (ctx.chunks(a.data).empty() &&
        std::find(pending.begin(), pending.end(), a.data) == pending.end()) {
      pending.push_back(a.data);
    }
  }
  if (pending.empty()) return true;

  const Bytes granule = cluster_.config().granule;
  std::vector<bool> colocate(pending.size(), !ctx.force_remote);
  if (!ctx.force_remote) {
    Bytes total = 0;
    for (int dd : pending) total += RoundUp(ctx.size[dd].mem, granule);
    const Bytes room = cluster_.UnmarkedFree(server, ctx.app()).mem;
    if (total > room) {
      AggregationProblem p;
      p.pool_mem = room;
      for (size_t i = 0; i < pending.size(); ++i) {
        Bytes volume = 0;
        for (const auto& a : g.compute(comp).accesses) {
          if (a.data == pending[i]) volume += g.compute(comp).AccessVolume(a, ctx.scale);
        }
        p.candidates.push_back({static_cast<int64_t>(i), volume, 0, RoundUp(ctx.size[pending[i]].mem, granule)});
      }
      const AggregationResult r = SolveAggregation(p);
      std::fill(colocate.begin(), colocate.end(), false);
      for (int64_t i : r.selected) colocate[i] = true;
    }
  }

  std::vector<DataPlacement> placed;
  for (size_t i = 0; i < pending.size(); ++i) {
    const int dd = pending[i];
    const auto order = colocate[i] ? PreferenceOrder(ctx.app(), server, false)
                                   : PreferenceOrder(ctx.app(), server, true);
    auto chunks = AllocChunks(ctx, dd, order, std::max<Bytes>(ctx.size[dd].mem, granule));
    if (!chunks) {
      for (const auto& p : placed) {
        for (PhysicalId id : p.chunks) cluster_.Release(id);
        ctx.chunks(p.data).clear();
      }
      return false;
    }
    ctx.chunks(dd) = *chunks;
    placed.push_back({dd, cluster_.physical(chunks->front()).server, *chunks});
  }
  d.new_data.insert(d.new_data.end(), placed.begin(), placed.end());
  return true;
}

void RackScheduler::ResolveAccess(const InvocationContext& ctx, int comp, PlacementDecision& d) {
  const ResourceGraph& g = *ctx.graph;
  const ComputeSpec& spec = g.compute(comp);
  d.access_modes.clear();
  d.layout.clear();
  double volume = 0, local_volume = 0;
  bool any_local = false, any_remote = false;
  for (const auto& a : spec.accesses) {
    Bytes total = 0, here = 0;
    for (PhysicalId id : ctx.chunks(a.data)) {
      const auto& pc = cluster_.physical(id);
      total += pc.size.mem;
      if (pc.server == d.server) here += pc.size.mem;
    }
    const double frac = ctx.force_remote || total == 0 ? 0.0 : static_cast<double>(here) / total;
    const AccessMode mode = frac >= 1.0 ? AccessMode::kLocal : AccessMode::kRemote;
    const double v = static_cast<double>(spec.AccessVolume(a, ctx.scale));
    volume += v;
    local_volume += v * frac;
    d.access_modes.emplace_back(a.data, mode);
    d.layout.push_back(mode == AccessMode::kLocal ? 'L' : 'R');
    (mode == AccessMode::kLocal ? any_local : any_remote) = true;
  }
  d.local_fraction = volume > 0 ? local_volume / volume : (any_remote ? 0.0 : 1.0);
  d.cache_hit.reset();
  if (any_local && any_remote) {
    auto key = std::make_pair(ctx.app(), g.name(comp) + ":" + d.layout);
    d.cache_hit = !compile_cache_.insert(std::move(key)).second;
  }
  if (d.container >= 0) cluster_.SetMode(d.container, any_remote ? AccessMode::kRemote : AccessMode::kLocal);
}

std::optional<PlacementDecision> RackScheduler::PlaceInvocation(InvocationContext& ctx) {
  const ResourceGraph& g = *ctx.graph;
  const int root = g.root();
  PlacementDecision d;
  d.component = {ctx.app(), root};
  d.sized = ctx.size[root];

  auto whole = SmallestFit(WholeAppFootprint(ctx), ctx.app());
  auto fit = whole ? whole : SmallestFit(ctx.size[root], ctx.app());
  if (!fit) return std::nullopt;
  auto [server, preempt] = *fit;
  auto container = AllocContainer(ctx, root, server, preempt);
  if (!container) return std::nullopt;
  d.server = server;
  d.container = *container;
  d.used_preemption = preempt;
  if (!PlaceData(ctx, root, server, d)) {
    cluster_.Release(*container);
    return std::nullopt;
  }
  ctx.container[root] = *container;
  ctx.last_server[root] = server;
  ctx.home_server = server;

  if (whole) {
    Resources used = ctx.size[root];
    for (const auto& p : d.new_data) used.mem += ctx.size[p.data].mem;
    const Resources peak = PeakConcurrentFootprint(ctx);
    const Resources mark{std::max(0, peak.cpu - used.cpu), std::max<Bytes>(0, peak.mem - used.mem)};
    if (mark.cpu > 0 || mark.mem > 0) {
      cluster_.AddSoftMark(server, {ctx.app(), ctx.id, mark});
      d.soft_mark = mark;
    }
  }
  ResolveAccess(ctx, root, d);
  return d;
}

std::optional<PlacementDecision> RackScheduler::PlaceNext(InvocationContext& ctx, int comp,
                                                          std::optional<PhysicalId> continue_from) {
  const ResourceGraph& g = *ctx.graph;
  if (!g.IsCompute(comp)) throw Error(ErrorCode::kInvalidArgument, "place_next on a data component");
  PlacementDecision d;
  d.component = {ctx.app(), comp};
  d.sized = ctx.size[comp];
  bool resized = false;
  Resources old_size;

  if (continue_from && options_.continue_in_process && cluster_.IsLive(*continue_from)) {
    const auto& pc = cluster_.physical(*continue_from);
    old_size = pc.size;
    if (cluster_.Resize(*continue_from, ctx.size[comp], false)) {
      resized = true;
      d.server = pc.server;
      d.container = *continue_from;
      d.colocated_with = *continue_from;
      const Resources growth{std::max(0, ctx.size[comp].cpu - old_size.cpu),
                             std::max<Bytes>(0, ctx.size[comp].mem - old_size.mem)};
      Consume(ctx, d.server, growth);
    }
  }
  if (!resized) {
    int prefer = ctx.home_server;
    for (int p : g.predecessors(comp)) {
      if (ctx.last_server[p] >= 0) {
        prefer = ctx.last_server[p];
        break;
      }
    }
    if (continue_from && cluster_.IsLive(*continue_from)) prefer = cluster_.physical(*continue_from).server;
    std::optional<std::pair<int, bool>> fit;
    if (prefer >= 0 && cluster_.server(prefer).rack == rack_ &&
        cluster_.UnmarkedFree(prefer, ctx.app()).Fits(ctx.size[comp])) {
      fit = std::make_pair(prefer, false);
    } else {
      fit = SmallestFit(ctx.size[comp], ctx.app());
    }
    std::optional<PhysicalId> container;
    if (fit) container = AllocContainer(ctx, comp, fit->first, fit->second);
    if (!container) {
      if (continue_from && cluster_.IsLive(*continue_from)) cluster_.Release(*continue_from);
      return std::nullopt;
    }
    d.server = fit->first;
    d.container = *container;
    d.used_preemption = fit->second;
  }

  if (!PlaceData(ctx, comp, d.server, d)) {
    if (resized) {
      cluster_.Resize(d.container, old_size, true);
      cluster_.Release(d.container);
    } else {
      cluster_.Release(d.container);
      if (continue_from && cluster_.IsLive(*continue_from)) cluster_.Release(*continue_from);
    }
    return std::nullopt;
  }
  if (!resized && continue_from && cluster_.IsLive(*continue_from)) cluster_.Release(*continue_from);
  ctx.container[comp] = d.container;
  ctx.last_server[comp] = d.server;
  ResolveAccess(ctx, comp, d);
  return d;
}

std::optional<PlacementDecision> RackScheduler::PlaceOn(InvocationContext& ctx, int comp, int server) {
  PlacementDecision d;
  d.component = {ctx.app(), comp};
  d.sized = ctx.size[comp];
  auto container = AllocContainer(ctx, comp, server, true);
  if (!container) return std::nullopt;
  d.server = server;
  d.container = *container;
  if (!PlaceData(ctx, comp, server, d)) {
    cluster_.Release(*container);
    return std::nullopt;
  }
  ctx.container[comp] = d.container;
  ctx.last_server[comp] = server;
  ResolveAccess(ctx, comp, d);
  return d;
}

std::optional<Bytes> RackScheduler::MoveData(InvocationContext& ctx, int data, int server) {
  auto& live = ctx.chunks(data);
  Bytes bytes = 0;
  for (PhysicalId id : live) bytes += cluster_.physical(id).size.mem;
  if (bytes == 0) return Bytes{0};
  auto moved = AllocChunks(ctx, data, PreferenceOrder(ctx.app(), server, false), bytes);
  if (!moved) return std::nullopt;
  for (PhysicalId id : live) cluster_.Release(id);
  live = *moved;
  return bytes;
}

std::optional<GrowthDecision> RackScheduler::PlaceGrowth(InvocationContext& ctx, int target, Bytes extra,
                                                         Bytes step) {
  const ResourceGraph& g = *ctx.graph;
  if (extra <= 0) throw Error(ErrorCode::kInvalidArgument, "growth must be positive");
  if (step <= 0) step = cluster_.config().granule;
  int current = -1;
  std::vector<int> accessor_servers;
  if (g.IsData(target)) {
    const auto& chunks = ctx.chunks(target);
    if (chunks.empty()) throw Error(ErrorCode::kInvalidArgument, "growth of a data component that is not live");
    current = cluster_.physical(chunks.front()).server;
    for (int a : g.accessors(target)) {
      if (ctx.container[a] >= 0 && cluster_.IsLive(ctx.container[a])) {
        accessor_servers.push_back(cluster_.physical(ctx.container[a]).server);
      }
    }
  } else if (g.IsCompute(target)) {
    if (ctx.container[target] < 0) throw Error(ErrorCode::kInvalidArgument, "swap growth without a container");
    current = cluster_.physical(ctx.container[target]).server;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown component " + std::to_string(target));
  }

  std::vector<int> order{current};
  for (int s : BySmallest(ctx.app())) {
    if (s != current && std::find(accessor_servers.begin(), accessor_servers.end(), s) != accessor_servers.end()) {
      order.push_back(s);
    }
  }
  for (int s : BySmallest(ctx.app())) {
    if (std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
  }

  const Bytes bytes = RoundUp(((extra + step - 1) / step) * step, cluster_.config().granule);
  auto chunks = AllocChunks(ctx, target, order, bytes);
  if (!chunks) return std::nullopt;
  GrowthDecision gd;
  gd.data = target;
  gd.server = cluster_.physical(chunks->front()).server;
  gd.bytes = bytes;
  gd.chunks = *chunks;
  if (g.IsData(target)) {
    auto& live = ctx.chunks(target);
    live.insert(live.end(), chunks->begin(), chunks->end());
  }
  return gd;
}

std::vector<PrelaunchItem> PlanPrelaunch(const ResourceGraph& g, Seconds now, std::vector<Seconds> finish,
                                         const std::vector<Seconds>& exec_estimate, Seconds startup_s,
                                         const std::vector<bool>& skip) {
  std::vector<PrelaunchItem> items;
  for (int c : g.TopoOrder()) {
    if (finish[c] >= 0 || g.predecessors(c).empty() || exec_estimate[c] < 0) continue;
    Seconds start = 0;
    bool known = true;
    for (int p : g.predecessors(c)) {
      if (finish[p] < 0) {
        known = false;
        break;
      }
      start = std::max(start, finish[p]);
    }
    if (!known) continue;
    finish[c] = start + exec_estimate[c];
    if (!skip[c]) items.push_back({c, std::max(now, start - startup_s), start});
  }
  return items;
}

}  // namespace rcsim
