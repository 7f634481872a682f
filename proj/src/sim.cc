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

#include "rcsim/sim.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <queue>
#include <random>

#include <spdlog/spdlog.h>

#include "rcsim/history.h"
#include "rcsim/scheduler.h"
#include "rcsim/sizing.h"

namespace rcsim {

double CostModel::RemotePerGb(double link_gbps) const {
  if (remote_access_s_per_gb >= 0) return remote_access_s_per_gb;
  return 8.0 / (link_gbps * remote_eta);
}

CostModel CostModel::FromJson(const nlohmann::json& j) {
  CostModel c;
  try {
    c.cold_start_s = j.value("cold_start_s", c.cold_start_s);
    c.warm_start_s = j.value("warm_start_s", c.warm_start_s);
    c.conn_setup_s = j.value("conn_setup_s", c.conn_setup_s);
    c.compile_s = j.value("compile_s", c.compile_s);
    c.local_access_s_per_gb = j.value("local_access_s_per_gb", c.local_access_s_per_gb);
    c.remote_eta = j.value("remote_eta", c.remote_eta);
    c.remote_access_s_per_gb = j.value("remote_access_s_per_gb", c.remote_access_s_per_gb);
    c.swap_multiplier = j.value("swap_multiplier", c.swap_multiplier);
    c.swap_multiplier_sequential = j.value("swap_multiplier_sequential", c.swap_multiplier_sequential);
    c.growth_latency_s = j.value("growth_latency_s", c.growth_latency_s);
    c.message_latency_s = j.value("message_latency_s", c.message_latency_s);
    c.cpu_sample_period_s = j.value("cpu_sample_period_s", c.cpu_sample_period_s);
    c.cpu_low_watermark = j.value("cpu_low_watermark", c.cpu_low_watermark);
    c.cpu_low_samples = j.value("cpu_low_samples", c.cpu_low_samples);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("malformed cost model: ") + e.what());
  }
  for (double v : {c.cold_start_s, c.warm_start_s, c.conn_setup_s, c.compile_s, c.local_access_s_per_gb,
                   c.growth_latency_s, c.message_latency_s}) {
    if (v < 0) throw Error(ErrorCode::kConfigError, "latencies must be >= 0");
  }
  if (!(c.remote_eta > 0 && c.remote_eta <= 1)) throw Error(ErrorCode::kConfigError, "remote_eta must be in (0, 1]");
  if (c.remote_access_s_per_gb >= 0 && c.remote_access_s_per_gb < c.local_access_s_per_gb) {
    throw Error(ErrorCode::kConfigError, "remote access must not be cheaper than local access");
  }
  if (c.swap_multiplier < 1 || !(c.cpu_sample_period_s > 0) || c.cpu_low_samples < 1) {
    throw Error(ErrorCode::kConfigError, "invalid swap or autoscale setting");
  }
  return c;
}

nlohmann::json CostModel::ToJson() const {
  return {{"cold_start_s", cold_start_s},
          {"warm_start_s", warm_start_s},
          {"conn_setup_s", conn_setup_s},
          {"compile_s", compile_s},
          {"local_access_s_per_gb", local_access_s_per_gb},
          {"remote_eta", remote_eta},
          {"remote_access_s_per_gb", remote_access_s_per_gb},
          {"swap_multiplier", swap_multiplier},
          {"swap_multiplier_sequential", swap_multiplier_sequential},
          {"growth_latency_s", growth_latency_s},
          {"message_latency_s", message_latency_s},
          {"cpu_sample_period_s", cpu_sample_period_s},
          {"cpu_low_watermark", cpu_low_watermark},
          {"cpu_low_samples", cpu_low_samples}};
}

namespace {

constexpr std::pair<PolicyKind, std::string_view> kPolicyNames[] = {
    {PolicyKind::kAdaptive, "adaptive"},
    {PolicyKind::kFaasPeak, "faas-peak"},
    {PolicyKind::kDagFixed, "dag-fixed"},
    {PolicyKind::kAlwaysRemote, "always-remote"},
    {PolicyKind::kMigrationBest, "migration-best"},
};

constexpr std::pair<SizingMode, std::string_view> kSizingNames[] = {
    {SizingMode::kHistory, "history"},
    {SizingMode::kFixed, "fixed"},
    {SizingMode::kPeak, "peak"},
};

}  // namespace

std::string_view PolicyName(PolicyKind kind) {
  for (const auto& [k, n] : kPolicyNames) {
    if (k == kind) return n;
  }
  return "unknown";
}

PolicyKind ParsePolicy(std::string_view name) {
  for (const auto& [k, n] : kPolicyNames) {
    if (n == name) return k;
  }
  throw Error(ErrorCode::kConfigError, "unknown policy '" + std::string(name) + "'");
}

std::string_view SizingModeName(SizingMode mode) {
  for (const auto& [k, n] : kSizingNames) {
    if (k == mode) return n;
  }
  return "unknown";
}

SizingMode ParseSizingMode(std::string_view name) {
  for (const auto& [k, n] : kSizingNames) {
    if (n == name) return k;
  }
  throw Error(ErrorCode::kConfigError, "unknown sizing mode '" + std::string(name) + "'");
}

PolicyConfig PolicyConfig::For(PolicyKind kind) {
  PolicyConfig p;
  p.kind = kind;
  switch (kind) {
    case PolicyKind::kAdaptive:
    case PolicyKind::kAlwaysRemote:
      break;
    case PolicyKind::kFaasPeak:
      p.continue_in_process = false;
      p.prelaunch = false;
      p.autoscale = false;
      break;
    case PolicyKind::kDagFixed:
      p.continue_in_process = false;
      p.prelaunch = false;
      p.autoscale = false;
      break;
    case PolicyKind::kMigrationBest:
      p.prelaunch = false;
      break;
  }
  return p;
}

nlohmann::json PolicyConfig::ToJson() const {
  return {{"kind", PolicyName(kind)},
          {"sizing", SizingModeName(sizing)},
          {"continue_in_process", continue_in_process},
          {"prelaunch", prelaunch},
          {"prewarm", prewarm},
          {"autoscale", autoscale},
          {"retune_every", retune_every},
          {"cost_factor", cost_factor},
          {"thres", thres},
          {"migration_gbps", migration_gbps}};
}

int Workload::AppIndex(std::string_view name) const {
  for (size_t i = 0; i < apps.size(); ++i) {
    if (apps[i].app() == name) return static_cast<int>(i);
  }
  throw Error(ErrorCode::kConfigError, "trace references unknown app '" + std::string(name) + "'");
}

double Percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(values.size()));
  const size_t idx = static_cast<size_t>(std::clamp<double>(rank, 1, static_cast<double>(values.size()))) - 1;
  return values[idx];
}

namespace {

double AccessSeconds(const ComputeSpec& c, double scale, const std::vector<double>& local_fraction,
                     const CostModel& cost, double link_gbps) {
  const double remote = cost.RemotePerGb(link_gbps);
  double s = 0;
  for (size_t i = 0; i < c.accesses.size(); ++i) {
    const double gb = ToGiB(c.AccessVolume(c.accesses[i], scale));
    const double f = i < local_fraction.size() ? local_fraction[i] : 1.0;
    s += gb * (f * cost.local_access_s_per_gb + (1 - f) * remote);
  }
  return s;
}

}  // namespace

Seconds ComponentRuntime(const ComputeSpec& c, double scale, int vcpus,
                         const std::vector<double>& local_fraction, const CostModel& cost, double link_gbps,
                         double swap_multiplier) {
  const double work = c.TotalWork(scale);
  const double rate = std::min<double>(vcpus, c.CpuDemand(scale));
  const double cpu_s = work > 0 ? work * swap_multiplier / rate : 0.0;
  return cpu_s + AccessSeconds(c, scale, local_fraction, cost, link_gbps);
}

double SwapMultiplier(Bytes overflow, Bytes need, const CostModel& cost) {
  if (need <= 0 || overflow <= 0) return 1.0;
  const double f = std::min(1.0, static_cast<double>(overflow) / static_cast<double>(need));
  return 1.0 + (cost.swap_multiplier - 1.0) * f;
}

int CpuAutoscaleTick(int vcpus, double util, int max_vcpus, AutoscaleState& state, double low_watermark,
                     int low_samples) {
  if (util >= 1.0) {
    state.low_count = 0;
    return std::min(vcpus + 1, std::max(vcpus, max_vcpus));
  }
  if (util < low_watermark) {
    if (++state.low_count >= low_samples) {
      state.low_count = 0;
      return std::max(1, vcpus - 1);
    }
    return vcpus;
  }
  state.low_count = 0;
  return vcpus;
}

namespace {

constexpr double kByteSecondsPerGbMin = static_cast<double>(kGiB) * 60.0;

enum class EventKind {
  kArrival,
  kPrelaunch,
  kPrelaunchDone,
  kComponentFinish,
  kGrowth,
  kGrowStep,
  kCpuSample,
  kConnSetupDone,
  kFailure,
  kRecoveryRestart,
};

struct Event {
  Seconds t;
  uint64_t seq;
  EventKind kind;
  int64_t inv;
  int comp;
  uint64_t token;
  int aux;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.t != b.t ? a.t > b.t : a.seq > b.seq;
  }
};

enum class CompState { kPending, kLaunching, kReady, kRunning, kFinished };

struct CompRun {
  CompState state = CompState::kPending;
  uint64_t exec = 0;   // bumped on reset; guards placement-era events
  uint64_t epoch = 0;  // bumped on rate changes; guards finish and samples
  bool runnable = false;
  bool prelaunch_planned = false;
  Seconds runnable_at = 0;
  Seconds ready_at = 0;
  Seconds start_at = 0;
  Seconds finish_at = -1;
  // Set while running.
  int vcpus = 0;
  double demand = 0;
  double work = 0;  // CPU-seconds, swap and jitter applied
  double access_s = 0;
  double progress = 0;
  Seconds phase_start = 0;
  Seconds last_change = 0;
  double busy = 0;  // integral of min(vcpus, demand)
  double peak_rate = 0;
  Bytes need = 0;
  double stall_used = 0;  // byte-seconds held while waiting for growth
  bool growing = false;   // phase_start is the last growth step while set
  double swap = 1.0;
  std::vector<PhysicalId> swap_chunks;
  AutoscaleState autoscale;
  int failures_fired = 0;

  double rate() const { return std::min<double>(vcpus, demand); }
  double total() const { return (work > 0 ? work / rate() : 0.0) + access_s; }
  // Memory in use from start until `now` with `held` bytes after growth.
  double UsedByteSeconds(Seconds now, Bytes held) const {
    return stall_used + static_cast<double>(std::min(need, held)) * std::max(0.0, now - phase_start);
  }
};

struct DataRun {
  bool started = false;
  uint64_t epoch = 0;
  Seconds since = 0;
  Bytes logical = 0;
  Bytes alloc = 0;
};

struct CompHistory {
  ResourceProfile profile;
  std::optional<SizingParams> params;
  int64_t tuned_at = 0;
};

struct Inv {
  int64_t id = 0;
  int app = 0;
  const ResourceGraph* g = nullptr;
  double scale = 1;
  Seconds arrival = 0;
  InvocationContext ctx;
  int rack = -1;
  std::vector<bool> excluded;
  bool placed = false;
  bool done = false;
  bool warm_root = false;
  std::vector<CompRun> comps;
  std::vector<DataRun> datas;
  std::vector<Bytes> inits;
  std::vector<Bytes> steps;
  std::vector<bool> recorded;
  std::vector<uint64_t> out;
  int finished = 0;
  int seq_next = 0;  // faas-peak: position in trigger order
  PhysicalId shared = -1;
  int live_cpu = 0;
  double alloc_byte_s = 0;
  double used_byte_s = 0;
  double alloc_core_s = 0;
  double volume = 0;
  double local_volume = 0;
  InvocationReport rep;

  DataRun& data(int d) { return datas[d - g->num_computes()]; }
};

uint64_t Fnv(uint64_t h, const void* p, size_t n) {
  const auto* b = static_cast<const unsigned char*>(p);
  for (size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 1099511628211ULL;
  }
  return h;
}

class Simulator {
 public:
  Simulator(const ClusterConfig& config, const Workload& workload, const SimOptions& options)
      : workload_(workload),
        opt_(options),
        pol_(options.policy),
        cost_(options.cost),
        cluster_(config),
        global_(RackFreeAll()),
        rng_(options.seed) {
    cluster_.set_check_invariants(options.check_invariants);
    cluster_.set_listener([this](const PhysicalComponent& pc, Resources old_size, Resources new_size) {
      OnResize(pc, old_size, new_size);
    });
    SchedulerOptions so;
    so.continue_in_process = pol_.continue_in_process;
    for (int r = 0; r < cluster_.num_racks(); ++r) racks_.emplace_back(r, cluster_, so);
    history_.resize(workload_.apps.size());
    for (size_t a = 0; a < workload_.apps.size(); ++a) history_[a].resize(workload_.apps[a].num_computes());
    app_seen_.assign(workload_.apps.size(), false);
    PrecomputeBaselineSizes();
  }

  RunReport Run();

 private:
  std::vector<Resources> RackFreeAll() const {
    std::vector<Resources> v;
    for (int r = 0; r < cluster_.num_racks(); ++r) v.push_back(cluster_.RackFree(r));
    return v;
  }
  Bytes granule() const { return cluster_.config().granule; }
  bool Faas() const { return pol_.kind == PolicyKind::kFaasPeak; }

  void Push(Seconds t, EventKind kind, int64_t inv, int comp, uint64_t token = 0, int aux = 0) {
    queue_.push({t, seq_++, kind, inv, comp, token, aux});
  }
  void Log(nlohmann::json j) {
    if (opt_.event_log) *opt_.event_log << j.dump() << '\n';
  }
  nlohmann::json Record(const char* ev, const Inv& inv, int comp) const {
    nlohmann::json j = {{"t", now_}, {"ev", ev}, {"app", inv.g->app()}, {"inv", inv.id}};
    j["comp"] = comp >= 0 ? nlohmann::json(inv.g->name(comp)) : nlohmann::json(nullptr);
    return j;
  }

  void OnResize(const PhysicalComponent& pc, Resources old_size, Resources new_size);
  void PrecomputeBaselineSizes();
  void SizeInvocation(Inv& inv);
  const SizingParams& Tuned(CompHistory& h);

  void Arrive(Inv& inv);
  bool TryPlaceInvocation(Inv& inv);
  std::optional<PlacementDecision> PlaceRoot(Inv& inv, int rack);
  void OnPlaced(Inv& inv, int c, const PlacementDecision& d, bool continued, Seconds conn_init,
                Seconds extra_delay);
  void MakeRunnable(Inv& inv, int c, std::optional<PhysicalId> cont);
  bool PlaceOnDemand(Inv& inv, int c, std::optional<PhysicalId> cont);
  std::optional<PlacementDecision> PlaceMigrating(Inv& inv, int c, std::optional<PhysicalId> cont,
                                                  Seconds& delay);
  void Ready(Inv& inv, int c, uint64_t token);
  void Start(Inv& inv, int c);
  void GrowStep(Inv& inv, int c, uint64_t token, bool swap_ready);
  void BeginRun(Inv& inv, int c);
  void Advance(CompRun& cr);
  void Sample(Inv& inv, int c, uint64_t token);
  void Finish(Inv& inv, int c, uint64_t token);
  void Grow(Inv& inv, int d, uint64_t token, int index);
  void ReleaseData(Inv& inv, int d, PhysicalState how);
  void IntegrateData(Inv& inv, int d);
  void FinishInvocation(Inv& inv);
  void Fail(Inv& inv, int c, uint64_t token);
  void Restart(Inv& inv, int c, uint64_t token);
  void Prelaunch(Inv& inv, int c, uint64_t token);
  void PlanPrelaunchFor(Inv& inv);
  bool ContinuationEligible(const Inv& inv, int c) const;
  void RetryBlocked();
  void ReportRack(int rack) {
    if (rack >= 0) global_.Report(rack, cluster_.RackFree(rack));
  }
  RunReport BuildReport();

  const Workload& workload_;
  const SimOptions& opt_;
  const PolicyConfig& pol_;
  const CostModel& cost_;
  ClusterState cluster_;
  GlobalScheduler global_;
  std::vector<RackScheduler> racks_;
  std::mt19937_64 rng_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  uint64_t seq_ = 0;
  Seconds now_ = 0;
  std::vector<Inv> invs_;
  std::vector<std::vector<CompHistory>> history_;
  std::vector<bool> app_seen_;
  std::vector<Seconds> since_;  // per physical id
  std::deque<int64_t> waiting_;
  struct Blocked {
    int64_t inv;
    int comp;
    uint64_t exec;
  };
  std::deque<Blocked> blocked_;
  // Baseline sizes: per app, per component index.
  std::vector<std::vector<Resources>> fixed_size_;
  std::vector<Resources> faas_size_;
  RunReport report_;
};

void Simulator::OnResize(const PhysicalComponent& pc, Resources old_size, Resources new_size) {
  if (since_.size() <= static_cast<size_t>(pc.id)) since_.resize(pc.id + 1, 0);
  if (pc.invocation >= 0 && pc.invocation < static_cast<int64_t>(invs_.size())) {
    Inv& inv = invs_[pc.invocation];
    const double dt = now_ - since_[pc.id];
    inv.alloc_byte_s += static_cast<double>(old_size.mem) * dt;
    inv.alloc_core_s += old_size.cpu * dt;
    inv.live_cpu += new_size.cpu - old_size.cpu;
  }
  since_[pc.id] = now_;
}

void Simulator::PrecomputeBaselineSizes() {
  const size_t n = workload_.apps.size();
  fixed_size_.assign(n, {});
  faas_size_.assign(n, Resources{});
  for (size_t a = 0; a < n; ++a) fixed_size_[a].assign(workload_.apps[a].num_components(), Resources{});
  for (const auto& rec : workload_.trace) {
    const int a = workload_.AppIndex(rec.app);
    const ResourceGraph& g = workload_.apps[a];
    InvocationContext ctx = InvocationContext::Make(-1, g, rec.scale);
    for (int c = 0; c < g.num_computes(); ++c) {
      const auto& spec = g.compute(c);
      ctx.size[c] = {std::max(1, static_cast<int>(std::ceil(spec.CpuDemand(rec.scale) - 1e-9))),
                     RoundUp(std::max<Bytes>(spec.LocalMem(rec.scale), 1), granule())};
    }
    for (int d = g.num_computes(); d < g.num_components(); ++d) {
      ctx.size[d] = {0, RoundUp(std::max<Bytes>(g.data(d).PeakSize(rec.scale), 1), granule())};
    }
    for (int i = 0; i < g.num_components(); ++i) {
      auto& f = fixed_size_[a][i];
      f.cpu = std::max(f.cpu, ctx.size[i].cpu);
      f.mem = std::max(f.mem, ctx.size[i].mem);
    }
    // A single function holds every phase's working set plus live data.
    const Resources peak = PeakConcurrentFootprint(ctx);
    int cpu = 0;
    for (int c = 0; c < g.num_computes(); ++c) cpu = std::max(cpu, ctx.size[c].cpu);
    Bytes mem = 0;
    for (int c = 0; c < g.num_computes(); ++c) {
      Bytes m = ctx.size[c].mem;
      for (int d = g.num_computes(); d < g.num_components(); ++d) {
        // Data live while c runs: accessed by c, or by computes both before and after it.
        const auto& acc = g.accessors(d);
        if (std::find(acc.begin(), acc.end(), c) != acc.end()) m += ctx.size[d].mem;
      }
      mem = std::max(mem, m);
    }
    auto& fs = faas_size_[a];
    fs.cpu = std::max(fs.cpu, cpu);
    fs.mem = std::max({fs.mem, mem, std::min(mem, peak.mem)});
  }
}

const SizingParams& Simulator::Tuned(CompHistory& h) {
  if (!h.params || h.profile.total_recorded() - h.tuned_at >= pol_.retune_every) {
    const SizingProblem p = MakeSizingProblem(h.profile, pol_.cost_factor, pol_.thres, granule());
    try {
      h.params = SolveSizing(p);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasible) throw;
      h.params = PeakSizing(p);
    }
    h.tuned_at = h.profile.total_recorded();
  }
  return *h.params;
}

void Simulator::SizeInvocation(Inv& inv) {
  const ResourceGraph& g = *inv.g;
  auto& ctx = inv.ctx;
  inv.inits.assign(g.num_computes(), 0);
  inv.steps.assign(g.num_computes(), granule());
  for (int c = 0; c < g.num_computes(); ++c) {
    const ComputeSpec& spec = g.compute(c);
    const Bytes need = std::max<Bytes>(spec.LocalMem(inv.scale), 1);
    Resources r;
    if (pol_.kind == PolicyKind::kDagFixed) {
      r = fixed_size_[inv.app][c];
    } else {
      CompHistory& h = history_[inv.app][c];
      r.cpu = SelectParallelVcpus(h.profile, spec.Parallelism(inv.scale));
      if (pol_.sizing == SizingMode::kFixed) {
        r.mem = kFixedSizing.init;
        inv.inits[c] = kFixedSizing.init;
        inv.steps[c] = kFixedSizing.step;
      } else if (h.profile.empty()) {
        r.mem = RoundUp(need, granule());
      } else if (pol_.sizing == SizingMode::kPeak) {
        r.mem = RoundUp(std::max<Bytes>(h.profile.max_peak_mem(), 1), granule());
      } else {
        const SizingParams& sp = Tuned(h);
        r.mem = sp.init;
        inv.inits[c] = sp.init;
        inv.steps[c] = sp.step;
      }
      r.mem = std::max(r.mem, granule());
    }
    r.cpu = std::clamp(r.cpu, 1, std::max(1, g.app_limit().max_cpu));
    ctx.size[c] = r;
  }
  for (int d = g.num_computes(); d < g.num_components(); ++d) {
    ctx.size[d] = pol_.kind == PolicyKind::kDagFixed
                      ? fixed_size_[inv.app][d]
                      : Resources{0, RoundUp(std::max<Bytes>(g.data(d).Size(inv.scale), 1), granule())};
  }
  ctx.force_remote = pol_.kind == PolicyKind::kDagFixed || pol_.kind == PolicyKind::kAlwaysRemote;
}

RunReport Simulator::Run() {
  invs_.resize(workload_.trace.size());
  for (size_t i = 0; i < workload_.trace.size(); ++i) {
    const auto& rec = workload_.trace[i];
    Inv& inv = invs_[i];
    inv.id = static_cast<int64_t>(i);
    inv.app = workload_.AppIndex(rec.app);
    inv.g = &workload_.apps[inv.app];
    inv.scale = rec.scale;
    inv.arrival = rec.arrival_s;
    inv.excluded.assign(cluster_.num_racks(), false);
    Push(rec.arrival_s + cost_.message_latency_s, EventKind::kArrival, inv.id, -1);
  }
  while (!queue_.empty()) {
    const Event ev = queue_.top();
    queue_.pop();
    now_ = ev.t;
    ++report_.events;
    Inv& inv = invs_[ev.inv];
    switch (ev.kind) {
      case EventKind::kArrival:
        Arrive(inv);
        break;
      case EventKind::kPrelaunch:
        Prelaunch(inv, ev.comp, ev.token);
        break;
      case EventKind::kPrelaunchDone:
        Ready(inv, ev.comp, ev.token);
        break;
      case EventKind::kComponentFinish:
        Finish(inv, ev.comp, ev.token);
        break;
      case EventKind::kGrowth:
        Grow(inv, ev.comp, ev.token, ev.aux);
        break;
      case EventKind::kGrowStep:
        GrowStep(inv, ev.comp, ev.token, ev.aux != 0);
        break;
      case EventKind::kCpuSample:
        Sample(inv, ev.comp, ev.token);
        break;
      case EventKind::kConnSetupDone:
        if (inv.comps[ev.comp].exec == ev.token) Log(Record("conn_setup_done", inv, ev.comp));
        break;
      case EventKind::kFailure:
        Fail(inv, ev.comp, ev.token);
        break;
      case EventKind::kRecoveryRestart:
        Restart(inv, ev.comp, ev.token);
        break;
    }
  }
  std::string stuck;
  for (const auto& inv : invs_) {
    if (!inv.done) stuck += " " + inv.g->app() + "#" + std::to_string(inv.id);
  }
  if (!stuck.empty()) {
    throw Error(ErrorCode::kDeadlock, "no runnable event at t=" + std::to_string(now_) +
                                          " while invocations are pending:" + stuck);
  }
  return BuildReport();
}

void Simulator::Arrive(Inv& inv) {
  inv.ctx = InvocationContext::Make(inv.id, *inv.g, inv.scale);
  inv.comps.assign(inv.g->num_computes(), CompRun{});
  inv.datas.assign(inv.g->datas().size(), DataRun{});
  inv.recorded.assign(inv.g->num_edges(), false);
  inv.out.assign(inv.g->num_computes(), 0);
  inv.rep.executions.assign(inv.g->num_computes(), 0);
  inv.warm_root = pol_.prewarm && app_seen_[inv.app];
  app_seen_[inv.app] = true;
  SizeInvocation(inv);
  Log(Record("arrival", inv, -1));
  if (!TryPlaceInvocation(inv)) waiting_.push_back(inv.id);
}

std::optional<PlacementDecision> Simulator::PlaceRoot(Inv& inv, int rack) {
  if (!Faas()) return racks_[rack].PlaceInvocation(inv.ctx);
  const int root = inv.g->root();
  const Resources size = faas_size_[inv.app];
  auto fit = racks_[rack].SmallestFit(size, inv.g->app());
  if (!fit) return std::nullopt;
  AllocTag tag;
  tag.component = {inv.g->app(), root};
  tag.invocation = inv.id;
  auto id = cluster_.TryAlloc(fit->first, size, fit->second, tag);
  if (!id) return std::nullopt;
  PlacementDecision d;
  d.component = tag.component;
  d.server = fit->first;
  d.sized = size;
  d.container = *id;
  for (const auto& a : inv.g->compute(root).accesses) d.access_modes.emplace_back(a.data, AccessMode::kLocal);
  inv.shared = *id;
  inv.ctx.container[root] = *id;
  return d;
}

bool Simulator::TryPlaceInvocation(Inv& inv) {
  const Resources footprint = Faas() ? faas_size_[inv.app] : WholeAppFootprint(inv.ctx);
  while (true) {
    int rack;
    try {
      rack = global_.Route(footprint, inv.excluded);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kClusterFull) throw;
      std::fill(inv.excluded.begin(), inv.excluded.end(), false);
      return false;
    }
    auto d = PlaceRoot(inv, rack);
    ReportRack(rack);
    if (!d) {
      inv.excluded[rack] = true;
      continue;
    }
    inv.rack = rack;
    inv.placed = true;
    const int root = inv.g->root();
    CompRun& cr = inv.comps[root];
    cr.runnable = true;
    cr.runnable_at = inv.arrival;
    OnPlaced(inv, root, *d, false, now_, 0);
    PlanPrelaunchFor(inv);
    return true;
  }
}

void Simulator::OnPlaced(Inv& inv, int c, const PlacementDecision& d, bool continued, Seconds conn_init,
                         Seconds extra_delay) {
  CompRun& cr = inv.comps[c];
  cr.state = CompState::kLaunching;
  ++report_.decisions;
  bool any_local = false, any_remote = false;
  for (const auto& [data, mode] : d.access_modes) (mode == AccessMode::kLocal ? any_local : any_remote) = true;
  if (d.cache_hit) ++(*d.cache_hit ? report_.compile_hits : report_.compile_misses);

  Seconds container_start = 0;
  if (!continued) container_start = c == inv.g->root() && inv.warm_root ? cost_.warm_start_s : cost_.cold_start_s;
  const Seconds conn_ready = any_remote ? conn_init + cost_.conn_setup_s : 0;
  const Seconds compile = d.cache_hit && !*d.cache_hit ? cost_.compile_s : 0;
  cr.ready_at = std::max(now_ + container_start, conn_ready) + compile + extra_delay;

  nlohmann::json j = Record("place", inv, c);
  j["server"] = d.server;
  j["cpu"] = d.sized.cpu;
  j["mem_mb"] = ToMiB(d.sized.mem);
  j["mode"] = any_remote ? (any_local ? "mixed" : "remote") : "local";
  j["colocated"] = d.colocated_with.has_value();
  j["cache_hit"] = d.cache_hit ? nlohmann::json(*d.cache_hit) : nlohmann::json(nullptr);
  Log(std::move(j));

  Push(cr.ready_at, EventKind::kPrelaunchDone, inv.id, c, cr.exec);
  if (any_remote && conn_ready > now_) Push(conn_ready, EventKind::kConnSetupDone, inv.id, c, cr.exec);
}

bool Simulator::ContinuationEligible(const Inv& inv, int c) const {
  if (!pol_.continue_in_process) return false;
  const auto& preds = inv.g->predecessors(c);
  if (preds.size() != 1) return false;
  const auto& succ = inv.g->successors(preds[0]);
  return *std::min_element(succ.begin(), succ.end()) == c;
}

void Simulator::MakeRunnable(Inv& inv, int c, std::optional<PhysicalId> cont) {
  CompRun& cr = inv.comps[c];
  cr.runnable = true;
  cr.runnable_at = now_;
  switch (cr.state) {
    case CompState::kReady:
      Start(inv, c);
      break;
    case CompState::kLaunching:
      break;
    case CompState::kPending:
      if (!PlaceOnDemand(inv, c, cont)) blocked_.push_back({inv.id, c, cr.exec});
      cont.reset();
      break;
    default:
      break;
  }
  if (cont && cluster_.IsLive(*cont)) cluster_.Release(*cont);
}

std::optional<PlacementDecision> Simulator::PlaceMigrating(Inv& inv, int c, std::optional<PhysicalId> cont,
                                                           Seconds& delay) {
  const ResourceGraph& g = *inv.g;
  auto& ctx = inv.ctx;
  RackScheduler& rs = racks_[inv.rack];
  const bool live_cont = cont && cluster_.IsLive(*cont);
  int here = ctx.home_server;
  for (int p : g.predecessors(c)) {
    if (ctx.last_server[p] >= 0) here = ctx.last_server[p];
  }
  if (live_cont) here = cluster_.physical(*cont).server;

  Bytes fresh = 0, resident = 0;
  std::vector<int> live_data;
  for (const auto& a : g.compute(c).accesses) {
    if (ctx.chunks(a.data).empty()) fresh += ctx.size[a.data].mem;
  }
  for (int d = g.num_computes(); d < g.num_components(); ++d) {
    if (ctx.chunks(d).empty()) continue;
    live_data.push_back(d);
    for (PhysicalId id : ctx.chunks(d)) resident += cluster_.physical(id).size.mem;
  }
  Resources room = here >= 0 ? cluster_.UnmarkedFree(here, g.app()) : Resources{};
  if (live_cont) room += cluster_.physical(*cont).size;
  if (here >= 0 && room.Fits(ctx.size[c] + Resources{0, fresh})) return rs.PlaceNext(ctx, c, cont);

  auto target = rs.SmallestFit(ctx.size[c] + Resources{0, fresh + resident}, g.app(), here);
  if (!target) return rs.PlaceNext(ctx, c, cont);
  if (live_cont) {
    resident += cluster_.physical(*cont).size.mem;
    cluster_.Release(*cont);
  }
  for (int d : live_data) rs.MoveData(ctx, d, target->first);
  auto d = rs.PlaceOn(ctx, c, target->first);
  if (d) {
    delay = static_cast<double>(resident) * 8.0 / (pol_.migration_gbps * 1e9);
    nlohmann::json j = Record("migrate", inv, c);
    j["server"] = target->first;
    j["bytes"] = resident;
    j["delay_s"] = delay;
    Log(std::move(j));
  }
  return d;
}

bool Simulator::PlaceOnDemand(Inv& inv, int c, std::optional<PhysicalId> cont) {
  CompRun& cr = inv.comps[c];
  if (Faas()) {
    inv.ctx.container[c] = inv.shared;
    cr.state = CompState::kReady;
    cr.ready_at = now_;
    Start(inv, c);
    return true;
  }
  Seconds delay = 0;
  std::optional<PlacementDecision> d;
  if (pol_.kind == PolicyKind::kMigrationBest) {
    d = PlaceMigrating(inv, c, cont, delay);
  } else {
    d = racks_[inv.rack].PlaceNext(inv.ctx, c, cont);
  }
  ReportRack(inv.rack);
  if (!d) return false;
  Seconds conn_init = now_;
  if (pol_.prelaunch) {
    Seconds latest = -1;
    for (int p : inv.g->predecessors(c)) {
      if (inv.comps[p].finish_at >= latest) {
        latest = inv.comps[p].finish_at;
        conn_init = std::min(now_, inv.comps[p].start_at);
      }
    }
  }
  OnPlaced(inv, c, *d, d->colocated_with.has_value() || delay > 0, conn_init, delay);
  PlanPrelaunchFor(inv);
  return true;
}

void Simulator::Ready(Inv& inv, int c, uint64_t token) {
  CompRun& cr = inv.comps[c];
  if (token != cr.exec || cr.state != CompState::kLaunching) return;
  cr.state = CompState::kReady;
  Log(Record("ready", inv, c));
  if (cr.runnable) Start(inv, c);
}

void Simulator::Start(Inv& inv, int c) {
  const ResourceGraph& g = *inv.g;
  const ComputeSpec& spec = g.compute(c);
  CompRun& cr = inv.comps[c];
  auto& ctx = inv.ctx;
  cr.state = CompState::kRunning;
  cr.start_at = now_;
  inv.rep.startup_overhead_s += now_ - cr.runnable_at;

  const PhysicalId container = ctx.container[c];
  const PhysicalComponent& pc = cluster_.physical(container);
  cr.vcpus = pc.size.cpu;
  cr.demand = spec.CpuDemand(inv.scale);
  cr.need = std::max<Bytes>(spec.LocalMem(inv.scale), 1);
  cr.progress = 0;
  cr.busy = 0;
  cr.peak_rate = cr.rate();
  cr.autoscale = {};
  cr.swap_chunks.clear();
  cr.stall_used = 0;

  cr.growing = false;
  cr.swap = 1.0;
  cr.phase_start = now_;
  cr.last_change = now_;

  Log(Record("start", inv, c));
  for (const auto& f : opt_.failures) {
    if (f.invocation == inv.id && f.component == spec.name && cr.failures_fired < f.times) {
      ++cr.failures_fired;
      Push(now_ + f.after_start_s, EventKind::kFailure, inv.id, c, cr.exec);
    }
  }
  if (!Faas() && pc.size.mem < cr.need) {
    cr.growing = true;
    Push(now_ + cost_.growth_latency_s, EventKind::kGrowStep, inv.id, c, cr.exec);
    return;
  }
  BeginRun(inv, c);
}

// Each increment is claimed when its step completes. The last step starts
// the run; a refused step falls back to swap.
void Simulator::GrowStep(Inv& inv, int c, uint64_t token, bool swap_ready) {
  CompRun& cr = inv.comps[c];
  if (token != cr.exec || cr.state != CompState::kRunning || !cr.growing) return;
  const PhysicalId container = inv.ctx.container[c];
  const Bytes cur = cluster_.physical(container).size.mem;
  cr.stall_used += static_cast<double>(std::min(cur, cr.need)) * (now_ - cr.phase_start);
  cr.phase_start = now_;
  if (swap_ready) {
    cr.growing = false;
    BeginRun(inv, c);
    return;
  }
  // Sizes stay on the init + j * step lattice.
  const Bytes init = std::min(inv.inits[c], cur);
  const Bytes step = inv.steps[c];
  const Bytes next = init + ((cur - init) / step + 1) * step;
  if (cluster_.Resize(container, {cluster_.physical(container).size.cpu, next}, false)) {
    if (next < cr.need) {
      Push(now_ + cost_.growth_latency_s, EventKind::kGrowStep, inv.id, c, cr.exec);
    } else {
      cr.growing = false;
      BeginRun(inv, c);
    }
    return;
  }
  const Bytes overflow = cr.need - cur;
  auto gd = racks_[inv.rack].PlaceGrowth(inv.ctx, c, overflow, step);
  if (gd) cr.swap_chunks = gd->chunks;
  cr.swap = SwapMultiplier(overflow, cr.need, cost_);
  ++report_.swap_events;
  nlohmann::json j = Record("swap", inv, c);
  j["overflow_mb"] = ToMiB(overflow);
  j["backed"] = gd.has_value();
  Log(std::move(j));
  if (gd) {
    Push(now_ + cost_.growth_latency_s, EventKind::kGrowStep, inv.id, c, cr.exec, 1);
  } else {
    cr.growing = false;
    BeginRun(inv, c);
  }
}

void Simulator::BeginRun(Inv& inv, int c) {
  const ResourceGraph& g = *inv.g;
  const ComputeSpec& spec = g.compute(c);
  CompRun& cr = inv.comps[c];
  auto& ctx = inv.ctx;
  const PhysicalComponent& pc = cluster_.physical(ctx.container[c]);
  std::vector<double> frac;
  for (const auto& a : spec.accesses) {
    double f = 1.0;
    if (!Faas()) {
      Bytes total = 0, here = 0;
      for (PhysicalId id : ctx.chunks(a.data)) {
        const auto& chunk = cluster_.physical(id);
        total += chunk.size.mem;
        if (chunk.server == pc.server) here += chunk.size.mem;
      }
      f = ctx.force_remote || total == 0 ? 0.0 : static_cast<double>(here) / total;
    }
    frac.push_back(f);
    const double v = static_cast<double>(spec.AccessVolume(a, inv.scale));
    inv.volume += v;
    inv.local_volume += v * f;
  }

  double jitter = 1.0;
  if (opt_.jitter > 0) jitter = 1.0 + opt_.jitter * std::uniform_real_distribution<double>(-1.0, 1.0)(rng_);
  cr.work = spec.TotalWork(inv.scale) * cr.swap * jitter;
  cr.access_s = AccessSeconds(spec, inv.scale, frac, cost_, cluster_.config().link_gbps) * jitter;
  cr.phase_start = now_;
  cr.last_change = now_;
  const Seconds total = cr.total();

  for (const auto& a : spec.accesses) {
    DataRun& dr = inv.data(a.data);
    if (dr.started) continue;
    dr.started = true;
    dr.since = now_;
    dr.logical = g.data(a.data).Size(inv.scale);
    dr.alloc = 0;
    for (PhysicalId id : ctx.chunks(a.data)) dr.alloc += cluster_.physical(id).size.mem;
    const auto& growth = g.data(a.data).growth;
    for (size_t i = 0; i < growth.size(); ++i) {
      Push(cr.phase_start + growth[i].fraction * total, EventKind::kGrowth, inv.id, a.data, dr.epoch,
           static_cast<int>(i));
    }
  }

  Push(cr.phase_start + total, EventKind::kComponentFinish, inv.id, c, cr.epoch);
  if (pol_.autoscale && !Faas()) {
    Push(cr.phase_start + cost_.cpu_sample_period_s, EventKind::kCpuSample, inv.id, c, cr.epoch);
  }
}

void Simulator::Advance(CompRun& cr) {
  if (cr.growing || now_ <= cr.last_change) return;
  const double dt = now_ - cr.last_change;
  const double total = cr.total();
  if (total > 0) cr.progress = std::min(1.0, cr.progress + dt / total);
  cr.busy += cr.rate() * dt;
  cr.last_change = now_;
}

void Simulator::Sample(Inv& inv, int c, uint64_t token) {
  CompRun& cr = inv.comps[c];
  if (token != cr.epoch || cr.state != CompState::kRunning) return;
  const double util = cr.rate() / cr.vcpus;
  const int limit = inv.g->app_limit().max_cpu - (inv.live_cpu - cr.vcpus);
  const int next = CpuAutoscaleTick(cr.vcpus, util, limit, cr.autoscale, cost_.cpu_low_watermark,
                                    cost_.cpu_low_samples);
  if (next != cr.vcpus) {
    const PhysicalId container = inv.ctx.container[c];
    const Resources size = cluster_.physical(container).size;
    if (cluster_.Resize(container, {next, size.mem}, false)) {
      Advance(cr);
      cr.vcpus = next;
      cr.peak_rate = std::max(cr.peak_rate, cr.rate());
      ++cr.epoch;
      nlohmann::json j = Record("scale", inv, c);
      j["cpu"] = next;
      Log(std::move(j));
      Push(now_ + (1.0 - cr.progress) * cr.total(), EventKind::kComponentFinish, inv.id, c, cr.epoch);
    } else {
      ++report_.scale_up_failures;
      Log(Record("scale_failed", inv, c));
    }
  } else if (util >= 1.0 && next == cr.vcpus) {
    ++report_.scale_up_failures;
  }
  Push(now_ + cost_.cpu_sample_period_s, EventKind::kCpuSample, inv.id, c, cr.epoch);
}

void Simulator::IntegrateData(Inv& inv, int d) {
  DataRun& dr = inv.data(d);
  if (!dr.started) return;
  const Bytes used = Faas() ? dr.logical : std::min(dr.logical, dr.alloc);
  inv.used_byte_s += static_cast<double>(used) * (now_ - dr.since);
  dr.since = now_;
}

void Simulator::ReleaseData(Inv& inv, int d, PhysicalState how) {
  IntegrateData(inv, d);
  DataRun& dr = inv.data(d);
  dr.started = false;
  ++dr.epoch;
  for (PhysicalId id : inv.ctx.chunks(d)) {
    if (cluster_.IsLive(id)) cluster_.Release(id, how);
  }
  inv.ctx.chunks(d).clear();
  dr.alloc = 0;
}

void Simulator::Grow(Inv& inv, int d, uint64_t token, int index) {
  DataRun& dr = inv.data(d);
  if (token != dr.epoch || !dr.started) return;
  IntegrateData(inv, d);
  const Bytes extra = inv.g->data(d).growth[index].extra;
  nlohmann::json j = Record("growth", inv, d);
  j["extra_mb"] = ToMiB(extra);
  if (!Faas()) {
    auto gd = racks_[inv.rack].PlaceGrowth(inv.ctx, d, extra, granule());
    ReportRack(inv.rack);
    if (gd) {
      dr.alloc += gd->bytes;
      j["server"] = gd->server;
    } else {
      j["server"] = nullptr;
    }
  }
  dr.logical += extra;
  Log(std::move(j));
}

void Simulator::Finish(Inv& inv, int c, uint64_t token) {
  const ResourceGraph& g = *inv.g;
  const ComputeSpec& spec = g.compute(c);
  CompRun& cr = inv.comps[c];
  if (token != cr.epoch || cr.state != CompState::kRunning) return;
  Advance(cr);
  cr.state = CompState::kFinished;
  cr.finish_at = now_;
  ++inv.finished;

  const double work = spec.TotalWork(inv.scale);
  if (++inv.rep.executions[c] == 1) {
    inv.rep.work_completed_cpu_s += work;
  } else {
    inv.rep.reexecuted_cpu_s += work;
  }
  inv.rep.cpu_used_core_s += work;
  const PhysicalId container = inv.ctx.container[c];
  Bytes held = cluster_.physical(container).size.mem;
  for (PhysicalId id : cr.swap_chunks) held += cluster_.physical(id).size.mem;
  inv.used_byte_s += cr.UsedByteSeconds(now_, held);

  const Seconds run_time = std::max(now_ - cr.start_at, 1e-9);
  const Seconds phase = now_ - cr.phase_start;
  const int p = spec.Parallelism(inv.scale);
  UsageSample s;
  s.invocation_id = inv.id;
  s.peak_cpu = cr.peak_rate;
  s.peak_mem = cr.need;
  s.exec_time = run_time;
  s.mean_cpu_util = std::clamp(phase > 0 ? cr.busy / phase / p : cr.rate() / p, 0.0, 1.0);
  history_[inv.app][c].profile.Record(s);

  for (int e : g.out_edges(c)) inv.recorded[e] = true;
  uint64_t h = 1469598103934665603ULL;
  h = Fnv(h, spec.name.data(), spec.name.size());
  h = Fnv(h, &inv.scale, sizeof(inv.scale));
  for (int q : g.predecessors(c)) h = Fnv(h, &inv.out[q], sizeof(uint64_t));
  inv.out[c] = h;
  Log(Record("finish", inv, c));

  for (PhysicalId id : cr.swap_chunks) cluster_.Release(id);
  cr.swap_chunks.clear();
  for (const auto& a : spec.accesses) {
    if (!inv.data(a.data).started) continue;
    const auto& acc = g.accessors(a.data);
    if (std::all_of(acc.begin(), acc.end(), [&](int x) { return inv.comps[x].state == CompState::kFinished; })) {
      ReleaseData(inv, a.data, PhysicalState::kFinished);
    }
  }
  inv.ctx.container[c] = -1;

  if (Faas()) {
    const auto& topo = g.TopoOrder();
    if (++inv.seq_next < static_cast<int>(topo.size())) {
      MakeRunnable(inv, topo[inv.seq_next], std::nullopt);
    } else {
      cluster_.Release(inv.shared);
      inv.shared = -1;
    }
  } else {
    std::vector<int> runnable;
    for (int s : g.successors(c)) {
      const auto& preds = g.predecessors(s);
      if (inv.comps[s].state != CompState::kFinished && !inv.comps[s].runnable &&
          std::all_of(preds.begin(), preds.end(), [&](int x) { return inv.comps[x].state == CompState::kFinished; })) {
        runnable.push_back(s);
      }
    }
    std::sort(runnable.begin(), runnable.end());
    std::optional<PhysicalId> cont = container;
    if (pol_.continue_in_process) {
      for (int s : runnable) {
        if (inv.comps[s].state == CompState::kPending) {
          MakeRunnable(inv, s, cont);
          cont.reset();
          break;
        }
      }
    }
    if (cont) cluster_.Release(*cont);
    for (int s : runnable) {
      if (!inv.comps[s].runnable) MakeRunnable(inv, s, std::nullopt);
    }
  }
  ReportRack(inv.rack);
  if (inv.finished == g.num_computes()) FinishInvocation(inv);
  RetryBlocked();
}

void Simulator::FinishInvocation(Inv& inv) {
  const ResourceGraph& g = *inv.g;
  for (int d = g.num_computes(); d < g.num_components(); ++d) {
    if (inv.data(d).started || !inv.ctx.chunks(d).empty()) ReleaseData(inv, d, PhysicalState::kFinished);
  }
  cluster_.ClearSoftMarks(inv.id);
  ReportRack(inv.rack);
  inv.done = true;
  inv.rep.end_to_end_s = now_ - inv.arrival;
  uint64_t h = 1469598103934665603ULL;
  for (int s : g.sinks()) h = Fnv(h, &inv.out[s], sizeof(uint64_t));
  inv.rep.output_digest = h;
  Log(Record("done", inv, -1));
}

void Simulator::Fail(Inv& inv, int c, uint64_t token) {
  const ResourceGraph& g = *inv.g;
  CompRun& crashed = inv.comps[c];
  if (token != crashed.exec || crashed.state != CompState::kRunning) return;
  if (Faas()) {
    Log(Record("failure_ignored", inv, c));
    return;
  }
  ++inv.rep.recoveries;
  Log(Record("failure", inv, c));

  auto kill = [&](int x, PhysicalState how) {
    CompRun& cr = inv.comps[x];
    if (cr.state == CompState::kRunning) {
      Advance(cr);
      inv.rep.reexecuted_cpu_s += cr.progress * g.compute(x).TotalWork(inv.scale);
      Bytes held = cluster_.physical(inv.ctx.container[x]).size.mem;
      for (PhysicalId id : cr.swap_chunks) held += cluster_.physical(id).size.mem;
      inv.used_byte_s += cr.UsedByteSeconds(now_, held);
    }
    if (inv.ctx.container[x] >= 0 && cluster_.IsLive(inv.ctx.container[x])) {
      cluster_.Release(inv.ctx.container[x], how);
    }
    for (PhysicalId id : cr.swap_chunks) {
      if (cluster_.IsLive(id)) cluster_.Release(id, how);
    }
    cr.swap_chunks.clear();
    inv.ctx.container[x] = -1;
  };

  kill(c, PhysicalState::kFailed);
  for (const auto& a : g.compute(c).accesses) {
    if (inv.data(a.data).started || !inv.ctx.chunks(a.data).empty()) ReleaseData(inv, a.data, PhysicalState::kFailed);
  }

  const GraphCut cut = GraphCutBefore(g, inv.recorded);
  for (int x = 0; x < g.num_computes(); ++x) {
    if (cut.in_prefix[x]) continue;
    CompRun& cr = inv.comps[x];
    if (x != c && cr.state != CompState::kPending && cr.state != CompState::kFinished) kill(x, PhysicalState::kFailed);
    if (cr.state == CompState::kFinished) --inv.finished;
    for (int e : g.out_edges(x)) inv.recorded[e] = false;
    cr.state = CompState::kPending;
    cr.runnable = false;
    cr.prelaunch_planned = false;
    cr.finish_at = -1;
    ++cr.exec;
    ++cr.epoch;
  }
  for (int f : cut.frontier) {
    Push(now_ + cost_.message_latency_s, EventKind::kRecoveryRestart, inv.id, f, inv.comps[f].exec);
  }
  ReportRack(inv.rack);
  RetryBlocked();
}

void Simulator::Restart(Inv& inv, int c, uint64_t token) {
  CompRun& cr = inv.comps[c];
  if (token != cr.exec || cr.state != CompState::kPending || cr.runnable) return;
  Log(Record("restart", inv, c));
  MakeRunnable(inv, c, std::nullopt);
}

void Simulator::PlanPrelaunchFor(Inv& inv) {
  if (!pol_.prelaunch || Faas() || pol_.kind == PolicyKind::kDagFixed) return;
  const ResourceGraph& g = *inv.g;
  const int n = g.num_computes();
  std::vector<Seconds> finish(n, -1), exec(n, -1);
  std::vector<bool> skip(n, false);
  for (int c = 0; c < n; ++c) {
    const CompRun& cr = inv.comps[c];
    const ResourceProfile& prof = history_[inv.app][c].profile;
    if (!prof.empty()) exec[c] = prof.ema_exec_time();
    switch (cr.state) {
      case CompState::kFinished:
        finish[c] = cr.finish_at;
        break;
      case CompState::kRunning:
        if (exec[c] >= 0) finish[c] = cr.start_at + exec[c];
        break;
      case CompState::kReady:
      case CompState::kLaunching:
        if (cr.runnable && exec[c] >= 0) finish[c] = std::max(cr.ready_at, now_) + exec[c];
        break;
      case CompState::kPending:
        break;
    }
    skip[c] = cr.state != CompState::kPending || cr.prelaunch_planned || cr.runnable || ContinuationEligible(inv, c);
  }
  const Seconds startup = std::max(cost_.cold_start_s, cost_.conn_setup_s);
  for (const auto& item : PlanPrelaunch(g, now_, finish, exec, startup, skip)) {
    inv.comps[item.component].prelaunch_planned = true;
    Push(item.launch_at, EventKind::kPrelaunch, inv.id, item.component, inv.comps[item.component].exec);
  }
}

void Simulator::Prelaunch(Inv& inv, int c, uint64_t token) {
  CompRun& cr = inv.comps[c];
  if (token != cr.exec || cr.state != CompState::kPending || cr.runnable) return;
  auto d = racks_[inv.rack].PlaceNext(inv.ctx, c);
  ReportRack(inv.rack);
  if (!d) {
    Log(Record("prelaunch_failed", inv, c));
    return;
  }
  Log(Record("prelaunch", inv, c));
  OnPlaced(inv, c, *d, false, now_, 0);
}

void Simulator::RetryBlocked() {
  const size_t n = blocked_.size();
  for (size_t i = 0; i < n; ++i) {
    Blocked b = blocked_.front();
    blocked_.pop_front();
    Inv& inv = invs_[b.inv];
    CompRun& cr = inv.comps[b.comp];
    if (cr.exec != b.exec || cr.state != CompState::kPending || !cr.runnable) continue;
    if (!PlaceOnDemand(inv, b.comp, std::nullopt)) blocked_.push_back(b);
  }
  const size_t m = waiting_.size();
  for (size_t i = 0; i < m; ++i) {
    const int64_t id = waiting_.front();
    waiting_.pop_front();
    if (!TryPlaceInvocation(invs_[id])) waiting_.push_back(id);
  }
}

RunReport Simulator::BuildReport() {
  RunReport& r = report_;
  r.policy = std::string(PolicyName(pol_.kind));
  r.seed = opt_.seed;
  std::vector<double> e2e;
  double local_sum = 0;
  for (Inv& inv : invs_) {
    InvocationReport& rep = inv.rep;
    rep.id = inv.id;
    rep.app = inv.g->app();
    rep.scale = inv.scale;
    rep.arrival_s = inv.arrival;
    rep.mem_gb_min = inv.alloc_byte_s / kByteSecondsPerGbMin;
    rep.mem_used_gb_min = inv.used_byte_s / kByteSecondsPerGbMin;
    rep.cpu_core_s = inv.alloc_core_s;
    rep.local_access_fraction = inv.volume > 0 ? inv.local_volume / inv.volume : 1.0;
    r.mem_gb_min += rep.mem_gb_min;
    r.mem_used_gb_min += rep.mem_used_gb_min;
    r.cpu_core_s += rep.cpu_core_s;
    r.cpu_used_core_s += rep.cpu_used_core_s;
    r.recoveries += rep.recoveries;
    local_sum += rep.local_access_fraction;
    e2e.push_back(rep.end_to_end_s);
    r.makespan_s = std::max(r.makespan_s, inv.arrival + rep.end_to_end_s);
    r.invocations.push_back(std::move(rep));
  }
  if (!invs_.empty()) r.local_access_fraction = local_sum / static_cast<double>(invs_.size());
  double sum = 0;
  for (double v : e2e) sum += v;
  r.end_to_end.mean = e2e.empty() ? 0 : sum / static_cast<double>(e2e.size());
  r.end_to_end.p50 = Percentile(e2e, 50);
  r.end_to_end.p99 = Percentile(e2e, 99);
  spdlog::info("run {} seed {}: {} invocations, {} events, {:.4f} GB*min", r.policy, r.seed,
               r.invocations.size(), r.events, r.mem_gb_min);
  return r;
}

}  // namespace

nlohmann::json RunReport::ToJson() const {
  nlohmann::json invs = nlohmann::json::array();
  for (const auto& i : invocations) {
    invs.push_back({{"id", i.id},
                    {"app", i.app},
                    {"scale", i.scale},
                    {"arrival_s", i.arrival_s},
                    {"end_to_end_s", i.end_to_end_s},
                    {"mem_gb_min", i.mem_gb_min},
                    {"mem_used_gb_min", i.mem_used_gb_min},
                    {"cpu_core_s", i.cpu_core_s},
                    {"cpu_used_core_s", i.cpu_used_core_s},
                    {"local_access_fraction", i.local_access_fraction},
                    {"startup_overhead_s", i.startup_overhead_s},
                    {"recoveries", i.recoveries},
                    {"work_completed_cpu_s", i.work_completed_cpu_s},
                    {"reexecuted_cpu_s", i.reexecuted_cpu_s},
                    {"executions", i.executions},
                    {"output_digest", i.output_digest}});
  }
  return {{"policy", policy},
          {"seed", seed},
          {"mem_gb_min", mem_gb_min},
          {"mem_used_gb_min", mem_used_gb_min},
          {"cpu_core_s", cpu_core_s},
          {"cpu_used_core_s", cpu_used_core_s},
          {"local_access_fraction", local_access_fraction},
          {"recoveries", recoveries},
          {"end_to_end_s", {{"mean", end_to_end.mean}, {"p50", end_to_end.p50}, {"p99", end_to_end.p99}}},
          {"events", events},
          {"decisions", decisions},
          {"compile_misses", compile_misses},
          {"compile_hits", compile_hits},
          {"scale_up_failures", scale_up_failures},
          {"swap_events", swap_events},
          {"makespan_s", makespan_s},
          {"invocations", invs}};
}

RunReport Run(const ClusterConfig& cluster, const Workload& workload, const SimOptions& options) {
  Simulator sim(cluster, workload, options);
  return sim.Run();
}

}  // namespace rcsim
