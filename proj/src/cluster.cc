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

#include "rcsim/cluster.h"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rcsim {

ClusterConfig ClusterConfig::Default() { return Uniform(1, 8, {32, 64 * kGiB}); }

ClusterConfig ClusterConfig::Uniform(int racks, int servers_per_rack, Resources server) {
  ClusterConfig c;
  c.racks.assign(racks, std::vector<Resources>(servers_per_rack, server));
  return c;
}

ClusterConfig ClusterConfig::FromJson(const nlohmann::json& j) {
  ClusterConfig c;
  try {
    for (const auto& jr : j.at("racks")) {
      std::vector<Resources> rack;
      for (const auto& js : jr.at("servers")) {
        Resources r{js.at("cpu").get<int>(), MiB(js.at("mem_mb").get<double>())};
        if (r.cpu < 1 || r.mem <= 0) throw Error(ErrorCode::kConfigError, "server capacity must be positive");
        rack.push_back(r);
      }
      if (rack.empty()) throw Error(ErrorCode::kConfigError, "rack without servers");
      c.racks.push_back(std::move(rack));
    }
    c.link_gbps = j.value("link_gbps", c.link_gbps);
    if (j.contains("granule_mb")) c.granule = MiB(j["granule_mb"].get<double>());
    if (j.contains("chunk_cap_mb")) c.chunk_cap = MiB(j["chunk_cap_mb"].get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("malformed cluster config: ") + e.what());
  }
  if (c.racks.empty()) throw Error(ErrorCode::kConfigError, "cluster config without racks");
  if (!(c.link_gbps > 0)) throw Error(ErrorCode::kConfigError, "link_gbps must be > 0");
  if (c.granule <= 0 || c.chunk_cap < c.granule || c.chunk_cap % c.granule != 0) {
    throw Error(ErrorCode::kConfigError, "chunk_cap_mb must be a positive multiple of granule_mb");
  }
  return c;
}

ClusterConfig ClusterConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + " does not parse: " + e.what());
  }
  return FromJson(j);
}

nlohmann::json ClusterConfig::ToJson() const {
  nlohmann::json racks_json = nlohmann::json::array();
  for (const auto& rack : racks) {
    nlohmann::json servers = nlohmann::json::array();
    for (const auto& s : rack) servers.push_back({{"cpu", s.cpu}, {"mem_mb", ToMiB(s.mem)}});
    racks_json.push_back({{"servers", servers}});
  }
  return {{"racks", racks_json},
          {"link_gbps", link_gbps},
          {"granule_mb", ToMiB(granule)},
          {"chunk_cap_mb", ToMiB(chunk_cap)}};
}

ClusterState::ClusterState(const ClusterConfig& config) : config_(config) {
  for (size_t r = 0; r < config_.racks.size(); ++r) {
    rack_servers_.emplace_back();
    for (const auto& cap : config_.racks[r]) {
      Server s;
      s.id = static_cast<int>(servers_.size());
      s.rack = static_cast<int>(r);
      s.cap = cap;
      rack_servers_.back().push_back(s.id);
      servers_.push_back(std::move(s));
    }
  }
}

const Server& ClusterState::server(int id) const {
  if (id < 0 || id >= num_servers()) {
    throw Error(ErrorCode::kUnknownServer, "server " + std::to_string(id));
  }
  return servers_[id];
}

Server& ClusterState::mutable_server(int id) {
  return const_cast<Server&>(static_cast<const ClusterState*>(this)->server(id));
}

const PhysicalComponent& ClusterState::physical(PhysicalId id) const {
  if (id < 0 || id >= static_cast<PhysicalId>(physical_.size())) {
    throw Error(ErrorCode::kInvalidArgument, "unknown physical component " + std::to_string(id));
  }
  return physical_[id];
}

PhysicalComponent& ClusterState::mutable_physical(PhysicalId id) {
  return const_cast<PhysicalComponent&>(static_cast<const ClusterState*>(this)->physical(id));
}

bool ClusterState::IsLive(PhysicalId id) const { return physical(id).live(); }

Resources ClusterState::FreeResources(int server_id) const { return server(server_id).free(); }

Resources ClusterState::MarkedByOthers(int server_id, std::string_view app) const {
  Resources marked;
  for (const auto& m : server(server_id).soft_marks) {
    if (m.app != app) marked += m.amount;
  }
  return marked;
}

Resources ClusterState::UnmarkedFree(int server_id, std::string_view app) const {
  const Resources f = FreeResources(server_id) - MarkedByOthers(server_id, app);
  return {std::max(0, f.cpu), std::max<Bytes>(0, f.mem)};
}

bool ClusterState::FitsWithMarks(const Server& s, Resources need, std::string_view app) const {
  return UnmarkedFree(s.id, app).Fits(need);
}

void ClusterState::PreemptMarks(Server& s, Resources need, std::string_view app) {
  auto it = s.soft_marks.begin();
  while (!FitsWithMarks(s, need, app) && it != s.soft_marks.end()) {
    if (it->app != app) {
      it = s.soft_marks.erase(it);
    } else {
      ++it;
    }
  }
}

std::optional<PhysicalId> ClusterState::TryAlloc(int server_id, Resources size, bool preempt_soft,
                                                 const AllocTag& tag) {
  if (size.cpu < 0 || size.mem < 0) throw Error(ErrorCode::kInvalidArgument, "negative request");
  if (tag.kind == PhysicalKind::kContainer && size.cpu < 1) {
    throw Error(ErrorCode::kInvalidArgument, "containers need at least one vCPU");
  }
  if (tag.kind == PhysicalKind::kMemoryChunk &&
      (size.cpu != 0 || size.mem % config_.granule != 0 || size.mem > config_.chunk_cap)) {
    throw Error(ErrorCode::kInvalidArgument, "memory chunks are cpu-free granule multiples within the cap");
  }
  Server& s = mutable_server(server_id);
  if (!s.free().Fits(size)) return std::nullopt;
  if (!FitsWithMarks(s, size, tag.component.app)) {
    if (!preempt_soft) return std::nullopt;
    PreemptMarks(s, size, tag.component.app);
  }
  PhysicalComponent pc;
  pc.id = static_cast<PhysicalId>(physical_.size());
  pc.virtual_id = tag.component;
  pc.invocation = tag.invocation;
  pc.kind = tag.kind;
  pc.server = server_id;
  pc.size = size;
  pc.mode = tag.mode;
  pc.state = tag.state;
  s.alloc += size;
  s.hosted.insert(pc.id);
  physical_.push_back(std::move(pc));
  AfterMutation();
  if (listener_) listener_(physical_.back(), Resources{}, size);
  return physical_.back().id;
}

bool ClusterState::Resize(PhysicalId id, Resources new_size, bool preempt_soft) {
  PhysicalComponent& pc = mutable_physical(id);
  if (!pc.live()) throw Error(ErrorCode::kInvalidArgument, "resize of a released component");
  if (new_size.cpu < 0 || new_size.mem < 0) throw Error(ErrorCode::kInvalidArgument, "negative size");
  if (pc.kind == PhysicalKind::kContainer && new_size.cpu < 1) {
    throw Error(ErrorCode::kInvalidArgument, "containers need at least one vCPU");
  }
  Server& s = mutable_server(pc.server);
  const Resources growth{std::max(0, new_size.cpu - pc.size.cpu),
                         std::max<Bytes>(0, new_size.mem - pc.size.mem)};
  if (!s.free().Fits(growth)) return false;
  if (!FitsWithMarks(s, growth, pc.virtual_id.app)) {
    if (!preempt_soft) return false;
    PreemptMarks(s, growth, pc.virtual_id.app);
  }
  const Resources old_size = pc.size;
  s.alloc -= pc.size;
  s.alloc += new_size;
  pc.size = new_size;
  AfterMutation();
  if (listener_) listener_(pc, old_size, new_size);
  return true;
}

void ClusterState::Release(PhysicalId id, PhysicalState final_state) {
  PhysicalComponent& pc = mutable_physical(id);
  if (!pc.live()) {
    throw Error(ErrorCode::kDoubleRelease, "physical component " + std::to_string(id));
  }
  Server& s = mutable_server(pc.server);
  s.alloc -= pc.size;
  s.hosted.erase(id);
  pc.state = final_state == PhysicalState::kFailed ? PhysicalState::kFailed : PhysicalState::kFinished;
  AfterMutation();
  if (listener_) listener_(pc, pc.size, Resources{});
}

void ClusterState::SetState(PhysicalId id, PhysicalState state) {
  PhysicalComponent& pc = mutable_physical(id);
  if (!pc.live()) throw Error(ErrorCode::kInvalidArgument, "state change on a released component");
  if (state != PhysicalState::kPrelaunching && state != PhysicalState::kRunning) {
    throw Error(ErrorCode::kInvalidArgument, "use Release to finish a component");
  }
  pc.state = state;
}

void ClusterState::SetMode(PhysicalId id, AccessMode mode) { mutable_physical(id).mode = mode; }

void ClusterState::AddSoftMark(int server_id, SoftMark mark) {
  mutable_server(server_id).soft_marks.push_back(std::move(mark));
}

void ClusterState::ClearSoftMarks(int64_t invocation) {
  for (auto& s : servers_) {
    std::erase_if(s.soft_marks, [&](const SoftMark& m) { return m.invocation == invocation; });
  }
}

void ClusterState::ConsumeSoftMark(int server_id, int64_t invocation, Resources used) {
  auto& marks = mutable_server(server_id).soft_marks;
  for (auto& m : marks) {
    if (m.invocation != invocation) continue;
    const int cpu = std::min(m.amount.cpu, used.cpu);
    const Bytes mem = std::min(m.amount.mem, used.mem);
    m.amount -= Resources{cpu, mem};
    used -= Resources{cpu, mem};
  }
  std::erase_if(marks, [&](const SoftMark& m) {
    return m.invocation == invocation && m.amount.cpu <= 0 && m.amount.mem <= 0;
  });
}

Resources ClusterState::TotalAlloc() const {
  Resources total;
  for (const auto& s : servers_) total += s.alloc;
  return total;
}

Resources ClusterState::TotalCap() const {
  Resources total;
  for (const auto& s : servers_) total += s.cap;
  return total;
}

Resources ClusterState::RackFree(int rack) const {
  Resources total;
  for (int id : rack_servers(rack)) total += servers_[id].free();
  return total;
}

bool ClusterState::CheckConservation(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (const auto& s : servers_) {
    Resources sum;
    for (PhysicalId id : s.hosted) {
      const auto& pc = physical_[id];
      if (!pc.live()) return fail("server " + std::to_string(s.id) + " hosts released component");
      if (pc.server != s.id) return fail("component hosted on the wrong server");
      sum += pc.size;
    }
    if (!(sum == s.alloc)) return fail("server " + std::to_string(s.id) + " alloc != hosted sum");
    if (!s.cap.Fits(s.alloc) || s.alloc.cpu < 0 || s.alloc.mem < 0) {
      return fail("server " + std::to_string(s.id) + " overcommitted");
    }
  }
  return true;
}

void ClusterState::AfterMutation() {
  ++mutations_;
  if (!check_invariants_) return;
  std::string why;
  if (!CheckConservation(&why)) throw Error(ErrorCode::kInvalidArgument, "accounting invariant: " + why);
}

}  // namespace rcsim
