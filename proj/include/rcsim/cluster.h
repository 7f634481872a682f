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

// Racks of servers with exact CPU/memory accounting. Every allocation is a
// physical component (a container or a fixed-size memory chunk) hosted on
// one server; servers also carry soft marks, which are low-priority
// reservations that never count toward allocation.

#ifndef RCSIM_CLUSTER_H_
#define RCSIM_CLUSTER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcsim/common.h"
#include "rcsim/resource_graph.h"

namespace rcsim {

struct ClusterConfig {
  std::vector<std::vector<Resources>> racks;  // server capacities per rack
  double link_gbps = 100;
  Bytes granule = 64 * kMiB;
  Bytes chunk_cap = kGiB;

  // 8 servers x 32 vCPU x 64 GB in one rack.
  static ClusterConfig Default();
  static ClusterConfig Uniform(int racks, int servers_per_rack, Resources server);
  static ClusterConfig FromJson(const nlohmann::json& j);
  static ClusterConfig Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
};

enum class PhysicalKind { kContainer, kMemoryChunk };
enum class AccessMode { kLocal, kRemote };
enum class PhysicalState { kPrelaunching, kRunning, kFinished, kFailed };

using PhysicalId = int64_t;

struct PhysicalComponent {
  PhysicalId id = 0;
  ComponentId virtual_id;
  int64_t invocation = -1;
  PhysicalKind kind = PhysicalKind::kContainer;
  int server = 0;
  Resources size;
  AccessMode mode = AccessMode::kLocal;
  PhysicalState state = PhysicalState::kRunning;

  bool live() const {
    return state == PhysicalState::kPrelaunching || state == PhysicalState::kRunning;
  }
};

// Metadata attached to an allocation.
struct AllocTag {
  ComponentId component;
  int64_t invocation = -1;
  PhysicalKind kind = PhysicalKind::kContainer;
  AccessMode mode = AccessMode::kLocal;
  PhysicalState state = PhysicalState::kRunning;
};

struct SoftMark {
  std::string app;
  int64_t invocation = -1;
  Resources amount;
};

struct Server {
  int id = 0;
  int rack = 0;
  Resources cap;
  Resources alloc;
  std::vector<SoftMark> soft_marks;
  std::set<PhysicalId> hosted;

  Resources free() const { return cap - alloc; }
};

class ClusterState {
 public:
  explicit ClusterState(const ClusterConfig& config);

  const ClusterConfig& config() const { return config_; }
  int num_servers() const { return static_cast<int>(servers_.size()); }
  int num_racks() const { return static_cast<int>(rack_servers_.size()); }
  const Server& server(int id) const;
  const std::vector<int>& rack_servers(int rack) const { return rack_servers_.at(rack); }

  // Allocates `size` on `server`. Without `preempt_soft` the request must fit
  // in capacity not soft-marked by other applications; with it, other
  // applications' marks are cleared (oldest first) until the request fits.
  // Returns nullopt, leaving every counter and mark untouched, when the
  // server lacks the physical capacity.
  std::optional<PhysicalId> TryAlloc(int server, Resources size, bool preempt_soft,
                                     const AllocTag& tag = {});

  // Changes the size of a live component in place. Growth obeys the same
  // soft-mark rules as TryAlloc. Returns false, with no change, if it does
  // not fit.
  bool Resize(PhysicalId id, Resources new_size, bool preempt_soft);

  // Throws kDoubleRelease on a component that is no longer live.
  void Release(PhysicalId id, PhysicalState final_state = PhysicalState::kFinished);

  void SetState(PhysicalId id, PhysicalState state);
  void SetMode(PhysicalId id, AccessMode mode);

  // cap - alloc. Throws kUnknownServer.
  Resources FreeResources(int server) const;
  // Sum of soft marks on `server` held by applications other than `app`.
  Resources MarkedByOthers(int server, std::string_view app) const;
  // Free capacity minus other applications' marks, floored at zero.
  Resources UnmarkedFree(int server, std::string_view app) const;

  void AddSoftMark(int server, SoftMark mark);
  // Drops every mark placed on behalf of `invocation`.
  void ClearSoftMarks(int64_t invocation);
  // Shrinks the marks `invocation` holds on `server` by `used`, floored at zero.
  void ConsumeSoftMark(int server, int64_t invocation, Resources used);

  const PhysicalComponent& physical(PhysicalId id) const;
  bool IsLive(PhysicalId id) const;
  size_t num_physical() const { return physical_.size(); }

  Resources TotalAlloc() const;
  Resources TotalCap() const;
  Resources RackFree(int rack) const;

  // Per-server alloc equals the sum over its hosted live components, and
  // alloc never exceeds capacity. Writes a diagnostic to `why` on failure.
  bool CheckConservation(std::string* why = nullptr) const;
  // When set, every mutation re-checks conservation and throws on violation.
  void set_check_invariants(bool on) { check_invariants_ = on; }
  // Called after every size change of a physical component: allocation
  // (old size zero), resize, and release (new size zero).
  using Listener = std::function<void(const PhysicalComponent&, Resources old_size, Resources new_size)>;
  void set_listener(Listener l) { listener_ = std::move(l); }
  uint64_t mutations() const { return mutations_; }

 private:
  Server& mutable_server(int id);
  PhysicalComponent& mutable_physical(PhysicalId id);
  bool FitsWithMarks(const Server& s, Resources need, std::string_view app) const;
  void PreemptMarks(Server& s, Resources need, std::string_view app);
  void AfterMutation();

  ClusterConfig config_;
  std::vector<Server> servers_;
  std::vector<std::vector<int>> rack_servers_;
  std::vector<PhysicalComponent> physical_;
  Listener listener_;
  bool check_invariants_ = false;
  uint64_t mutations_ = 0;
};

}  // namespace rcsim

#endif  // RCSIM_CLUSTER_H_
