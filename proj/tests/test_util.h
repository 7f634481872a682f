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

#ifndef RCSIM_TESTS_TEST_UTIL_H_
#define RCSIM_TESTS_TEST_UTIL_H_

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rcsim/resource_graph.h"

namespace rcsim::testing {

inline std::string Name(int i) { return "c" + std::to_string(i); }

// Computes c0..c{n-1} with the given trigger edges; every compute does
// `work` CPU-seconds with `mem_mb` of local memory.
inline nlohmann::json DagSpec(const std::string& app, int n, const std::vector<std::pair<int, int>>& edges,
                              double work = 1.0, double mem_mb = 128) {
  nlohmann::json spec = {{"app", app}, {"computes", nlohmann::json::array()}, {"triggers", nlohmann::json::array()}};
  for (int i = 0; i < n; ++i) {
    spec["computes"].push_back({{"id", Name(i)}, {"base_work_cpu_s", work}, {"peak_mem_local_mb", mem_mb}});
  }
  for (const auto& [u, v] : edges) spec["triggers"].push_back({Name(u), Name(v)});
  return spec;
}

inline std::vector<std::pair<int, int>> ChainEdges(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n; ++i) e.emplace_back(i - 1, i);
  return e;
}

// Adds data component `id` of `size_mb` read by every compute in `readers`
// with `volume_mb` per instance.
inline void AddData(nlohmann::json& spec, const std::string& id, double size_mb, const std::vector<int>& readers,
                    double volume_mb) {
  if (!spec.contains("datas")) spec["datas"] = nlohmann::json::array();
  spec["datas"].push_back({{"id", id}, {"size_mb", size_mb}});
  for (int r : readers) {
    auto& c = spec["computes"][r];
    if (!c.contains("accesses")) c["accesses"] = nlohmann::json::array();
    c["accesses"].push_back({{"data", id}, {"volume_mb", volume_mb}});
  }
}

}  // namespace rcsim::testing

#endif  // RCSIM_TESTS_TEST_UTIL_H_
