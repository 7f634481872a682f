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

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.h"
#include "test_util.h"

namespace rcsim {
namespace {

using testing::ChainEdges;
using testing::DagSpec;

ErrorCode CodeOf(const nlohmann::json& spec) {
  try {
    BuildGraph(spec);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kInvalidArgument;
}

TEST(ResourceGraphTest, TwoNodeChainWithData) {
  auto spec = DagSpec("app", 2, {{0, 1}});
  testing::AddData(spec, "D", 64, {1}, 1);
  const ResourceGraph g = BuildGraph(spec);
  EXPECT_EQ(g.root(), 0);
  EXPECT_EQ(g.TopoOrder(), (std::vector<int>{0, 1}));
  ASSERT_EQ(g.num_components(), 3);
  EXPECT_TRUE(g.IsData(2));
  EXPECT_EQ(g.accessors(2), std::vector<int>{1});
  EXPECT_EQ(g.data(2).Size(1.0), 64 * kMiB);
}

TEST(ResourceGraphTest, CycleIsRejected) {
  EXPECT_EQ(CodeOf(DagSpec("app", 2, {{0, 1}, {1, 0}})), ErrorCode::kCyclicTriggers);
}

TEST(ResourceGraphTest, DanglingAccessIsRejected) {
  auto spec = DagSpec("app", 1, {});
  spec["computes"][0]["accesses"] = {{{"data", "nowhere"}, {"volume_mb", 1}}};
  EXPECT_EQ(CodeOf(spec), ErrorCode::kDanglingAccess);
}

TEST(ResourceGraphTest, TwoRootsAreRejected) {
  EXPECT_EQ(CodeOf(DagSpec("app", 3, {{0, 2}, {1, 2}})), ErrorCode::kNoRoot);
}

TEST(ResourceGraphTest, UnreadDataIsRejected) {
  auto spec = DagSpec("app", 1, {});
  spec["datas"] = {{{"id", "D"}, {"size_mb", 1}}};
  EXPECT_EQ(CodeOf(spec), ErrorCode::kConfigError);
}

TEST(ResourceGraphTest, DiamondOrderBreaksTiesByIndex) {
  const ResourceGraph g = BuildGraph(DagSpec("app", 4, {{0, 2}, {0, 1}, {1, 3}, {2, 3}}));
  EXPECT_EQ(g.TopoOrder(), (std::vector<int>{0, 1, 2, 3}));
}

TEST(ResourceGraphTest, ParallelismTableInterpolatesAndClamps) {
  auto spec = DagSpec("app", 1, {});
  spec["computes"][0]["parallelism"] = {{1, 3}, {1000, 120}};
  const ResourceGraph g = BuildGraph(spec);
  EXPECT_EQ(g.compute(0).Parallelism(1), 3);
  EXPECT_EQ(g.compute(0).Parallelism(1000), 120);
  EXPECT_EQ(g.compute(0).Parallelism(5000), 120);
  EXPECT_EQ(g.compute(0).Parallelism(0.5), 3);
}

TEST(ResourceGraphTest, FanOutStageHas122Computes) {
  // 5 stages: s0 -> s1 -> fan(120) -> s3 -> s4, collapsed at s3.
  const int fan = 120;
  nlohmann::json spec = {{"app", "fan"}, {"computes", nlohmann::json::array()}, {"datas", nlohmann::json::array()},
                         {"triggers", nlohmann::json::array()}};
  auto add = [&](const std::string& id) { spec["computes"].push_back({{"id", id}, {"base_work_cpu_s", 1}}); };
  add("s0");
  add("s1");
  for (int i = 0; i < fan; ++i) add("f" + std::to_string(i));
  add("s3");
  spec["triggers"].push_back({"s0", "s1"});
  for (int i = 0; i < fan; ++i) {
    const std::string f = "f" + std::to_string(i);
    spec["triggers"].push_back({"s1", f});
    spec["triggers"].push_back({f, "s3"});
    spec["datas"].push_back({{"id", "d" + std::to_string(i)}, {"size_mb", 8}});
    spec["computes"][2 + i]["accesses"] = {{{"data", "d" + std::to_string(i)}, {"volume_mb", 1}}};
  }
  const ResourceGraph g = BuildGraph(spec);
  EXPECT_EQ(g.num_computes(), 1 + 1 + fan + 1);
  EXPECT_EQ(g.num_components() - g.num_computes(), fan);

  // Independent check: every compute reachable from the root by brute force.
  std::vector<bool> seen(g.num_computes(), false);
  seen[g.root()] = true;
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& t : g.triggers()) {
      if (seen[t.src] && !seen[t.dst]) seen[t.dst] = grew = true;
    }
  }
  for (bool s : seen) EXPECT_TRUE(s);
}

TEST(ResourceGraphTest, RandomDagOrderMatchesKahnOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto edges = oracle::RandomRootedDag(50, 0.05, rng);
    const ResourceGraph g = BuildGraph(DagSpec("dag", 50, edges));
    EXPECT_EQ(g.TopoOrder(), oracle::KahnOrder(50, edges));
    std::vector<int> pos(50);
    for (int i = 0; i < 50; ++i) pos[g.TopoOrder()[i]] = i;
    for (const auto& [u, v] : edges) EXPECT_LT(pos[u], pos[v]);
  }
}

TEST(ResourceGraphTest, CutOnChain) {
  const ResourceGraph g = BuildGraph(DagSpec("chain", 3, ChainEdges(3)));
  // Edges: 0 = c0->c1, 1 = c1->c2, 2 = exit of c2.
  auto cut = GraphCutBefore(g, std::set<int>{0});
  EXPECT_EQ(cut.prefix, std::vector<int>{0});
  EXPECT_EQ(cut.frontier, std::vector<int>{1});
  cut = GraphCutBefore(g, std::set<int>{0, 1});
  EXPECT_EQ(cut.prefix, (std::vector<int>{0, 1}));
  EXPECT_EQ(cut.frontier, std::vector<int>{2});
  cut = GraphCutBefore(g, std::set<int>{});
  EXPECT_TRUE(cut.prefix.empty());
  EXPECT_EQ(cut.frontier, std::vector<int>{0});
  cut = GraphCutBefore(g, std::set<int>{0, 1, 2});
  EXPECT_EQ(cut.prefix, (std::vector<int>{0, 1, 2}));
  EXPECT_TRUE(cut.frontier.empty());
}

TEST(ResourceGraphTest, RandomCutsMatchBruteForce) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);  // up to 20 nodes
    const auto edges = oracle::RandomRootedDag(n, 0.15, rng);
    const ResourceGraph g = BuildGraph(DagSpec("dag", n, edges));
    std::vector<bool> recorded(g.num_edges());
    for (size_t e = 0; e < recorded.size(); ++e) recorded[e] = rng() % 3 != 0;
    EXPECT_EQ(GraphCutBefore(g, recorded).in_prefix, oracle::BruteForceCut(n, edges, recorded)) << "trial " << trial;
  }
}

TEST(ResourceGraphTest, BuildIsDeterministic) {
  const auto spec = DagSpec("app", 5, {{0, 1}, {0, 2}, {2, 3}, {1, 4}});
  const std::string text = spec.dump();
  const ResourceGraph a = BuildGraphFromText(text);
  const ResourceGraph b = BuildGraphFromText(text);
  EXPECT_EQ(a.TopoOrder(), b.TopoOrder());
  EXPECT_EQ(a.sinks(), b.sinks());
  EXPECT_EQ(a.num_edges(), b.num_edges());
}

}  // namespace
}  // namespace rcsim
