// Copyright 2026 The Authors.
//
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

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "partconf/cover.hpp"
#include "test_util.hpp"

using namespace partconf;
using testutil::DatasetBuilder;
using testutil::expect_error;

namespace {

using GammaMap = std::map<PatchId, std::set<PatchId>>;
using EdgeSet = std::set<std::pair<PatchId, PatchId>>;

CoverGraph make_cover(const GammaMap& gamma) {
  std::set<PatchId> u;
  std::map<PatchId, std::vector<PatchId>> adj;
  for (const auto& [b, g] : gamma) {
    adj[b] = {g.begin(), g.end()};
    u.insert(g.begin(), g.end());
  }
  return CoverGraph({u.begin(), u.end()}, adj);
}

ConstraintGraph make_constraints(const CoverGraph& g, const EdgeSet& edges) {
  ConstraintGraph c({g.nodes().begin(), g.nodes().end()});
  for (const auto& [a, b] : edges) c.add_edge(a, b);
  return c;
}

struct Instance {
  GammaMap gamma;
  EdgeSet edges;
};

Instance random_instance(std::mt19937_64& rng, std::size_t nv, std::size_t nu, double p_cover,
                         double p_edge) {
  std::bernoulli_distribution cover(p_cover), edge(p_edge);
  Instance in;
  for (std::size_t b = 0; b < nv; ++b) {
    auto& g = in.gamma[static_cast<PatchId>(b)];
    for (std::size_t u = 0; u < nu; ++u) {
      if (cover(rng)) g.insert(static_cast<PatchId>(100 + u));
    }
  }
  for (std::size_t a = 0; a < nv; ++a) {
    for (std::size_t b = a + 1; b < nv; ++b) {
      if (edge(rng)) in.edges.emplace(a, b);
    }
  }
  return in;
}

// Cover graph from neighborhoods: three positive images, two negative ones.
TEST(CoverGraph, GammaKeepsOnlyPositiveNeighbors) {
  DatasetBuilder b;
  for (ImageId i = 0; i < 6; ++i) b.image(i, i < 4 ? Label::kPositive : Label::kNegative);
  // Query 1 is identical to a patch in every other image.
  b.patch(1, 0, Box{0, 5, 0, 5}, {1, 0});
  b.patch(2, 1, Box{0, 5, 0, 5}, {1, 0});
  b.patch(3, 2, Box{0, 5, 0, 5}, {1, 0});
  b.patch(4, 3, Box{0, 5, 0, 5}, {1, 0});
  b.patch(5, 4, Box{0, 5, 0, 5}, {1, 0});
  b.patch(6, 5, Box{0, 5, 0, 5}, {1, 0});
  // Query 7 matches only the negative images exactly.
  b.patch(7, 0, Box{0, 5, 0, 5}, {0, 1});
  b.patch(8, 4, Box{0, 5, 0, 5}, {0, 1});
  b.patch(9, 5, Box{0, 5, 0, 5}, {0, 1});
  const auto d = b.build();

  // K = 5 covers every other image; 3 of the 5 matches are positive.
  auto g = build_cover_graph(build_neighborhoods(d, 5), d);
  auto gamma1 = g.gamma(g.require_index(1));
  EXPECT_EQ(std::vector<PatchId>(gamma1.begin(), gamma1.end()), (std::vector<PatchId>{2, 3, 4}));

  // K = 2: both nearest foreign images of query 7 are negative.
  g = build_cover_graph(build_neighborhoods(d, 2), d);
  EXPECT_EQ(g.gamma(g.require_index(7)).size(), 0u);

  // K = 3 with all positive: |Gamma| = K.
  g = build_cover_graph(build_neighborhoods(d, 3), d);
  EXPECT_EQ(g.gamma(g.require_index(2)).size(), 3u);
  EXPECT_FALSE(g.index_of(5).has_value());
}

TEST(Coverage, UnionSize) {
  const auto g = make_cover({{1, {10, 11}}, {2, {11, 12}}, {3, {10}}});
  const std::vector<PatchId> s{1, 2};
  EXPECT_EQ(coverage(g, s), 3u);
  EXPECT_EQ(coverage(g, std::vector<PatchId>{}), 0u);
}

TEST(Greedy, PicksLargestGainThenSmallestId) {
  const GammaMap gamma{{1, {10, 11}}, {2, {10, 11}}, {3, {12}}, {4, {11}}};
  const auto g = make_cover(gamma);
  const auto s = greedy_select(g, make_constraints(g, {}));
  EXPECT_EQ(s.selected, (std::vector<PatchId>{1, 3}));
  EXPECT_EQ(s.value, 3u);
  EXPECT_EQ(s.gains, (std::vector<std::size_t>{2, 1}));
}

// A hub that conflicts with every leaf: greedy takes the hub, the optimum
// takes the leaves.
TEST(Greedy, StarShowsApproximationGap) {
  const GammaMap gamma{{0, {10, 11, 12}}, {1, {10, 20}}, {2, {11, 21}}, {3, {12, 22}}};
  const EdgeSet edges{{0, 1}, {0, 2}, {0, 3}};
  const auto g = make_cover(gamma);
  const auto c = make_constraints(g, edges);
  const auto s = greedy_select(g, c);
  EXPECT_EQ(s.selected, (std::vector<PatchId>{0}));
  EXPECT_EQ(s.value, 3u);
  const auto best = brute_force_select(g, c);
  EXPECT_EQ(best.value, 6u);
  EXPECT_EQ(best.selected, (std::vector<PatchId>{1, 2, 3}));
  EXPECT_GE(s.value * (c.max_degree() + 2), best.value);
}

TEST(Greedy, NoConstraintsRespectsMaxClusters) {
  const GammaMap gamma{{1, {10}}, {2, {11}}, {3, {12}}, {4, {}}};
  const auto g = make_cover(gamma);
  const auto c = make_constraints(g, {});
  EXPECT_EQ(greedy_select(g, c).selected, (std::vector<PatchId>{1, 2, 3}));
  EXPECT_EQ(greedy_select(g, c, 2).selected, (std::vector<PatchId>{1, 2}));
  EXPECT_EQ(greedy_select(g, c, 0).selected.size(), 0u);
}

TEST(Greedy, LazyMatchesNaiveOnRandomInstances) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 400; ++trial) {
    const auto in = random_instance(rng, 1 + trial % 15, 1 + trial % 25, 0.25, 0.2);
    const auto g = make_cover(in.gamma);
    const auto c = make_constraints(g, in.edges);
    std::optional<std::size_t> cap;
    if (trial % 3 == 0) cap = 1 + trial % 4;
    const auto lazy = greedy_select(g, c, cap);
    const auto naive = oracle::naive_greedy(in.gamma, in.edges, cap);
    ASSERT_EQ(lazy.selected, naive.selected) << "trial " << trial;
    EXPECT_EQ(lazy.gains, naive.gains);
    EXPECT_EQ(lazy.value, naive.value);
    EXPECT_EQ(lazy.value, oracle::coverage(in.gamma, lazy.selected));
    EXPECT_TRUE(c.is_independent(lazy.selected));
    for (std::size_t i = 1; i < lazy.gains.size(); ++i) EXPECT_LE(lazy.gains[i], lazy.gains[i - 1]);
  }
}

TEST(BruteForce, MatchesSubsetEnumeration) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng, 1 + trial % 10, 1 + trial % 20, 0.3, 0.3);
    const auto g = make_cover(in.gamma);
    const auto c = make_constraints(g, in.edges);
    const auto best = brute_force_select(g, c);
    EXPECT_EQ(best.value, oracle::exhaustive_optimum(in.gamma, in.edges));
    EXPECT_TRUE(c.is_independent(best.selected));
  }
}

TEST(BruteForce, RefusesLargeInstances) {
  GammaMap gamma;
  for (PatchId b = 0; b < 21; ++b) gamma[b] = {100 + b};
  const auto g = make_cover(gamma);
  expect_error([&] { brute_force_select(g, make_constraints(g, {})); }, ErrorKind::kInvalidArgument,
               "limited to 20");
}

TEST(ConstraintGraph, SelfLoopAndDuplicateEdges) {
  ConstraintGraph c({1, 2, 3});
  c.add_edge(1, 2);
  c.add_edge(2, 1);
  EXPECT_EQ(c.edge_count(), 1u);
  EXPECT_EQ(c.max_degree(), 1u);
  expect_error([&] { c.add_edge(3, 3); }, ErrorKind::kInvalidArgument, "self-loop");
}

// Candidates 1 and 2 have neighborhoods that overlap at two images; 3 has a
// neighborhood at a different location.
TEST(ConstraintGraph, EdgeWhenOverlapCountExceedsTheta) {
  DatasetBuilder b;
  for (ImageId i = 0; i < 4; ++i) b.image(i, Label::kPositive);
  b.patch(1, 0, Box{0, 10, 0, 10}, {1, 0});
  b.patch(2, 0, Box{50, 60, 50, 60}, {1, 0});
  b.patch(3, 0, Box{80, 90, 80, 90}, {1, 0});
  b.patch(11, 1, Box{0, 10, 0, 10}, {1, 0});
  b.patch(12, 1, Box{1, 10, 0, 10}, {1, 0});
  b.patch(21, 2, Box{0, 10, 0, 10}, {1, 0});
  b.patch(22, 2, Box{0, 10, 1, 10}, {1, 0});
  b.patch(31, 3, Box{0, 10, 0, 10}, {1, 0});
  b.patch(32, 3, Box{60, 70, 60, 70}, {1, 0});
  const auto d = b.build();
  std::map<PatchId, std::vector<PatchId>> adj{{1, {11, 21, 31}}, {2, {12, 22, 32}}, {3, {32}}};
  const CoverGraph g({11, 12, 21, 22, 31, 32}, adj);

  EXPECT_EQ(neighborhood_overlap(g, d, 0, 1, 0.5), 2u);
  EXPECT_EQ(neighborhood_overlap(g, d, 1, 2, 0.5), 1u);

  const auto c1 = build_constraint_graph(g, d, 1, 0.5);
  EXPECT_TRUE(c1.adjacent(0, 1));
  EXPECT_FALSE(c1.adjacent(1, 2));
  EXPECT_EQ(c1.edge_count(), 1u);

  const auto c0 = build_constraint_graph(g, d, 0, 0.5);
  EXPECT_TRUE(c0.adjacent(1, 2));
  EXPECT_FALSE(c0.adjacent(0, 2));

  const auto c2 = build_constraint_graph(g, d, 2, 0.5);
  EXPECT_EQ(c2.edge_count(), 0u);
}

}  // namespace
