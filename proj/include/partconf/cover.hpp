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

// Coverage maximization over the independent sets of a conflict graph.
//
// The utility F(S) = |Gamma(S)| counts the distinct patches reached from the
// selected candidates in a bipartite graph. F is monotone submodular and the
// feasible family (independent sets of the conflict graph) is an intersection
// of (max degree + 1) partition matroids, so the greedy below is a
// 1/(max degree + 2) approximation. Membership in that intersection is just
// independence, which the greedy maintains by deleting conflicting candidates.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "partconf/error.hpp"
#include "partconf/features.hpp"
#include "partconf/geom.hpp"
#include "partconf/parallel.hpp"

namespace partconf {

// Bipartite graph between candidates V and covered patches U.
class CoverGraph {
 public:
  CoverGraph() = default;

  // `universe` is U; `adjacency` maps every candidate in V to Gamma(b) within U.
  CoverGraph(std::vector<PatchId> universe,
             const std::map<PatchId, std::vector<PatchId>>& adjacency)
      : universe_(std::move(universe)) {
    std::sort(universe_.begin(), universe_.end());
    universe_.erase(std::unique(universe_.begin(), universe_.end()), universe_.end());
    for (std::size_t i = 0; i < universe_.size(); ++i) {
      universe_index_.emplace(universe_[i], static_cast<std::uint32_t>(i));
    }
    nodes_.reserve(adjacency.size());
    for (const auto& [b, targets] : adjacency) {
      node_index_.emplace(b, nodes_.size());
      nodes_.push_back(b);
      std::vector<PatchId> g = targets;
      std::sort(g.begin(), g.end());
      g.erase(std::unique(g.begin(), g.end()), g.end());
      std::vector<std::uint32_t> dense;
      dense.reserve(g.size());
      for (PatchId u : g) {
        auto it = universe_index_.find(u);
        if (it == universe_index_.end()) {
          fail(ErrorKind::kInvalidArgument, "Gamma(" + std::to_string(b) +
                                                ") contains " + std::to_string(u) +
                                                " outside U");
        }
        dense.push_back(it->second);
      }
      gamma_.push_back(std::move(g));
      gamma_dense_.push_back(std::move(dense));
    }
  }

  std::size_t size() const { return nodes_.size(); }
  std::span<const PatchId> nodes() const { return nodes_; }
  std::span<const PatchId> universe() const { return universe_; }
  std::span<const PatchId> gamma(std::size_t node) const { return gamma_[node]; }
  std::span<const std::uint32_t> gamma_dense(std::size_t node) const {
    return gamma_dense_[node];
  }

  std::optional<std::size_t> index_of(PatchId b) const {
    auto it = node_index_.find(b);
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require_index(PatchId b) const {
    auto idx = index_of(b);
    if (!idx) fail(ErrorKind::kInvalidArgument, "unknown candidate " + std::to_string(b));
    return *idx;
  }

  friend bool operator==(const CoverGraph& a, const CoverGraph& b) {
    return a.nodes_ == b.nodes_ && a.universe_ == b.universe_ && a.gamma_ == b.gamma_;
  }

 private:
  std::vector<PatchId> nodes_;
  std::vector<PatchId> universe_;
  std::vector<std::vector<PatchId>> gamma_;
  std::vector<std::vector<std::uint32_t>> gamma_dense_;
  std::unordered_map<PatchId, std::size_t> node_index_;
  std::unordered_map<PatchId, std::uint32_t> universe_index_;
};

// Undirected conflict graph over the candidates of a CoverGraph.
class ConstraintGraph {
 public:
  ConstraintGraph() = default;
  explicit ConstraintGraph(std::vector<PatchId> nodes) : nodes_(std::move(nodes)) {
    adjacency_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i], i);
  }

  void add_edge(PatchId a, PatchId b) { add_edge_index(require_index(a), require_index(b)); }

  void add_edge_index(std::size_t i, std::size_t j) {
    if (i == j) fail(ErrorKind::kInvalidArgument, "self-loop in constraint graph");
    if (insert_sorted(adjacency_[i], j)) {
      insert_sorted(adjacency_[j], i);
      ++edge_count_;
      max_degree_ = std::max({max_degree_, adjacency_[i].size(), adjacency_[j].size()});
    }
  }

  std::size_t size() const { return nodes_.size(); }
  std::span<const PatchId> nodes() const { return nodes_; }
  std::span<const std::size_t> neighbors(std::size_t i) const { return adjacency_[i]; }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t max_degree() const { return max_degree_; }

  bool adjacent(std::size_t i, std::size_t j) const {
    return std::binary_search(adjacency_[i].begin(), adjacency_[i].end(), j);
  }

  std::size_t require_index(PatchId b) const {
    auto it = index_.find(b);
    if (it == index_.end()) fail(ErrorKind::kInvalidArgument, "unknown node " + std::to_string(b));
    return it->second;
  }

  // True when no two of the given ids are adjacent.
  bool is_independent(std::span<const PatchId> ids) const {
    std::vector<std::size_t> idx;
    for (PatchId b : ids) idx.push_back(require_index(b));
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t c = a + 1; c < idx.size(); ++c) {
        if (adjacent(idx[a], idx[c])) return false;
      }
    }
    return true;
  }

 private:
  static bool insert_sorted(std::vector<std::size_t>& v, std::size_t x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) return false;
    v.insert(it, x);
    return true;
  }

  std::vector<PatchId> nodes_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::unordered_map<PatchId, std::size_t> index_;
  std::size_t edge_count_ = 0;
  std::size_t max_degree_ = 0;
};

struct Selection {
  std::vector<PatchId> selected;  // in pick order
  std::size_t value = 0;          // F(selected)
  std::vector<std::size_t> gains; // marginal gain of each pick
  friend bool operator==(const Selection&, const Selection&) = default;
};

// V = every patch of a positive image; Gamma(b) = members of N(b) that lie in
// positive images. Patches without a neighborhood get an empty Gamma.
inline CoverGraph build_cover_graph(const NeighborhoodMap& neighborhoods, const Dataset& d) {
  std::vector<PatchId> positive_patches;
  for (const auto& p : d.patches()) {
    if (d.image(p.image_id).label == Label::kPositive) positive_patches.push_back(p.patch_id);
  }
  std::map<PatchId, std::vector<PatchId>> adjacency;
  for (PatchId b : positive_patches) {
    auto& g = adjacency[b];
    auto it = neighborhoods.find(b);
    if (it == neighborhoods.end()) continue;
    for (const auto& n : it->second.neighbors) {
      if (d.is_positive_patch(n.patch_id)) g.push_back(n.patch_id);
    }
  }
  return CoverGraph(std::move(positive_patches), adjacency);
}

// F(S) = |union of Gamma(b) for b in S|.
inline std::size_t coverage(const CoverGraph& g, std::span<const PatchId> selection) {
  std::vector<char> hit(g.universe().size(), 0);
  std::size_t total = 0;
  for (PatchId b : selection) {
    for (std::uint32_t u : g.gamma_dense(g.require_index(b))) {
      if (!hit[u]) {
        hit[u] = 1;
        ++total;
      }
    }
  }
  return total;
}

// Number of members of Gamma(from) that have a partner in Gamma(to) from the
// same image with IoU >= iou_min.
inline std::size_t neighborhood_overlap(const CoverGraph& g, const Dataset& d,
                                        std::size_t from, std::size_t to, double iou_min) {
  std::size_t count = 0;
  for (PatchId u : g.gamma(from)) {
    const auto& pu = d.patch(u);
    for (PatchId v : g.gamma(to)) {
      const auto& pv = d.patch(v);
      if (pu.image_id == pv.image_id && iou(pu.box, pv.box) >= iou_min) {
        ++count;
        break;
      }
    }
  }
  return count;
}

// Edge (b, b') when the larger of the two directed overlap counts exceeds
// theta. theta is an absolute member count.
inline ConstraintGraph build_constraint_graph(const CoverGraph& g, const Dataset& d,
                                              std::size_t theta, double iou_min) {
  const std::size_t n = g.size();
  // Image sets of each Gamma, to skip pairs that cannot overlap.
  std::vector<std::vector<ImageId>> images(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (PatchId u : g.gamma(i)) images[i].push_back(d.patch(u).image_id);
    std::sort(images[i].begin(), images[i].end());
    images[i].erase(std::unique(images[i].begin(), images[i].end()), images[i].end());
  }
  auto shares_image = [&](std::size_t a, std::size_t b) {
    auto ia = images[a].begin();
    auto ib = images[b].begin();
    while (ia != images[a].end() && ib != images[b].end()) {
      if (*ia == *ib) return true;
      if (*ia < *ib) ++ia; else ++ib;
    }
    return false;
  };

  // A directed count is bounded by |Gamma(from)|, so it is only evaluated when
  // it can exceed theta.
  std::vector<std::vector<std::size_t>> rows(n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!shares_image(i, j)) continue;
      const bool edge =
          (g.gamma(i).size() > theta && neighborhood_overlap(g, d, i, j, iou_min) > theta) ||
          (g.gamma(j).size() > theta && neighborhood_overlap(g, d, j, i, iou_min) > theta);
      if (edge) rows[i].push_back(j);
    }
  });

  ConstraintGraph c(std::vector<PatchId>(g.nodes().begin(), g.nodes().end()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : rows[i]) c.add_edge_index(i, j);
  }
  return c;
}

// Greedy maximization of F over independent sets of `c`: pick the candidate
// with the largest marginal gain (smallest id on ties), delete its conflict
// neighbors, repeat until no candidate remains, the gain drops to zero, or
// `max_clusters` picks were made.
//
// Marginal gains are re-evaluated lazily from a max-heap of stale upper
// bounds, which is exact because gains only shrink as coverage grows.
inline Selection greedy_select(const CoverGraph& g, const ConstraintGraph& c,
                               std::optional<std::size_t> max_clusters = std::nullopt) {
  const std::size_t n = g.size();
  if (c.size() != n) fail(ErrorKind::kInvalidArgument, "graphs do not share V");
  for (std::size_t i = 0; i < n; ++i) {
    if (g.nodes()[i] != c.nodes()[i]) fail(ErrorKind::kInvalidArgument, "graphs do not share V");
  }

  struct Entry {
    std::size_t bound;
    PatchId id;
    std::size_t node;
    std::size_t stamp;
    // Max-heap on bound, then min-heap on id.
    bool operator<(const Entry& o) const {
      if (bound != o.bound) return bound < o.bound;
      return id > o.id;
    }
  };

  std::priority_queue<Entry> heap;
  for (std::size_t i = 0; i < n; ++i) heap.push(Entry{g.gamma(i).size(), g.nodes()[i], i, 0});

  std::vector<char> removed(n, 0);
  std::vector<char> covered(g.universe().size(), 0);
  Selection out;
  std::size_t round = 0;
  const std::size_t limit = max_clusters.value_or(n);

  while (!heap.empty() && out.selected.size() < limit) {
    Entry top = heap.top();
    heap.pop();
    if (removed[top.node]) continue;
    if (top.stamp != round) {
      std::size_t gain = 0;
      for (std::uint32_t u : g.gamma_dense(top.node)) gain += covered[u] ? 0 : 1;
      top.bound = gain;
      top.stamp = round;
      heap.push(top);
      continue;
    }
    if (top.bound == 0) break;
    out.selected.push_back(top.id);
    out.gains.push_back(top.bound);
    out.value += top.bound;
    for (std::uint32_t u : g.gamma_dense(top.node)) covered[u] = 1;
    removed[top.node] = 1;
    for (std::size_t nb : c.neighbors(top.node)) removed[nb] = 1;
    ++round;
  }
  return out;
}

inline constexpr std::size_t kBruteForceLimit = 20;

// Exact maximizer of F over all independent sets, by exhaustive enumeration.
// Among optimal sets the lexicographically smallest ascending id list wins.
// Gains are reported per pick in ascending id order.
inline Selection brute_force_select(const CoverGraph& g, const ConstraintGraph& c) {
  const std::size_t n = g.size();
  if (n > kBruteForceLimit) {
    fail(ErrorKind::kInvalidArgument, "brute force limited to " +
                                          std::to_string(kBruteForceLimit) + " candidates");
  }
  if (c.size() != n) fail(ErrorKind::kInvalidArgument, "graphs do not share V");

  // Node order by ascending id so the id list of a subset is already sorted.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return g.nodes()[a] < g.nodes()[b]; });

  std::vector<std::uint32_t> conflict(n, 0);  // bitmask over positions in `order`
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p != q && c.adjacent(order[p], order[q])) conflict[p] |= (1u << q);
    }
  }

  std::vector<int> hits(g.universe().size(), 0);
  std::size_t value = 0;
  std::size_t best_value = 0;
  std::vector<PatchId> best_ids;
  std::vector<PatchId> current;
  bool have_best = false;

  auto visit = [&](auto&& self, std::size_t pos, std::uint32_t chosen) -> void {
    if (pos == n) {
      if (!have_best || value > best_value ||
          (value == best_value && current < best_ids)) {
        best_value = value;
        best_ids = current;
        have_best = true;
      }
      return;
    }
    if ((conflict[pos] & chosen) == 0) {
      const std::size_t node = order[pos];
      for (std::uint32_t u : g.gamma_dense(node)) value += (hits[u]++ == 0) ? 1 : 0;
      current.push_back(g.nodes()[node]);
      self(self, pos + 1, chosen | (1u << pos));
      current.pop_back();
      for (std::uint32_t u : g.gamma_dense(node)) value -= (--hits[u] == 0) ? 1 : 0;
    }
    self(self, pos + 1, chosen);
  };
  visit(visit, 0, 0);

  Selection out;
  out.selected = best_ids;
  out.value = best_value;
  std::vector<PatchId> prefix;
  std::size_t prev = 0;
  for (PatchId b : best_ids) {
    prefix.push_back(b);
    const std::size_t now = coverage(g, prefix);
    out.gains.push_back(now - prev);
    prev = now;
  }
  return out;
}

}  // namespace partconf
