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

// Frequent two-cluster configurations across positive images.
//
// Every cross-image correspondence of cluster patches is a point in a 4D
// transform space (x shift, y shift, relative scale, relative aspect). Two
// correspondences from clusters Ci < Cj that land in the same transform bin,
// and whose in-image patch pairs agree on the relative-location bin, add a
// labeled edge between the two images. Connected components of the
// same-label subgraphs are the mined configurations.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "partconf/cover.hpp"
#include "partconf/error.hpp"
#include "partconf/features.hpp"
#include "partconf/geom.hpp"
#include "partconf/parallel.hpp"
#include "partconf/union_find.hpp"

namespace partconf {

using ClusterId = std::int64_t;

struct Cluster {
  ClusterId cluster_id = 0;
  PatchId representative = 0;
  std::vector<PatchId> members;  // representative plus Gamma(representative), ascending
  std::size_t coverage = 0;      // |Gamma(representative)|
  friend bool operator==(const Cluster&, const Cluster&) = default;
};

// One cluster per selected candidate, numbered in pick order.
inline std::vector<Cluster> clusters_from_selection(const Selection& s, const CoverGraph& g) {
  std::vector<Cluster> out;
  out.reserve(s.selected.size());
  for (std::size_t k = 0; k < s.selected.size(); ++k) {
    const PatchId rep = s.selected[k];
    const auto gamma = g.gamma(g.require_index(rep));
    Cluster c;
    c.cluster_id = static_cast<ClusterId>(k);
    c.representative = rep;
    c.members.assign(gamma.begin(), gamma.end());
    c.members.push_back(rep);
    std::sort(c.members.begin(), c.members.end());
    c.members.erase(std::unique(c.members.begin(), c.members.end()), c.members.end());
    c.coverage = gamma.size();
    out.push_back(std::move(c));
  }
  return out;
}

struct Transform {
  double dx = 0.0;
  double dy = 0.0;
  double scale = 1.0;
  double aspect = 1.0;
  friend bool operator==(const Transform&, const Transform&) = default;
};

struct TransformWidths {
  double dx = 30.0;
  double dy = 30.0;
  double scale = 1.0;
  double aspect = 1.0;
};

struct TransformBin {
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  std::int64_t is = 0;
  std::int64_t ip = 0;
  friend auto operator<=>(const TransformBin&, const TransformBin&) = default;
};

using LocationBin = std::array<std::int64_t, 2>;

// Maps src onto dst: center displacement, sqrt of the area ratio, and the
// ratio of width/height aspects.
inline Transform compute_transform(const Box& src, const Box& dst) {
  if (src.degenerate() || dst.degenerate()) {
    fail(ErrorKind::kInvalidArgument, "transform of a zero-area box");
  }
  Transform t;
  t.dx = dst.center_x() - src.center_x();
  t.dy = dst.center_y() - src.center_y();
  t.scale = std::sqrt(dst.area() / src.area());
  t.aspect = (dst.width() / dst.height()) / (src.width() / src.height());
  return t;
}

inline std::int64_t floor_bin(double value, double width) {
  return static_cast<std::int64_t>(std::floor(value / width));
}

inline TransformBin bin_transform(const Transform& t, const TransformWidths& w = {}) {
  if (!(w.dx > 0.0) || !(w.dy > 0.0) || !(w.scale > 0.0) || !(w.aspect > 0.0)) {
    fail(ErrorKind::kInvalidArgument, "transform bin widths must be positive");
  }
  return TransformBin{floor_bin(t.dx, w.dx), floor_bin(t.dy, w.dy),
                      floor_bin(t.scale, w.scale), floor_bin(t.aspect, w.aspect)};
}

// Center offset of b2 from b1 in units of sqrt(mean area), floor-binned.
inline LocationBin relative_location_bin(const Box& b1, const Box& b2, double cell = 0.5) {
  if (!(cell > 0.0)) fail(ErrorKind::kInvalidArgument, "location cell must be positive");
  if (b1.degenerate() || b2.degenerate()) {
    fail(ErrorKind::kInvalidArgument, "relative location of a zero-area box");
  }
  const double unit = std::sqrt(0.5 * (b1.area() + b2.area()));
  const double ox = (b2.center_x() - b1.center_x()) / unit;
  const double oy = (b2.center_y() - b1.center_y()) / unit;
  return LocationBin{floor_bin(ox, cell), floor_bin(oy, cell)};
}

struct ConfigLabel {
  ClusterId ci = 0;  // ci < cj
  ClusterId cj = 0;
  LocationBin location{};
  friend auto operator<=>(const ConfigLabel&, const ConfigLabel&) = default;
};

// A patch of some cluster in image1 matched to a patch of the same cluster in
// image2.
struct Correspondence {
  PatchId in_first = 0;
  PatchId in_second = 0;
  friend auto operator<=>(const Correspondence&, const Correspondence&) = default;
};

struct ConfigEdge {
  ImageId image1 = 0;  // image1 < image2
  ImageId image2 = 0;
  ConfigLabel label;
  Correspondence ci_match;
  Correspondence cj_match;
  friend auto operator<=>(const ConfigEdge&, const ConfigEdge&) = default;
};

struct ConfigGraph {
  std::vector<ImageId> nodes;    // positive images, ascending
  std::vector<ConfigEdge> edges; // sorted
  friend bool operator==(const ConfigGraph&, const ConfigGraph&) = default;
};

namespace detail {

// Non-degenerate member patches of each cluster, grouped by image.
using ClusterPatches = std::map<ClusterId, std::vector<PatchId>>;

inline std::unordered_map<ImageId, ClusterPatches> group_clusters_by_image(
    std::span<const Cluster> clusters, const Dataset& d) {
  std::unordered_map<ImageId, ClusterPatches> out;
  for (const auto& c : clusters) {
    for (PatchId p : c.members) {
      const auto& rec = d.patch(p);
      if (d.image(rec.image_id).label != Label::kPositive || rec.box.degenerate()) continue;
      out[rec.image_id][c.cluster_id].push_back(p);
    }
  }
  for (auto& [img, per_cluster] : out) {
    for (auto& [cid, ps] : per_cluster) std::sort(ps.begin(), ps.end());
  }
  return out;
}

}  // namespace detail

// Labeled multigraph over positive images. For an image pair and clusters
// Ci < Cj present in both, correspondences (p1 -> q1) of Ci and (p2 -> q2) of
// Cj produce an edge when both transforms fall in the same bin and the pairs
// (p1, p2), (q1, q2) share a relative-location bin. A patch that belongs to
// both clusters is never paired with itself.
inline ConfigGraph build_config_graph(std::span<const Cluster> clusters, const Dataset& d,
                                      const TransformWidths& widths = {},
                                      double cell = 0.5) {
  ConfigGraph graph;
  graph.nodes = d.positive_images();
  if (clusters.size() < 2 || graph.nodes.size() < 2) return graph;

  const auto by_image = detail::group_clusters_by_image(clusters, d);
  std::vector<std::pair<ImageId, ImageId>> pairs;
  for (std::size_t a = 0; a < graph.nodes.size(); ++a) {
    if (!by_image.contains(graph.nodes[a])) continue;
    for (std::size_t b = a + 1; b < graph.nodes.size(); ++b) {
      if (by_image.contains(graph.nodes[b])) pairs.emplace_back(graph.nodes[a], graph.nodes[b]);
    }
  }

  std::vector<std::vector<ConfigEdge>> per_pair(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [i1, i2] = pairs[k];
    const auto& first = by_image.at(i1);
    const auto& second = by_image.at(i2);
    std::vector<ClusterId> shared;
    for (const auto& [cid, ps] : first) {
      if (second.contains(cid)) shared.push_back(cid);
    }
    if (shared.size() < 2) return;

    // Transform bin of every correspondence of every shared cluster.
    struct Match {
      Correspondence c;
      TransformBin bin;
    };
    std::map<ClusterId, std::vector<Match>> matches;
    for (ClusterId cid : shared) {
      for (PatchId p : first.at(cid)) {
        for (PatchId q : second.at(cid)) {
          matches[cid].push_back(
              {{p, q}, bin_transform(compute_transform(d.patch(p).box, d.patch(q).box), widths)});
        }
      }
    }
    auto& out = per_pair[k];
    for (std::size_t a = 0; a < shared.size(); ++a) {
      for (std::size_t b = a + 1; b < shared.size(); ++b) {
        for (const auto& mi : matches[shared[a]]) {
          for (const auto& mj : matches[shared[b]]) {
            if (mi.bin != mj.bin) continue;
            if (mi.c.in_first == mj.c.in_first || mi.c.in_second == mj.c.in_second) continue;
            const auto loc1 = relative_location_bin(d.patch(mi.c.in_first).box,
                                                    d.patch(mj.c.in_first).box, cell);
            const auto loc2 = relative_location_bin(d.patch(mi.c.in_second).box,
                                                    d.patch(mj.c.in_second).box, cell);
            if (loc1 != loc2) continue;
            out.push_back(ConfigEdge{i1, i2, ConfigLabel{shared[a], shared[b], loc1}, mi.c, mj.c});
          }
        }
      }
    }
  });

  for (auto& edges : per_pair) {
    graph.edges.insert(graph.edges.end(), edges.begin(), edges.end());
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

// Patch pair of a configuration inside one supporting image.
struct ConfigImage {
  ImageId image_id = 0;
  PatchId patch1 = 0;  // from cluster ci
  PatchId patch2 = 0;  // from cluster cj
  Box box1;
  Box box2;
  Box foreground;
  friend bool operator==(const ConfigImage&, const ConfigImage&) = default;
};

struct Configuration {
  ConfigLabel label;
  std::vector<ConfigImage> images;  // ascending image_id
  double score = 0.0;
  friend bool operator==(const Configuration&, const Configuration&) = default;
};

struct MiningParams {
  std::size_t min_component = 3;
  double alpha = 0.5;
};

// Either ranked configurations, or (when no component reaches min_component)
// the cluster with the largest coverage as a single-cluster fallback.
struct MiningResult {
  std::vector<Configuration> configurations;
  std::optional<ClusterId> fallback_cluster;
  friend bool operator==(const MiningResult&, const MiningResult&) = default;
};

// Smallest box containing both patches of a configuration.
inline Box foreground_box(const Box& b1, const Box& b2) { return union_bbox(b1, b2); }

// Connected components of each same-label subgraph, scored by
// alpha * |component| / |P| + (1 - alpha) * max(coverage Ci, Cj) / |P| and
// sorted best first. Components smaller than min_component are dropped.
inline MiningResult mine_configurations(const ConfigGraph& g, std::span<const Cluster> clusters,
                                        const Dataset& d, const MiningParams& params = {}) {
  if (clusters.empty()) fail(ErrorKind::kInvalidArgument, "no clusters to mine");
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  std::unordered_map<ClusterId, std::size_t> coverage;
  for (const auto& c : clusters) coverage[c.cluster_id] = c.coverage;
  auto coverage_of = [&](ClusterId id) {
    auto it = coverage.find(id);
    if (it == coverage.end()) fail(ErrorKind::kInvalidArgument, "edge references unknown cluster");
    return it->second;
  };

  std::unordered_map<ImageId, std::size_t> node_index;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) node_index.emplace(g.nodes[i], i);
  const double num_positive = static_cast<double>(std::max<std::size_t>(1, g.nodes.size()));

  // Edges are sorted by image pair first; regroup by label keeping that order.
  std::map<ConfigLabel, std::vector<const ConfigEdge*>> by_label;
  for (const auto& e : g.edges) by_label[e.label].push_back(&e);

  MiningResult result;
  for (const auto& [label, edges] : by_label) {
    UnionFind uf(g.nodes.size());
    for (const ConfigEdge* e : edges) uf.unite(node_index.at(e->image1), node_index.at(e->image2));

    // First edge touching each image supplies its patch pair.
    std::map<std::size_t, std::map<ImageId, std::pair<PatchId, PatchId>>> components;
    for (const ConfigEdge* e : edges) {
      auto& comp = components[uf.find(node_index.at(e->image1))];
      comp.try_emplace(e->image1, e->ci_match.in_first, e->cj_match.in_first);
      comp.try_emplace(e->image2, e->ci_match.in_second, e->cj_match.in_second);
    }
    const double cov = static_cast<double>(std::max(coverage_of(label.ci), coverage_of(label.cj)));
    for (const auto& [root, members] : components) {
      if (members.size() < params.min_component) continue;
      Configuration conf;
      conf.label = label;
      for (const auto& [img, pp] : members) {
        ConfigImage ci;
        ci.image_id = img;
        ci.patch1 = pp.first;
        ci.patch2 = pp.second;
        ci.box1 = d.patch(pp.first).box;
        ci.box2 = d.patch(pp.second).box;
        ci.foreground = foreground_box(ci.box1, ci.box2);
        conf.images.push_back(ci);
      }
      conf.score = params.alpha * static_cast<double>(members.size()) / num_positive +
                   (1.0 - params.alpha) * cov / num_positive;
      result.configurations.push_back(std::move(conf));
    }
  }

  std::stable_sort(result.configurations.begin(), result.configurations.end(),
                   [](const Configuration& a, const Configuration& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.images.size() != b.images.size()) return a.images.size() > b.images.size();
                     if (a.label != b.label) return a.label < b.label;
                     return a.images.front().image_id < b.images.front().image_id;
                   });

  if (result.configurations.empty()) {
    const Cluster* best = &clusters.front();
    for (const auto& c : clusters) {
      if (c.coverage > best->coverage ||
          (c.coverage == best->coverage && c.cluster_id < best->cluster_id)) {
        best = &c;
      }
    }
    result.fallback_cluster = best->cluster_id;
  }
  return result;
}

// Per-image localization derived from mined configurations.
struct ForegroundEstimate {
  ImageId image_id = 0;
  Box box;
  // Patch pair that produced the estimate; absent for single-cluster fallback.
  std::optional<std::pair<PatchId, PatchId>> pair;
  friend bool operator==(const ForegroundEstimate&, const ForegroundEstimate&) = default;
};

// Each image takes its estimate from the best-scoring configuration that
// contains it. In fallback mode each image holding a member of the fallback
// cluster uses that member's box (lowest patch id if several).
inline std::map<ImageId, ForegroundEstimate> foreground_estimates(
    const MiningResult& mined, std::span<const Cluster> clusters, const Dataset& d) {
  std::map<ImageId, ForegroundEstimate> out;
  for (const auto& conf : mined.configurations) {
    for (const auto& im : conf.images) {
      out.try_emplace(im.image_id,
                      ForegroundEstimate{im.image_id, im.foreground,
                                         std::make_pair(im.patch1, im.patch2)});
    }
  }
  if (mined.fallback_cluster) {
    for (const auto& c : clusters) {
      if (c.cluster_id != *mined.fallback_cluster) continue;
      for (PatchId p : c.members) {
        const auto& rec = d.patch(p);
        if (d.image(rec.image_id).label != Label::kPositive) continue;
        out.try_emplace(rec.image_id, ForegroundEstimate{rec.image_id, rec.box, std::nullopt});
      }
    }
  }
  return out;
}

}  // namespace partconf
