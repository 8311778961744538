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

// End-to-end stages on in-memory values: discovery, configuration mining,
// hard negatives, detector training and evaluation.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "partconf/configs.hpp"
#include "partconf/cover.hpp"
#include "partconf/detector.hpp"
#include "partconf/error.hpp"
#include "partconf/features.hpp"
#include "partconf/hardneg.hpp"

namespace partconf {

// Source of negatives taken from positive images.
enum class NegativeMode { kNone, kNeighboring, kDiscovered };

inline std::string_view to_string(NegativeMode m) {
  switch (m) {
    case NegativeMode::kNone: return "none";
    case NegativeMode::kNeighboring: return "neighboring";
    case NegativeMode::kDiscovered: return "discovered";
  }
  return "discovered";
}

inline NegativeMode negative_mode_from_name(std::string_view s) {
  if (s == "none") return NegativeMode::kNone;
  if (s == "neighboring") return NegativeMode::kNeighboring;
  if (s == "discovered") return NegativeMode::kDiscovered;
  fail(ErrorKind::kInvalidArgument, "negative mode must be none, neighboring or discovered");
}

struct PipelineConfig {
  std::optional<std::size_t> k;      // default |P| / 2
  std::optional<std::size_t> theta;  // default K / 20
  double iou_min = 0.5;
  std::optional<std::size_t> max_clusters;
  TransformWidths widths;
  double location_cell = 0.5;
  MiningParams mining;
  double hardneg_max_ratio = 0.5;
  double neighbor_max_iou = 0.3;
  NegativeMode negatives = NegativeMode::kDiscovered;
  DetectorOptions detector;
  double nms_overlap = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (k && *k < 1) fail(ErrorKind::kInvalidArgument, "K must be at least 1");
    if (!(iou_min > 0.0 && iou_min <= 1.0)) fail(ErrorKind::kInvalidArgument, "iou_min must lie in (0, 1]");
    if (!(widths.dx > 0 && widths.dy > 0 && widths.scale > 0 && widths.aspect > 0)) {
      fail(ErrorKind::kInvalidArgument, "transform widths must be positive");
    }
    if (!(location_cell > 0.0)) fail(ErrorKind::kInvalidArgument, "location cell must be positive");
    if (!(mining.alpha >= 0.0 && mining.alpha <= 1.0)) fail(ErrorKind::kInvalidArgument, "alpha must lie in [0, 1]");
    if (!(hardneg_max_ratio > 0.0 && hardneg_max_ratio <= 1.0)) {
      fail(ErrorKind::kInvalidArgument, "hard negative ratio must lie in (0, 1]");
    }
    if (!(neighbor_max_iou > 0.0 && neighbor_max_iou <= 1.0)) {
      fail(ErrorKind::kInvalidArgument, "neighbor IoU must lie in (0, 1]");
    }
    if (detector.lsvm_rounds < 1) fail(ErrorKind::kInvalidArgument, "LSVM rounds must be at least 1");
    if (!(detector.train.lambda >= 0.0)) fail(ErrorKind::kInvalidArgument, "lambda must be non-negative");
  }
};

inline std::size_t resolve_k(const PipelineConfig& cfg, const Dataset& d) {
  return cfg.k.value_or(default_k(d.positive_images().size()));
}

inline std::size_t resolve_theta(const PipelineConfig& cfg, std::size_t k) {
  return cfg.theta.value_or(k / 20);
}

struct Discovery {
  std::size_t k = 0;
  std::size_t theta = 0;
  NeighborhoodMap neighborhoods;
  CoverGraph cover;
  ConstraintGraph constraints;
  Selection selection;
  std::vector<Cluster> clusters;
};

inline Discovery discover(const Dataset& d, const PipelineConfig& cfg) {
  cfg.validate();
  if (d.positive_images().empty()) {
    fail(ErrorKind::kInsufficientData, "P nonempty required: no positive images");
  }
  Discovery out;
  out.k = resolve_k(cfg, d);
  out.theta = resolve_theta(cfg, out.k);
  out.neighborhoods = build_neighborhoods(d, out.k);
  out.cover = build_cover_graph(out.neighborhoods, d);
  out.constraints = build_constraint_graph(out.cover, d, out.theta, cfg.iou_min);
  out.selection = greedy_select(out.cover, out.constraints, cfg.max_clusters);
  out.clusters = clusters_from_selection(out.selection, out.cover);
  return out;
}

struct ConfigMining {
  ConfigGraph graph;
  MiningResult result;
  std::map<ImageId, ForegroundEstimate> estimates;
};

inline ConfigMining mine(const Dataset& d, std::span<const Cluster> clusters,
                         const PipelineConfig& cfg) {
  cfg.validate();
  ConfigMining out;
  out.graph = build_config_graph(clusters, d, cfg.widths, cfg.location_cell);
  out.result = mine_configurations(out.graph, clusters, d, cfg.mining);
  out.estimates = foreground_estimates(out.result, clusters, d);
  return out;
}

struct ImageHardNegatives {
  ImageId image_id = 0;
  Box foreground;
  std::vector<HardNegative> negatives;
  friend bool operator==(const ImageHardNegatives&, const ImageHardNegatives&) = default;
};

// Hard negatives of every estimate that came from a patch pair. Pairs whose
// patches neither overlap nor touch yield no strips and are reported in
// `skipped`.
inline std::vector<ImageHardNegatives> hard_negatives_for(
    const std::map<ImageId, ForegroundEstimate>& estimates, const Dataset& d,
    const PipelineConfig& cfg, std::vector<ImageId>* skipped = nullptr) {
  std::vector<ImageHardNegatives> out;
  for (const auto& [img, est] : estimates) {
    if (!est.pair) continue;
    const Box& b1 = d.patch(est.pair->first).box;
    const Box& b2 = d.patch(est.pair->second).box;
    if (!intersect(b1, b2)) {
      if (skipped) skipped->push_back(img);
      continue;
    }
    const auto set = generate_hard_negatives(b1, b2, est.box, cfg.hardneg_max_ratio);
    out.push_back(ImageHardNegatives{img, est.box, set.strips});
  }
  return out;
}

// Positives: the candidate best matching each foreground estimate. Negatives
// from positive images depend on `mode`; negative images are handled later by
// negative mining.
inline TrainingSet initial_training_set(const Dataset& d,
                                        const std::map<ImageId, ForegroundEstimate>& estimates,
                                        std::span<const ImageHardNegatives> hard_negatives,
                                        NegativeMode mode, const PipelineConfig& cfg) {
  NearestCandidateFeatures lookup(d);
  TrainingSet ts;
  std::set<PatchId> positive_ids;
  for (const auto& [img, est] : estimates) {
    auto rep = lookup.representative(img, est.box);
    if (!rep) continue;
    ts.positives.push_back(example_from_patch(d, *rep, ExampleSource::kForegroundEstimate));
    ts.positives.back().box = est.box;
    positive_ids.insert(*rep);
  }
  std::set<PatchId> negative_ids;
  auto add_negative = [&](PatchId id, const Box& region, ExampleSource source) {
    if (positive_ids.contains(id) || !negative_ids.insert(id).second) return;
    ts.negatives.push_back(example_from_patch(d, id, source));
    ts.negatives.back().box = region;
  };
  if (mode == NegativeMode::kDiscovered) {
    for (const auto& hn : hard_negatives) {
      for (const auto& strip : hn.negatives) {
        if (auto rep = lookup.representative_avoiding(hn.image_id, strip.box, hn.foreground,
                                                      cfg.iou_min)) {
          add_negative(*rep, strip.box, ExampleSource::kHardNegative);
        }
      }
    }
  } else if (mode == NegativeMode::kNeighboring) {
    for (const auto& [img, est] : estimates) {
      for (std::size_t j : d.patch_indices_of(img)) {
        const auto& p = d.patches()[j];
        if (iou(p.box, est.box) < cfg.neighbor_max_iou) {
          add_negative(p.patch_id, p.box, ExampleSource::kNeighboringNegative);
        }
      }
    }
  }
  return ts;
}

struct TrainingOutcome {
  LinearModel model;
  LsvmResult lsvm;
  std::map<ImageId, Detection> mined_positives;
  // Final latent box of every positive image that has one.
  std::map<ImageId, Box> localizations;
};

// Initial detector on the estimates, positive mining on the remaining positive
// images, then latent SVM rounds on the augmented set.
inline TrainingOutcome train_detector(const Dataset& d,
                                      const std::map<ImageId, ForegroundEstimate>& estimates,
                                      std::span<const ImageHardNegatives> hard_negatives,
                                      const PipelineConfig& cfg) {
  cfg.validate();
  TrainingSet ts = initial_training_set(d, estimates, hard_negatives, cfg.negatives, cfg);
  if (ts.positives.empty()) {
    fail(ErrorKind::kInsufficientData, "no foreground estimates to train on");
  }
  TrainingOutcome out;
  TrainingSet warmup = ts;
  const LinearModel initial = train_with_mining(warmup, d, cfg.detector).model;

  std::vector<ImageId> remaining;
  for (ImageId img : d.positive_images()) {
    if (!estimates.contains(img)) remaining.push_back(img);
  }
  std::set<PatchId> excluded;
  for (const auto& e : ts.negatives) excluded.insert(e.patch_id);
  out.mined_positives = mine_positives(initial, d, remaining, excluded).detections;
  for (const auto& [img, det] : out.mined_positives) {
    ts.positives.push_back(example_from_patch(d, det.patch_id, ExampleSource::kMinedPositive));
  }

  out.lsvm = lsvm_rounds(std::move(ts), d, cfg.detector.lsvm_rounds, cfg.detector);
  out.model = out.lsvm.model;
  for (const auto& [img, patch] : out.lsvm.latent_history.back()) {
    out.localizations.emplace(img, d.patch(patch).box);
  }
  return out;
}

struct Evaluation {
  double corloc = 0.0;
  double ap = 0.0;
  std::vector<CorLocImage> per_image;
};

inline std::vector<GroundTruth> ground_truth_list(const std::map<ImageId, Box>& gt) {
  std::vector<GroundTruth> out;
  for (const auto& [img, box] : gt) out.push_back(GroundTruth{img, box});
  return out;
}

// AP of `model` over every image of `test`, against `test_gt`.
inline double detection_ap(const LinearModel& model, const Dataset& test,
                           const std::map<ImageId, Box>& test_gt, const PipelineConfig& cfg) {
  std::vector<ImageId> images;
  for (const auto& im : test.images()) images.push_back(im.image_id);
  std::sort(images.begin(), images.end());
  const auto gt = ground_truth_list(test_gt);
  return evaluate_ap(detect(model, test, images, cfg.nms_overlap), gt, cfg.iou_min);
}

}  // namespace partconf
