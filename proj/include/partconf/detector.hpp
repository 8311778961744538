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

// Linear detector: training, negative/positive mining, latent re-localization
// and evaluation (CorLoc, average precision).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "partconf/error.hpp"
#include "partconf/features.hpp"
#include "partconf/geom.hpp"
#include "partconf/parallel.hpp"

namespace partconf {

enum class ExampleSource {
  kForegroundEstimate,
  kHardNegative,
  kNeighboringNegative,
  kMinedNegative,
  kMinedPositive,
};

inline std::string_view to_string(ExampleSource s) {
  switch (s) {
    case ExampleSource::kForegroundEstimate: return "foreground-estimate";
    case ExampleSource::kHardNegative: return "hard-negative";
    case ExampleSource::kNeighboringNegative: return "neighboring-negative";
    case ExampleSource::kMinedNegative: return "mined-negative";
    case ExampleSource::kMinedPositive: return "mined-positive";
  }
  return "mined-negative";
}

struct Example {
  ImageId image_id = 0;
  PatchId patch_id = 0;  // candidate whose feature represents the region
  Box box;               // region the example was derived from
  FeatureVector feature;
  ExampleSource source = ExampleSource::kMinedNegative;
  friend bool operator==(const Example&, const Example&) = default;
};

struct TrainingSet {
  std::vector<Example> positives;
  std::vector<Example> negatives;

  // Positive and negative examples never share a candidate patch.
  void validate(std::size_t dim) const {
    std::set<PatchId> pos;
    for (const auto& e : positives) {
      if (e.feature.size() != dim) fail(ErrorKind::kInvalidArgument, "example dimension mismatch");
      pos.insert(e.patch_id);
    }
    for (const auto& e : negatives) {
      if (e.feature.size() != dim) fail(ErrorKind::kInvalidArgument, "example dimension mismatch");
      if (pos.contains(e.patch_id)) {
        fail(ErrorKind::kInvalidArgument, "patch used as both positive and negative");
      }
    }
  }
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 1e-4;

  double score(std::span<const float> x) const {
    if (x.size() != weights.size()) fail(ErrorKind::kInvalidArgument, "model dimension mismatch");
    double s = bias;
    for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * static_cast<double>(x[i]);
    return s;
  }

  static LinearModel zero(std::size_t dim, double lambda = 1e-4) {
    return LinearModel{std::vector<double>(dim, 0.0), 0.0, lambda};
  }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct TrainOptions {
  double lambda = 1e-4;
  std::size_t epochs = 300;
};

struct TrainReport {
  LinearModel model;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::size_t accepted_steps = 0;
};

// lambda/2 |w|^2 + (mean positive hinge + mean negative hinge) / 2.
// Averaging per class keeps the few positives from being swamped.
inline double svm_objective(const LinearModel& m, const TrainingSet& ts) {
  double reg = 0.0;
  for (double w : m.weights) reg += w * w;
  double pos = 0.0;
  for (const auto& e : ts.positives) pos += std::max(0.0, 1.0 - m.score(e.feature));
  double neg = 0.0;
  for (const auto& e : ts.negatives) neg += std::max(0.0, 1.0 + m.score(e.feature));
  const double j = 0.5 * m.lambda * reg + 0.5 * pos / static_cast<double>(ts.positives.size()) +
                   0.5 * neg / static_cast<double>(ts.negatives.size());
  if (!std::isfinite(j)) fail(ErrorKind::kNumeric, "non-finite training objective");
  return j;
}

// Full-batch subgradient descent from w = 0. A step is taken only if it lowers
// the objective; otherwise the step size is halved. Deterministic.
inline TrainReport train_svm(const TrainingSet& ts, std::size_t dim, const TrainOptions& opt = {}) {
  if (ts.positives.empty() || ts.negatives.empty()) {
    fail(ErrorKind::kInvalidArgument, "training needs at least one positive and one negative");
  }
  if (!(opt.lambda >= 0.0)) fail(ErrorKind::kInvalidArgument, "lambda must be non-negative");
  ts.validate(dim);

  LinearModel m = LinearModel::zero(dim, opt.lambda);
  double current = svm_objective(m, ts);
  TrainReport report;
  report.initial_objective = current;

  const double wp = 0.5 / static_cast<double>(ts.positives.size());
  const double wn = 0.5 / static_cast<double>(ts.negatives.size());
  double step = 1.0;
  std::vector<double> gw(dim);
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = 0; i < dim; ++i) gw[i] = opt.lambda * m.weights[i];
    double gb = 0.0;
    for (const auto& e : ts.positives) {
      if (m.score(e.feature) < 1.0) {
        for (std::size_t i = 0; i < dim; ++i) gw[i] -= wp * e.feature[i];
        gb -= wp;
      }
    }
    for (const auto& e : ts.negatives) {
      if (m.score(e.feature) > -1.0) {
        for (std::size_t i = 0; i < dim; ++i) gw[i] += wn * e.feature[i];
        gb += wn;
      }
    }
    bool accepted = false;
    while (step > 1e-12) {
      LinearModel trial = m;
      for (std::size_t i = 0; i < dim; ++i) trial.weights[i] -= step * gw[i];
      trial.bias -= step * gb;
      const double j = svm_objective(trial, ts);
      if (j < current) {
        m = std::move(trial);
        current = j;
        accepted = true;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    ++report.accepted_steps;
  }
  report.model = std::move(m);
  report.final_objective = current;
  return report;
}

inline Example example_from_patch(const Dataset& d, PatchId id, ExampleSource source) {
  const auto& p = d.patch(id);
  return Example{p.image_id, p.patch_id, p.box, p.feature, source};
}

// Scores of every candidate patch, in dataset order.
inline std::vector<double> score_patches(const LinearModel& m, const Dataset& d) {
  const auto patches = d.patches();
  std::vector<double> scores(patches.size());
  parallel_for(patches.size(), [&](std::size_t i) { scores[i] = m.score(patches[i].feature); });
  return scores;
}

// Patches of negative images that violate the margin (score > -margin).
inline std::vector<Example> mine_negatives(const LinearModel& m, const Dataset& d,
                                           double margin = 1.0) {
  const auto scores = score_patches(m, d);
  std::vector<Example> out;
  const auto patches = d.patches();
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (d.image(patches[i].image_id).label != Label::kNegative) continue;
    if (scores[i] > -margin) {
      out.push_back(example_from_patch(d, patches[i].patch_id, ExampleSource::kMinedNegative));
    }
  }
  return out;
}

struct Detection {
  ImageId image_id = 0;
  PatchId patch_id = 0;
  Box box;
  double score = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct PositiveMining {
  std::map<ImageId, Detection> detections;
  std::vector<ImageId> skipped;  // images without eligible candidates
};

// Highest-scoring candidate in each image (lowest patch_id on ties).
// Patches listed in `excluded` are never chosen.
inline PositiveMining mine_positives(const LinearModel& m, const Dataset& d,
                                     std::span<const ImageId> remaining,
                                     const std::set<PatchId>& excluded = {}) {
  PositiveMining out;
  for (ImageId img : remaining) {
    if (d.image(img).label != Label::kPositive) {
      fail(ErrorKind::kInvalidArgument, "positive mining over a negative image");
    }
    std::optional<Detection> best;
    for (std::size_t j : d.patch_indices_of(img)) {
      const auto& p = d.patches()[j];
      if (excluded.contains(p.patch_id)) continue;
      const double s = m.score(p.feature);
      if (!best || s > best->score || (s == best->score && p.patch_id < best->patch_id)) {
        best = Detection{img, p.patch_id, p.box, s};
      }
    }
    if (best) {
      out.detections.emplace(img, *best);
    } else {
      out.skipped.push_back(img);
    }
  }
  return out;
}

struct DetectorOptions {
  TrainOptions train;
  double mining_margin = 1.0;
  std::size_t mining_rounds = 10;
  std::size_t lsvm_rounds = 5;
};

// Alternates training and negative mining on negative images until no new
// violators appear or the round cap is hit. Mined negatives are appended to
// `ts`; negatives already present stay in every round.
inline TrainReport train_with_mining(TrainingSet& ts, const Dataset& d,
                                     const DetectorOptions& opt = {}) {
  std::set<PatchId> present;
  for (const auto& e : ts.negatives) present.insert(e.patch_id);
  std::set<PatchId> positive_ids;
  for (const auto& e : ts.positives) positive_ids.insert(e.patch_id);

  std::optional<TrainReport> report;
  if (!ts.negatives.empty()) report = train_svm(ts, d.dim(), opt.train);
  for (std::size_t round = 0; round < opt.mining_rounds; ++round) {
    const LinearModel current =
        report ? report->model : LinearModel::zero(d.dim(), opt.train.lambda);
    std::size_t added = 0;
    for (auto& e : mine_negatives(current, d, opt.mining_margin)) {
      if (present.contains(e.patch_id) || positive_ids.contains(e.patch_id)) continue;
      present.insert(e.patch_id);
      ts.negatives.push_back(std::move(e));
      ++added;
    }
    if (added == 0 && report) break;
    report = train_svm(ts, d.dim(), opt.train);
  }
  if (!report) report = train_svm(ts, d.dim(), opt.train);
  return *report;
}

struct LsvmResult {
  LinearModel model;
  TrainingSet training;  // final training set, including mined negatives
  // Latent patch of every positive image after each round; round 0 is the
  // initial assignment.
  std::vector<std::map<ImageId, PatchId>> latent_history;
  std::vector<double> objectives;
};

inline std::map<ImageId, PatchId> latent_assignment(const TrainingSet& ts) {
  std::map<ImageId, PatchId> out;
  for (const auto& e : ts.positives) out[e.image_id] = e.patch_id;
  return out;
}

// Moves every positive example to the argmax candidate of its image under `m`,
// skipping candidates used as negatives. For fixed weights this never lowers
// the summed positive score.
inline void relocalize_positives(TrainingSet& ts, const LinearModel& m, const Dataset& d) {
  std::set<PatchId> excluded;
  for (const auto& e : ts.negatives) excluded.insert(e.patch_id);
  for (auto& e : ts.positives) {
    const ImageId img = e.image_id;
    auto mined = mine_positives(m, d, std::span<const ImageId>(&img, 1), excluded);
    auto it = mined.detections.find(img);
    if (it == mined.detections.end()) continue;
    const ExampleSource source = e.source;
    e = example_from_patch(d, it->second.patch_id, source);
  }
}

// T rounds of latent SVM: round 1 trains on `init`; each later round
// re-localizes the positives with the current model and retrains.
inline LsvmResult lsvm_rounds(TrainingSet init, const Dataset& d, std::size_t rounds,
                              const DetectorOptions& opt = {}) {
  if (rounds < 1) fail(ErrorKind::kInvalidArgument, "at least one LSVM round required");
  LsvmResult out;
  out.latent_history.push_back(latent_assignment(init));
  out.training = std::move(init);
  auto report = train_with_mining(out.training, d, opt);
  out.objectives.push_back(report.final_objective);
  out.model = report.model;
  for (std::size_t t = 1; t < rounds; ++t) {
    relocalize_positives(out.training, out.model, d);
    out.latent_history.push_back(latent_assignment(out.training));
    report = train_with_mining(out.training, d, opt);
    out.objectives.push_back(report.final_objective);
    out.model = report.model;
  }
  return out;
}

// Greedy per-image non-maximum suppression; input order does not matter.
inline std::vector<Detection> nms(std::vector<Detection> dets, double max_overlap = 0.3) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.patch_id < b.patch_id;
  });
  std::vector<Detection> kept;
  for (const auto& det : dets) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (k.image_id == det.image_id && iou(k.box, det.box) > max_overlap) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(det);
  }
  return kept;
}

// Scores every candidate of the given images and suppresses overlaps.
inline std::vector<Detection> detect(const LinearModel& m, const Dataset& d,
                                     std::span<const ImageId> images, double nms_overlap = 0.3) {
  std::vector<Detection> all;
  for (ImageId img : images) {
    for (std::size_t j : d.patch_indices_of(img)) {
      const auto& p = d.patches()[j];
      all.push_back(Detection{img, p.patch_id, p.box, m.score(p.feature)});
    }
  }
  return nms(std::move(all), nms_overlap);
}

struct CorLocImage {
  ImageId image_id = 0;
  double iou = 0.0;
  bool hit = false;
};

// Per image present in both maps.
inline std::vector<CorLocImage> corloc_per_image(const std::map<ImageId, Box>& estimates,
                                                 const std::map<ImageId, Box>& gt,
                                                 double iou_min = 0.5) {
  std::vector<CorLocImage> out;
  for (const auto& [img, box] : gt) {
    auto it = estimates.find(img);
    if (it == estimates.end()) continue;
    const double v = iou(it->second, box);
    out.push_back(CorLocImage{img, v, v >= iou_min});
  }
  if (out.empty()) fail(ErrorKind::kInvalidArgument, "estimates and ground truth share no image");
  return out;
}

// Fraction of shared images whose estimate reaches iou_min against the
// ground truth.
inline double evaluate_corloc(const std::map<ImageId, Box>& estimates,
                              const std::map<ImageId, Box>& gt, double iou_min = 0.5) {
  const auto per_image = corloc_per_image(estimates, gt, iou_min);
  std::size_t hits = 0;
  for (const auto& r : per_image) hits += r.hit ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(per_image.size());
}

struct GroundTruth {
  ImageId image_id = 0;
  Box box;
};

// Continuous interpolated average precision. Detections are ranked by score
// (stable for ties); each one is matched to the highest-IoU ground truth of
// its image and counts as a hit when that IoU reaches iou_min and the ground
// truth is still unmatched.
inline double evaluate_ap(std::vector<Detection> dets, std::span<const GroundTruth> gt,
                          double iou_min = 0.5) {
  if (gt.empty()) fail(ErrorKind::kInvalidArgument, "average precision needs ground truth");
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<char> matched(gt.size(), 0);
  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < dets.size(); ++k) {
    double best = -1.0;
    std::size_t best_gt = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (gt[g].image_id != dets[k].image_id) continue;
      const double v = iou(dets[k].box, gt[g].box);
      if (v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < gt.size() && best >= iou_min && !matched[best_gt]) {
      matched[best_gt] = 1;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gt.size()));
  }
  for (std::size_t k = precision.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < precision.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

}  // namespace partconf
