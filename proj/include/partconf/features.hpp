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

// Candidate patches with feature vectors, and the cross-image nearest
// neighborhoods that drive patch discovery.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "partconf/error.hpp"
#include "partconf/geom.hpp"
#include "partconf/parallel.hpp"

namespace partconf {

using PatchId = std::int64_t;
using ImageId = std::int64_t;
using FeatureVector = std::vector<float>;

enum class Label { kPositive, kNegative };

struct ImageInfo {
  ImageId image_id = 0;
  double width = 0.0;
  double height = 0.0;
  Label label = Label::kNegative;

  Box extent() const { return Box{0.0, width, 0.0, height}; }
  friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct PatchRecord {
  PatchId patch_id = 0;
  ImageId image_id = 0;
  Box box;
  FeatureVector feature;

  friend bool operator==(const PatchRecord&, const PatchRecord&) = default;
};

// Immutable collection of images and their candidate patches. The
// constructor validates references and builds lookup indices.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<ImageInfo> images, std::vector<PatchRecord> patches,
          std::size_t dim)
      : images_(std::move(images)), patches_(std::move(patches)), dim_(dim) {
    for (std::size_t i = 0; i < images_.size(); ++i) {
      const auto& im = images_[i];
      if (!(im.width > 0.0) || !(im.height > 0.0)) {
        fail(ErrorKind::kSchema,
             "image " + std::to_string(im.image_id) + " has non-positive size");
      }
      if (!image_index_.emplace(im.image_id, i).second) {
        fail(ErrorKind::kSchema,
             "duplicate image_id " + std::to_string(im.image_id));
      }
    }
    patches_by_image_.resize(images_.size());
    for (std::size_t i = 0; i < patches_.size(); ++i) {
      const auto& p = patches_[i];
      auto it = image_index_.find(p.image_id);
      if (it == image_index_.end()) {
        fail(ErrorKind::kSchema, "patch " + std::to_string(p.patch_id) +
                                     " references unknown image " +
                                     std::to_string(p.image_id));
      }
      if (!patch_index_.emplace(p.patch_id, i).second) {
        fail(ErrorKind::kSchema,
             "duplicate patch_id " + std::to_string(p.patch_id));
      }
      if (p.feature.size() != dim_) {
        fail(ErrorKind::kSchema, "patch " + std::to_string(p.patch_id) +
                                     " feature has wrong dimension");
      }
      for (float v : p.feature) {
        if (!std::isfinite(v)) {
          fail(ErrorKind::kSchema, "patch " + std::to_string(p.patch_id) +
                                       " has a non-finite feature entry");
        }
      }
      if (!p.box.valid() || !contains(images_[it->second].extent(), p.box)) {
        fail(ErrorKind::kSchema, "patch " + std::to_string(p.patch_id) +
                                     " box lies outside its image");
      }
      patches_by_image_[it->second].push_back(i);
    }
  }

  std::span<const ImageInfo> images() const { return images_; }
  std::span<const PatchRecord> patches() const { return patches_; }
  std::size_t dim() const { return dim_; }

  bool has_image(ImageId id) const { return image_index_.contains(id); }
  bool has_patch(PatchId id) const { return patch_index_.contains(id); }

  const ImageInfo& image(ImageId id) const {
    auto it = image_index_.find(id);
    if (it == image_index_.end()) {
      fail(ErrorKind::kInvalidArgument, "unknown image " + std::to_string(id));
    }
    return images_[it->second];
  }

  const PatchRecord& patch(PatchId id) const {
    auto it = patch_index_.find(id);
    if (it == patch_index_.end()) {
      fail(ErrorKind::kInvalidArgument, "unknown patch " + std::to_string(id));
    }
    return patches_[it->second];
  }

  bool is_positive_patch(PatchId id) const {
    return image(patch(id).image_id).label == Label::kPositive;
  }

  // Indices into patches() for the given image, in manifest order.
  std::span<const std::size_t> patch_indices_of(ImageId id) const {
    auto it = image_index_.find(id);
    if (it == image_index_.end()) {
      fail(ErrorKind::kInvalidArgument, "unknown image " + std::to_string(id));
    }
    return patches_by_image_[it->second];
  }

  std::vector<ImageId> positive_images() const {
    std::vector<ImageId> out;
    for (const auto& im : images_) {
      if (im.label == Label::kPositive) out.push_back(im.image_id);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<ImageId> negative_images() const {
    std::vector<ImageId> out;
    for (const auto& im : images_) {
      if (im.label == Label::kNegative) out.push_back(im.image_id);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.dim_ == b.dim_ && a.images_ == b.images_ && a.patches_ == b.patches_;
  }

 private:
  std::vector<ImageInfo> images_;
  std::vector<PatchRecord> patches_;
  std::size_t dim_ = 0;
  std::unordered_map<ImageId, std::size_t> image_index_;
  std::unordered_map<PatchId, std::size_t> patch_index_;
  std::vector<std::vector<std::size_t>> patches_by_image_;
};

inline double squared_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return s;
}

namespace detail {

// Cosine distance from precomputed squared norms. sqrt(n*n) == n exactly in
// IEEE arithmetic, so a vector compared with itself yields exactly 0.
inline double cosine_distance(std::span<const float> a, std::span<const float> b,
                              double sq_a, double sq_b) {
  if (!(sq_a > 0.0) || !(sq_b > 0.0)) return 1.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  const double d = 1.0 - dot / std::sqrt(sq_a * sq_b);
  return std::clamp(d, 0.0, 2.0);
}

}  // namespace detail

// Cosine distance 1 - <a/|a|, b/|b|>; 1 when either operand is all-zero.
inline double distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::kInvalidArgument, "feature dimension mismatch");
  }
  return detail::cosine_distance(a, b, squared_norm(a), squared_norm(b));
}

// Scales v to unit L2 norm in place; all-zero vectors are left unchanged.
inline void normalize(FeatureVector& v) {
  const double n = std::sqrt(squared_norm(v));
  if (!(n > 0.0)) return;
  for (float& x : v) x = static_cast<float>(x / n);
}

struct Neighbor {
  PatchId patch_id = 0;
  double distance = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct Neighborhood {
  PatchId owner = 0;
  std::vector<Neighbor> neighbors;  // ascending distance, at most one per image
  friend bool operator==(const Neighborhood&, const Neighborhood&) = default;
};

using NeighborhoodMap = std::map<PatchId, Neighborhood>;

// Neighborhood size |P|/2, floored, at least 1.
inline std::size_t default_k(std::size_t num_positive_images) {
  return std::max<std::size_t>(1, num_positive_images / 2);
}

// For every patch of a positive image: take the single best match in each
// other image (either label), then keep the k closest of those. Ties are
// broken by (distance, image_id, patch_id).
inline NeighborhoodMap build_neighborhoods(const Dataset& d, std::size_t k) {
  if (d.images().size() < 2) {
    fail(ErrorKind::kInsufficientData, "insufficient images");
  }
  if (k < 1) fail(ErrorKind::kInvalidArgument, "k must be at least 1");

  const auto patches = d.patches();
  std::vector<double> sq(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    sq[i] = squared_norm(patches[i].feature);
  }

  // Images visited in ascending id so the candidate list is built in a
  // permutation-independent order.
  std::vector<ImageId> image_order;
  for (const auto& im : d.images()) image_order.push_back(im.image_id);
  std::sort(image_order.begin(), image_order.end());

  std::vector<std::size_t> queries;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (d.image(patches[i].image_id).label == Label::kPositive) {
      queries.push_back(i);
    }
  }

  struct Candidate {
    double distance;
    ImageId image;
    PatchId patch;
    auto key() const { return std::tie(distance, image, patch); }
  };

  std::vector<Neighborhood> results(queries.size());
  parallel_for(queries.size(), [&](std::size_t qi) {
    const std::size_t q = queries[qi];
    const auto& query = patches[q];
    std::vector<Candidate> best;
    best.reserve(image_order.size());
    for (ImageId img : image_order) {
      if (img == query.image_id) continue;
      bool found = false;
      Candidate c{std::numeric_limits<double>::infinity(), img, 0};
      for (std::size_t j : d.patch_indices_of(img)) {
        const double dist = detail::cosine_distance(query.feature, patches[j].feature,
                                                    sq[q], sq[j]);
        const Candidate cand{dist, img, patches[j].patch_id};
        if (!found || cand.key() < c.key()) {
          c = cand;
          found = true;
        }
      }
      if (found) best.push_back(c);
    }
    const std::size_t keep = std::min(k, best.size());
    std::partial_sort(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(keep),
                      best.end(),
                      [](const Candidate& a, const Candidate& b) { return a.key() < b.key(); });
    Neighborhood nb;
    nb.owner = query.patch_id;
    nb.neighbors.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      nb.neighbors.push_back(Neighbor{best[i].patch, best[i].distance});
    }
    results[qi] = std::move(nb);
  });

  NeighborhoodMap out;
  for (auto& nb : results) out.emplace(nb.owner, std::move(nb));
  return out;
}

// Feature lookup for arbitrary regions: the feature of the candidate patch in
// the same image with the highest IoU (lowest patch_id on ties). Any callable
// with the same signature can stand in for region features.
class NearestCandidateFeatures {
 public:
  explicit NearestCandidateFeatures(const Dataset& d) : dataset_(&d) {}

  // Returns the patch that represents `box` in `image`, or nullopt when the
  // image has no candidates.
  std::optional<PatchId> representative(ImageId image, const Box& box) const {
    return representative_avoiding(image, box, std::nullopt, 0.0);
  }

  // Same, restricted to candidates whose IoU with `avoid` is below
  // `max_overlap`. Used for negatives, whose stand-in must not itself be a
  // correct localization of the foreground.
  std::optional<PatchId> representative_avoiding(ImageId image, const Box& box,
                                                 const std::optional<Box>& avoid,
                                                 double max_overlap) const {
    std::optional<PatchId> best;
    double best_iou = -1.0;
    for (std::size_t j : dataset_->patch_indices_of(image)) {
      const auto& p = dataset_->patches()[j];
      if (avoid && iou(p.box, *avoid) >= max_overlap) continue;
      const double v = iou(p.box, box);
      if (v > best_iou || (v == best_iou && p.patch_id < *best)) {
        best_iou = v;
        best = p.patch_id;
      }
    }
    return best;
  }

 private:
  const Dataset* dataset_;
};

}  // namespace partconf
