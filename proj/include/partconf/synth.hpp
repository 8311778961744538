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

// Synthetic weakly labeled datasets with a planted two-part object.
//
// Each positive image holds parts A and B at a fixed relative offset (plus
// optional jitter); their features are class prototypes plus Gaussian noise.
// "Proposal" boxes around the object get features mixed from the parts they
// contain and the image's clutter vector, so whole-object regions differ from
// part-only regions. Distractors carry independent random features. Negative
// images contain only clutter.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "partconf/error.hpp"
#include "partconf/features.hpp"
#include "partconf/geom.hpp"

namespace partconf {

struct SynthSpec {
  std::uint64_t seed = 1;
  // Seeds the part prototypes and the background direction. Datasets that
  // share it depict the same object class, so a train/test split varies
  // `seed` only.
  std::uint64_t class_seed = 1;
  std::size_t num_positive = 12;
  std::size_t num_negative = 12;
  double image_width = 320;
  double image_height = 240;
  std::size_t dim = 32;
  // Part sizes and the offset of B's top-left corner from A's top-left.
  double part_a_width = 60;
  double part_a_height = 50;
  double part_b_width = 60;
  double part_b_height = 70;
  double offset_x = 10;
  double offset_y = 40;
  std::int64_t offset_jitter = 0;  // px, uniform in [-j, j] per axis
  double scale_jitter = 0.0;       // object scale uniform in [1 - s, 1 + s]
  double feature_noise = 0.0;      // per-coordinate standard deviation
  double clutter_scale = 1.0;
  // Weight of a background direction shared by all clutter vectors.
  double background_bias = 0.0;
  // Probability that a negative image holds a patch with part-B features.
  double decoy_fraction = 0.0;
  std::size_t num_distractors = 10;
  std::size_t num_proposals = 0;  // first proposal is the exact object box
  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

struct PlantedInstance {
  ImageId image_id = 0;
  PatchId part_a = 0;
  PatchId part_b = 0;
  friend bool operator==(const PlantedInstance&, const PlantedInstance&) = default;
};

struct SynthOutput {
  Dataset dataset;
  std::map<ImageId, Box> ground_truth;
  std::vector<PlantedInstance> planted;
};

namespace detail {

// Portable sampling on top of mt19937_64 (std distributions are
// implementation-defined, which would break cross-toolchain reproducibility).
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(i) - 1))]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<double> random_direction(SynthRng& rng, std::size_t dim, double scale) {
  std::vector<double> v(dim);
  double n = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  for (auto& x : v) x = scale * x / n;
  return v;
}

inline void check_spec(const SynthSpec& s) {
  if (s.dim == 0) fail(ErrorKind::kInvalidArgument, "synthetic feature dimension must be positive");
  if (s.part_a_width <= 0 || s.part_a_height <= 0 || s.part_b_width <= 0 || s.part_b_height <= 0) {
    fail(ErrorKind::kInvalidArgument, "part sizes must be positive");
  }
  if (s.decoy_fraction < 0.0 || s.decoy_fraction > 1.0 || s.background_bias < 0.0) {
    fail(ErrorKind::kInvalidArgument, "decoy fraction must lie in [0, 1], background bias >= 0");
  }
  if (s.scale_jitter < 0.0 || s.scale_jitter >= 1.0 || s.offset_jitter < 0 || s.feature_noise < 0.0) {
    fail(ErrorKind::kInvalidArgument, "jitter and noise must be non-negative (scale jitter < 1)");
  }
  const double f = 1.0 + s.scale_jitter;
  const double j = static_cast<double>(s.offset_jitter);
  const double obj_w = std::max(s.part_a_width, s.offset_x + s.part_b_width) - std::min(0.0, s.offset_x);
  const double obj_h = std::max(s.part_a_height, s.offset_y + s.part_b_height) - std::min(0.0, s.offset_y);
  if (f * obj_w + 2 * j + 2 > s.image_width || f * obj_h + 2 * j + 2 > s.image_height) {
    fail(ErrorKind::kInvalidArgument, "infeasible geometry: object exceeds image");
  }
}

}  // namespace detail

// Deterministic per seed. Image ids: positives 0..P-1, then negatives.
// Patch ids are assigned in a per-image shuffled order.
inline SynthOutput generate(const SynthSpec& spec) {
  detail::check_spec(spec);
  const std::size_t dim = spec.dim;
  detail::SynthRng class_rng(spec.class_seed);
  const auto proto_a = detail::random_direction(class_rng, dim, 1.0);
  const auto proto_b = detail::random_direction(class_rng, dim, 1.0);
  const auto background = detail::random_direction(class_rng, dim, 1.0);
  detail::SynthRng rng(spec.seed);
  auto clutter_vector = [&] {
    auto v = detail::random_direction(rng, dim, 1.0);
    double n = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      v[i] += spec.background_bias * background[i];
      n += v[i] * v[i];
    }
    n = std::sqrt(n);
    for (auto& x : v) x = spec.clutter_scale * x / n;
    return v;
  };

  auto noisy = [&](const std::vector<double>& base) {
    FeatureVector f(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      f[i] = static_cast<float>(base[i] + spec.feature_noise * rng.normal());
    }
    return f;
  };
  auto random_box = [&](double min_side, double max_side) {
    const double w = std::round(rng.uniform(min_side, max_side));
    const double h = std::round(rng.uniform(min_side, max_side));
    const double l = std::floor(rng.uniform(0.0, spec.image_width - w));
    const double t = std::floor(rng.uniform(0.0, spec.image_height - h));
    return Box{l, l + w, t, t + h};
  };
  const double max_side = std::max(16.0, 0.4 * std::min(spec.image_width, spec.image_height));

  std::vector<ImageInfo> images;
  std::vector<PatchRecord> patches;
  SynthOutput out;
  PatchId next_patch = 0;

  struct Pending {
    Box box;
    FeatureVector feature;
    int role;  // 0 = distractor/proposal, 1 = part A, 2 = part B
  };

  const std::size_t total = spec.num_positive + spec.num_negative;
  for (std::size_t n = 0; n < total; ++n) {
    const bool positive = n < spec.num_positive;
    const auto image_id = static_cast<ImageId>(n);
    images.push_back(ImageInfo{image_id, spec.image_width, spec.image_height,
                               positive ? Label::kPositive : Label::kNegative});
    const auto clutter = clutter_vector();
    std::vector<Pending> pending;

    if (positive) {
      const double f = spec.scale_jitter > 0.0
                           ? rng.uniform(1.0 - spec.scale_jitter, 1.0 + spec.scale_jitter)
                           : 1.0;
      const double j = static_cast<double>(spec.offset_jitter);
      const double jx = spec.offset_jitter > 0 ? static_cast<double>(rng.integer(-spec.offset_jitter, spec.offset_jitter)) : 0.0;
      const double jy = spec.offset_jitter > 0 ? static_cast<double>(rng.integer(-spec.offset_jitter, spec.offset_jitter)) : 0.0;
      Box a{0, std::round(f * spec.part_a_width), 0, std::round(f * spec.part_a_height)};
      const double bx = std::round(f * spec.offset_x) + jx;
      const double by = std::round(f * spec.offset_y) + jy;
      Box b{bx, bx + std::round(f * spec.part_b_width), by, by + std::round(f * spec.part_b_height)};
      const Box obj = union_bbox(a, b);
      const double left = std::floor(rng.uniform(1.0 + j, spec.image_width - obj.width() - 1.0 - j)) - obj.x_left;
      const double top = std::floor(rng.uniform(1.0 + j, spec.image_height - obj.height() - 1.0 - j)) - obj.y_top;
      a = Box{a.x_left + left, a.x_right + left, a.y_top + top, a.y_bottom + top};
      b = Box{b.x_left + left, b.x_right + left, b.y_top + top, b.y_bottom + top};
      if (!intersect(a, b)) {
        fail(ErrorKind::kInvalidArgument, "infeasible geometry: jitter separates the parts");
      }
      const Box gt = union_bbox(a, b);
      if (!contains(images.back().extent(), gt)) {
        fail(ErrorKind::kInvalidArgument, "infeasible geometry: object exceeds image");
      }
      out.ground_truth.emplace(image_id, gt);
      pending.push_back({a, noisy(proto_a), 1});
      pending.push_back({b, noisy(proto_b), 2});

      // Region features: fraction of each part inside the box, plus clutter
      // in proportion to the box area not covered by either part.
      auto render = [&](const Box& r) {
        const double ia = intersection_area(r, a);
        const double ib = intersection_area(r, b);
        const double iab = intersect(a, b) ? intersection_area(r, *intersect(a, b)) : 0.0;
        const double ca = ia / a.area();
        const double cb = ib / b.area();
        const double bg = std::max(0.0, 1.0 - (ia + ib - iab) / r.area());
        std::vector<double> base(dim);
        for (std::size_t i = 0; i < dim; ++i) {
          base[i] = ca * proto_a[i] + cb * proto_b[i] + bg * clutter[i];
        }
        return noisy(base);
      };
      for (std::size_t p = 0; p < spec.num_proposals; ++p) {
        Box r = gt;
        if (p > 0) {
          const double mw = 0.4 * gt.width();
          const double mh = 0.4 * gt.height();
          double l = std::round(rng.uniform(gt.x_left - mw, gt.x_right + mw));
          double rr = std::round(rng.uniform(gt.x_left - mw, gt.x_right + mw));
          double t = std::round(rng.uniform(gt.y_top - mh, gt.y_bottom + mh));
          double bb = std::round(rng.uniform(gt.y_top - mh, gt.y_bottom + mh));
          if (l > rr) std::swap(l, rr);
          if (t > bb) std::swap(t, bb);
          rr = std::max(rr, l + 8.0);
          bb = std::max(bb, t + 8.0);
          r = Box{std::clamp(l, 0.0, spec.image_width - 8.0), std::clamp(rr, 8.0, spec.image_width),
                  std::clamp(t, 0.0, spec.image_height - 8.0), std::clamp(bb, 8.0, spec.image_height)};
          if (r.degenerate()) r = gt;
        }
        pending.push_back({r, render(r), 0});
      }
    } else {
      for (std::size_t p = 0; p < spec.num_proposals; ++p) {
        pending.push_back({random_box(16.0, max_side), noisy(clutter), 0});
      }
      if (spec.decoy_fraction > 0.0 && rng.uniform() < spec.decoy_fraction) {
        pending.push_back({random_box(std::min(spec.part_b_width, spec.part_b_height), max_side),
                           noisy(proto_b), 0});
      }
    }
    for (std::size_t k = 0; k < spec.num_distractors; ++k) {
      const Box r = random_box(16.0, max_side);
      pending.push_back({r, noisy(clutter_vector()), 0});
    }

    rng.shuffle(pending);
    PlantedInstance planted{image_id, 0, 0};
    for (auto& p : pending) {
      const PatchId id = next_patch++;
      if (p.role == 1) planted.part_a = id;
      if (p.role == 2) planted.part_b = id;
      patches.push_back(PatchRecord{id, image_id, p.box, std::move(p.feature)});
    }
    if (positive) out.planted.push_back(planted);
  }

  out.dataset = Dataset(std::move(images), std::move(patches), dim);
  return out;
}

}  // namespace partconf
