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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "partconf/features.hpp"
#include "test_util.hpp"

using namespace partconf;
using testutil::DatasetBuilder;
using testutil::expect_error;

namespace {

double dist(const FeatureVector& a, const FeatureVector& b) { return distance(a, b); }

TEST(Distance, SelfDistanceIsZero) {
  const FeatureVector v{0.3f, -1.7f, 2.25f};
  EXPECT_EQ(distance(v, v), 0.0);
}

TEST(Distance, OrthogonalIsOne) { EXPECT_DOUBLE_EQ(dist({1, 0}, {0, 1}), 1.0); }

TEST(Distance, FortyFiveDegrees) {
  EXPECT_NEAR(dist({1, 0}, {1, 1}), 1.0 - 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Distance, ZeroOperandIsOne) { EXPECT_EQ(dist({0, 0}, {1, 1}), 1.0); }

TEST(Distance, DimensionMismatchFails) {
  expect_error([] { dist({1, 0}, {1, 0, 0}); }, ErrorKind::kInvalidArgument);
}

TEST(Normalize, UnitNormUnlessZero) {
  FeatureVector v{3, 4};
  normalize(v);
  EXPECT_NEAR(std::sqrt(squared_norm(v)), 1.0, 1e-6);
  FeatureVector z{0, 0};
  normalize(z);
  EXPECT_EQ(z, (FeatureVector{0, 0}));
}

TEST(Dataset, RejectsBadInput) {
  DatasetBuilder b;
  b.image(1, Label::kPositive);
  b.patch(1, 7, Box{0, 1, 0, 1}, {1, 0});
  expect_error([&] { b.build(); }, ErrorKind::kSchema, "unknown image");

  DatasetBuilder dup;
  dup.image(1, Label::kPositive);
  dup.patch(1, 1, Box{0, 1, 0, 1}, {1, 0});
  dup.patch(1, 1, Box{0, 1, 0, 1}, {1, 0});
  expect_error([&] { dup.build(); }, ErrorKind::kSchema, "duplicate patch_id");

  DatasetBuilder outside;
  outside.image(1, Label::kPositive, 10, 10);
  outside.patch(1, 1, Box{5, 15, 0, 5}, {1, 0});
  expect_error([&] { outside.build(); }, ErrorKind::kSchema, "outside");

  DatasetBuilder nan;
  nan.image(1, Label::kPositive);
  nan.patch(1, 1, Box{0, 1, 0, 1}, {NAN, 0});
  expect_error([&] { nan.build(); }, ErrorKind::kSchema, "non-finite");
}

TEST(Neighborhoods, FewerThanTwoImagesFails) {
  DatasetBuilder b;
  b.image(1, Label::kPositive);
  b.patch(1, 1, Box{0, 1, 0, 1}, {1, 0});
  const auto d = b.build();
  expect_error([&] { build_neighborhoods(d, 1); }, ErrorKind::kInsufficientData, "insufficient images");
}

TEST(Neighborhoods, ExactDuplicateRanksFirstAtZero) {
  DatasetBuilder b;
  b.image(1, Label::kPositive);
  b.image(2, Label::kPositive);
  b.image(3, Label::kNegative);
  b.patch(10, 1, Box{0, 5, 0, 5}, {0.2f, 0.9f});
  b.patch(20, 2, Box{0, 5, 0, 5}, {1, 0});
  b.patch(21, 2, Box{0, 5, 0, 5}, {0.2f, 0.9f});
  b.patch(30, 3, Box{0, 5, 0, 5}, {0.3f, 0.9f});
  const auto n = build_neighborhoods(b.build(), 2);
  const auto& list = n.at(10).neighbors;
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].patch_id, 21);
  EXPECT_EQ(list[0].distance, 0.0);
  EXPECT_EQ(list[1].patch_id, 30);
}

TEST(Neighborhoods, DefaultK) {
  EXPECT_EQ(default_k(0), 1u);
  EXPECT_EQ(default_k(1), 1u);
  EXPECT_EQ(default_k(7), 3u);
  EXPECT_EQ(default_k(40), 20u);
}

// Five images with hand-listed 2D features.
TEST(Neighborhoods, FiveImageToyMatchesDoubleLoop) {
  DatasetBuilder b;
  const float f[5][3][2] = {{{1, 0}, {0, 1}, {1, 1.1f}},
                            {{0.9f, 0.1f}, {0.1f, 0.9f}, {-1, 0.03f}},
                            {{1, 0.2f}, {0.5f, 0.6f}, {0.02f, -1}},
                            {{-0.2f, 1}, {0.7f, 0.6f}, {1, -1.3f}},
                            {{0.3f, 0.35f}, {1, 0.05f}, {-1, -0.8f}}};
  PatchId id = 1;
  for (int i = 0; i < 5; ++i) {
    b.image(i, i < 3 ? Label::kPositive : Label::kNegative);
    for (int k = 0; k < 3; ++k) b.patch(id++, i, Box{0, 5, 0, 5}, {f[i][k][0], f[i][k][1]});
  }
  const auto d = b.build();
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto got = build_neighborhoods(d, k);
    const auto want = oracle::brute_force_neighborhoods(d, k);
    ASSERT_EQ(got.size(), want.size());
    for (const auto& [q, list] : want) {
      const auto& nb = got.at(q).neighbors;
      ASSERT_EQ(nb.size(), list.size()) << "query " << q;
      for (std::size_t i = 0; i < list.size(); ++i) {
        EXPECT_EQ(nb[i].patch_id, list[i].patch);
        EXPECT_NEAR(nb[i].distance, list[i].distance, 1e-12);
      }
    }
  }
}

TEST(Neighborhoods, RandomDatasetsMatchDoubleLoopAndInvariants) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = testutil::random_dataset(rng, 6 + trial % 5, 4 + trial % 7, 5);
    ASSERT_LE(d.patches().size(), 200u);
    const std::size_t k = 1 + trial % 6;
    const auto got = build_neighborhoods(d, k);
    const auto want = oracle::brute_force_neighborhoods(d, k);
    for (const auto& [q, list] : want) {
      const auto& nb = got.at(q).neighbors;
      ASSERT_EQ(nb.size(), list.size());
      std::set<ImageId> images;
      for (std::size_t i = 0; i < list.size(); ++i) {
        EXPECT_EQ(nb[i].patch_id, list[i].patch);
        EXPECT_NEAR(nb[i].distance, list[i].distance, 1e-12);
        if (i > 0) {
          EXPECT_LE(nb[i - 1].distance, nb[i].distance);
        }
        EXPECT_TRUE(images.insert(d.patch(nb[i].patch_id).image_id).second);
        EXPECT_NE(d.patch(nb[i].patch_id).image_id, d.patch(q).image_id);
      }
      EXPECT_LE(nb.size(), std::min(k, d.images().size() - 1));
    }
  }
}

TEST(Neighborhoods, InvariantUnderPatchPermutation) {
  std::mt19937_64 rng(5);
  const auto d = testutil::random_dataset(rng, 8, 6, 4);
  std::vector<PatchRecord> shuffled(d.patches().begin(), d.patches().end());
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const Dataset p(std::vector<ImageInfo>(d.images().begin(), d.images().end()), shuffled, d.dim());
  const auto a = build_neighborhoods(d, 3);
  const auto b = build_neighborhoods(p, 3);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [q, n] : a) {
    const auto& m = b.at(q);
    ASSERT_EQ(n.neighbors.size(), m.neighbors.size());
    for (std::size_t i = 0; i < n.neighbors.size(); ++i) {
      EXPECT_EQ(n.neighbors[i].patch_id, m.neighbors[i].patch_id);
      EXPECT_EQ(n.neighbors[i].distance, m.neighbors[i].distance);
    }
  }
}

TEST(NearestCandidate, PicksHighestIouLowestIdOnTies) {
  DatasetBuilder b;
  b.image(1, Label::kPositive);
  b.patch(5, 1, Box{0, 10, 0, 10}, {1, 0});
  b.patch(3, 1, Box{0, 10, 0, 10}, {1, 0});
  b.patch(4, 1, Box{50, 60, 50, 60}, {1, 0});
  const auto d = b.build();
  NearestCandidateFeatures lookup(d);
  EXPECT_EQ(lookup.representative(1, Box{1, 10, 0, 10}), 3);
  EXPECT_EQ(lookup.representative(1, Box{50, 61, 50, 60}), 4);
  EXPECT_EQ(lookup.representative_avoiding(1, Box{1, 10, 0, 10}, Box{0, 10, 0, 10}, 0.5), 4);
}

}  // namespace
