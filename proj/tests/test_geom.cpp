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

#include <random>

#include "oracles.hpp"
#include "partconf/geom.hpp"

using namespace partconf;

namespace {

Box random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 100);
  double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
  return box_ltrb(std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d));
}

TEST(Iou, IdenticalBoxes) { EXPECT_EQ(iou(Box{0, 10, 0, 10}, Box{0, 10, 0, 10}), 1.0); }

TEST(Iou, DisjointBoxes) { EXPECT_EQ(iou(Box{0, 10, 0, 10}, Box{20, 30, 0, 10}), 0.0); }

TEST(Iou, HalfShiftedIsOneThird) {
  // intersection 50, union 150
  EXPECT_DOUBLE_EQ(iou(Box{0, 10, 0, 10}, Box{5, 15, 0, 10}), 1.0 / 3.0);
}

TEST(Iou, DegenerateBoxesScoreZero) {
  EXPECT_EQ(iou(Box{5, 5, 0, 10}, Box{5, 5, 0, 10}), 0.0);
  EXPECT_EQ(iou(Box{0, 10, 3, 3}, Box{0, 10, 0, 10}), 0.0);
}

TEST(Iou, RandomPairsAreSymmetricBoundedAndMatchOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Box a = random_box(rng), b = random_box(rng);
    const double v = iou(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_NEAR(v, oracle::box_iou(a, b), 1e-12);
    if (!a.degenerate()) {
      EXPECT_EQ(iou(a, a), 1.0);
    }
  }
}

TEST(UnionBbox, Examples) {
  EXPECT_EQ(union_bbox(Box{0, 40, 0, 100}, Box{20, 100, 30, 70}), (Box{0, 100, 0, 100}));
  const Box b{3, 9, 2, 7};
  EXPECT_EQ(union_bbox(b, b), b);
  EXPECT_EQ(union_bbox(Box{4, 5, 4, 5}, Box{0, 10, 0, 10}), (Box{0, 10, 0, 10}));
}

TEST(UnionBbox, ContainsBothAndIsCommutativeAssociative) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const Box a = random_box(rng), b = random_box(rng), c = random_box(rng);
    const Box u = union_bbox(a, b);
    EXPECT_TRUE(contains(u, a));
    EXPECT_TRUE(contains(u, b));
    EXPECT_EQ(u, union_bbox(b, a));
    EXPECT_EQ(union_bbox(union_bbox(a, b), c), union_bbox(a, union_bbox(b, c)));
  }
}

TEST(Intersect, Examples) {
  EXPECT_EQ(intersect(Box{0, 40, 0, 100}, Box{20, 100, 30, 70}), (Box{20, 40, 30, 70}));
  const Box b{3, 9, 2, 7};
  EXPECT_EQ(intersect(b, b), b);
  EXPECT_FALSE(intersect(Box{0, 10, 0, 10}, Box{20, 30, 0, 10}).has_value());
}

TEST(Intersect, TouchingBoxesGiveZeroAreaBox) {
  const auto t = intersect(Box{0, 10, 0, 10}, Box{10, 20, 0, 10});
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(t->area(), 0.0);
}

TEST(Intersect, InclusionExclusion) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 500; ++i) {
    const Box a = random_box(rng), b = random_box(rng);
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    EXPECT_NEAR(inter + uni, a.area() + b.area(), 1e-9);
    const auto ib = intersect(a, b);
    EXPECT_EQ(inter, ib ? ib->area() : 0.0);
  }
}

}  // namespace
