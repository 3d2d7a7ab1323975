/* Copyright 2026 The Firewatch Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "firewatch/detail/numeric.hpp"
#include "firewatch/geometry.hpp"
#include "oracles.hpp"

namespace firewatch {
namespace {

TEST(BBoxTest, RejectsInvalidBoxes) {
  EXPECT_THROW(BBox(0.5, 0.5, 0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(BBox(0.5, 0.5, 0.1, -0.1), std::invalid_argument);
  EXPECT_THROW(BBox(1.5, 0.5, 0.1, 0.1), std::invalid_argument);
  EXPECT_THROW(BBox(0.5, 0.5, 1.1, 0.1), std::invalid_argument);
  EXPECT_NO_THROW(BBox(0.5, 0.5, 1.0, 1.0));
}

TEST(BBoxTest, CornersRoundTrip) {
  const BBox b = BBox::from_corners(0.25, 0.125, 0.75, 0.625);
  EXPECT_EQ(b.cx(), 0.5);
  EXPECT_EQ(b.cy(), 0.375);
  EXPECT_EQ(b.w(), 0.5);
  EXPECT_EQ(b.h(), 0.5);
  const Corners c = b.corners();
  EXPECT_EQ(c.x0, 0.25);
  EXPECT_EQ(c.y1, 0.625);
  EXPECT_EQ(b.area(), 0.25);
}

TEST(IoUTest, IdenticalBoxesGiveOne) {
  const BBox b(0.3, 0.4, 0.2, 0.1);
  EXPECT_EQ(iou(b, b), 1.0);
}

TEST(IoUTest, DisjointAndTouchingBoxesGiveZero) {
  const BBox a = BBox::from_corners(0.0, 0.0, 0.25, 0.25);
  const BBox b = BBox::from_corners(0.5, 0.5, 0.75, 0.75);
  const BBox touching = BBox::from_corners(0.25, 0.0, 0.5, 0.25);
  EXPECT_EQ(iou(a, b), 0.0);
  EXPECT_EQ(iou(a, touching), 0.0);
}

TEST(IoUTest, HalfOverlapIsOneThird) {
  // Two 2x1 cell boxes sharing one cell: I = 1, U = 3.
  const BBox a = BBox::from_corners(0.0, 0.0, 0.5, 0.25);
  const BBox b = BBox::from_corners(0.25, 0.0, 0.75, 0.25);
  EXPECT_EQ(iou(a, b), 1.0 / 3.0);
}

TEST(IoUTest, SymmetricAndBounded) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto ra = oracle::random_grid_rect(rng, 16);
    const auto rb = oracle::random_grid_rect(rng, 16);
    const BBox a = ra.to_bbox(16), b = rb.to_bbox(16);
    EXPECT_EQ(iou(a, b), iou(b, a));
    EXPECT_GE(iou(a, b), 0.0);
    EXPECT_LE(iou(a, b), 1.0);
  }
}

TEST(IoUTest, MatchesCellCountsOnCoarseGrid) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto ra = oracle::random_grid_rect(rng, 8);
    const auto rb = oracle::random_grid_rect(rng, 8);
    const auto counts = oracle::rasterize(ra, rb, 8);
    const BBox a = ra.to_bbox(8), b = rb.to_bbox(8);
    EXPECT_EQ(intersection_area(a, b) * 64.0, static_cast<double>(counts.intersection));
    EXPECT_EQ(union_area(a, b) * 64.0, static_cast<double>(counts.uni));
    EXPECT_EQ(iou(a, b), static_cast<double>(counts.intersection) / static_cast<double>(counts.uni));
  }
}

TEST(ClassTest, NamesAndIndices) {
  EXPECT_EQ(class_name(ClassId::kFire), "fire");
  EXPECT_EQ(class_name(ClassId::kSmoke), "smoke");
  EXPECT_EQ(class_from_name("smoke"), ClassId::kSmoke);
  EXPECT_FALSE(class_from_name("steam").has_value());
  EXPECT_EQ(class_from_index(0), ClassId::kFire);
  EXPECT_FALSE(class_from_index(2).has_value());
  EXPECT_FALSE(class_from_index(-1).has_value());
}

TEST(NmsTest, SuppressesOverlappingSameClass) {
  const BBox a = BBox::from_corners(0.0, 0.0, 0.5, 0.5);
  const BBox b = BBox::from_corners(0.0, 0.0, 0.5, 0.45);  // IoU 0.9 with a
  const std::vector<Detection> dets = {
      {b, ClassId::kFire, 0.6}, {a, ClassId::kFire, 0.9}, {b, ClassId::kSmoke, 0.5}};
  const auto kept = nms(dets, 0.45);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].confidence, 0.9);
  EXPECT_EQ(kept[0].cls, ClassId::kFire);
  EXPECT_EQ(kept[1].cls, ClassId::kSmoke);
}

TEST(NmsTest, SuppressesAtExactlyTheThreshold) {
  const BBox a = BBox::from_corners(0.0, 0.0, 0.5, 0.25);
  const BBox b = BBox::from_corners(0.25, 0.0, 0.75, 0.25);  // IoU exactly 1/3
  const std::vector<Detection> dets = {{a, ClassId::kFire, 0.9}, {b, ClassId::kFire, 0.8}};
  EXPECT_EQ(nms(dets, 1.0 / 3.0).size(), 1u);
  EXPECT_EQ(nms(dets, 0.34).size(), 2u);
}

TEST(NmsTest, TiesKeepEarlierDetection) {
  const BBox a = BBox::from_corners(0.0, 0.0, 0.5, 0.5);
  const BBox b = BBox::from_corners(0.0, 0.0, 0.5, 0.5);
  const std::vector<Detection> dets = {{a, ClassId::kFire, 0.7}, {b, ClassId::kFire, 0.7}};
  const auto kept = nms(dets, 0.5);
  ASSERT_EQ(kept.size(), 1u);
}

TEST(NmsTest, AgreesWithSubsetCharacterization) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(1, 8);
  std::uniform_int_distribution<int> conf(1, 6);  // few levels so ties happen
  std::uniform_int_distribution<int> cls(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Detection> dets;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      dets.push_back({oracle::random_grid_rect(rng, 4).to_bbox(4),
                      cls(rng) ? ClassId::kSmoke : ClassId::kFire, conf(rng) / 6.0});
    }
    const auto expected = oracle::nms_by_subsets(dets, 0.45);
    ASSERT_FALSE(expected.empty());
    const auto kept = nms(dets, 0.45);
    ASSERT_EQ(kept.size(), expected.size()) << "trial " << trial;
    std::vector<bool> used(dets.size(), false);
    for (const auto& k : kept) {
      bool found = false;
      for (std::size_t idx : expected) {
        if (!used[idx] && dets[idx].box.cx() == k.box.cx() && dets[idx].box.cy() == k.box.cy() &&
            dets[idx].box.w() == k.box.w() && dets[idx].box.h() == k.box.h() &&
            dets[idx].cls == k.cls && dets[idx].confidence == k.confidence) {
          used[idx] = true;
          found = true;
          break;
        }
      }
      EXPECT_TRUE(found) << "trial " << trial;
    }
  }
}

TEST(NumericTest, ShortestFixedFormatting) {
  EXPECT_EQ(detail::shortest_fixed(0.5), "0.5");
  EXPECT_EQ(detail::shortest_fixed(1.0), "1");
  EXPECT_EQ(detail::shortest_fixed(0.1), "0.1");
  EXPECT_EQ(detail::shortest_fixed(275.0), "275");
  EXPECT_EQ(detail::fixed(12.0, 3), "12.000");
}

TEST(NumericTest, PlainDecimalRejectsExponents) {
  double v = 0;
  EXPECT_TRUE(detail::parse_plain_decimal("0.25", v));
  EXPECT_EQ(v, 0.25);
  EXPECT_FALSE(detail::parse_plain_decimal("1e-3", v));
  EXPECT_FALSE(detail::parse_plain_decimal("abc", v));
  EXPECT_FALSE(detail::parse_plain_decimal("", v));
}

TEST(NumericTest, ExactSumIsCorrectlyRounded) {
  detail::ExactSum s;
  for (double v : {1e16, 1.0, -1e16}) s.add(v);
  EXPECT_EQ(s.value(), 1.0);
  detail::ExactSum t;
  for (int i = 0; i < 10; ++i) t.add(0.1);
  EXPECT_EQ(t.value(), 1.0);
}

TEST(NumericTest, ExactMeanOfRepeatedValueIsThatValue) {
  for (int n = 1; n <= 30; ++n) {
    for (double v : {0.1, 0.3, 0.7, 0.85, 0.9, 1.0 / 3.0}) {
      std::vector<double> xs(n, v);
      EXPECT_EQ(detail::exact_mean(xs, n), v) << "n=" << n << " v=" << v;
    }
  }
}

}  // namespace
}  // namespace firewatch
