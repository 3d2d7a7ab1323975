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
#include <algorithm>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "firewatch/anchors.hpp"
#include "oracles.hpp"

namespace firewatch {
namespace {

std::vector<BoxSize> random_sizes(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(4, 576);
  std::vector<BoxSize> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({static_cast<double>(px(rng)), static_cast<double>(px(rng))});
  }
  return out;
}

TEST(AnchorDistanceTest, CoCenteredIoU) {
  EXPECT_EQ(iou_wh({10, 10}, {10, 10}), 1.0);
  EXPECT_EQ(iou_wh({10, 10}, {20, 20}), 0.25);
  EXPECT_EQ(iou_wh({10, 20}, {20, 10}), 100.0 / 300.0);
  EXPECT_EQ(anchor_distance({10, 10}, {20, 20}), 0.75);
}

TEST(CollectTest, ScalesToCanvasAndFiltersClass) {
  DatasetIndex idx;
  LabeledImage img;
  img.labels = {{ClassId::kFire, BBox(0.5, 0.5, 0.25, 0.5)},
                {ClassId::kSmoke, BBox(0.5, 0.5, 1.0, 0.125)}};
  idx.images.push_back(img);
  const auto all = collect_wh(idx, 576);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].w, 144.0);
  EXPECT_EQ(all[0].h, 288.0);
  const auto smoke = collect_wh(idx, 576, ClassId::kSmoke);
  ASSERT_EQ(smoke.size(), 1u);
  EXPECT_EQ(smoke[0].w, 576.0);
  EXPECT_EQ(smoke[0].h, 72.0);
  DatasetIndex empty;
  EXPECT_THROW(collect_wh(empty), AnchorError);
}

TEST(KMeansTest, RejectsTooFewBoxes) {
  EXPECT_THROW(kmeans_anchors(random_sizes(1, 3), 4, 0), AnchorError);
  EXPECT_THROW(kmeans_anchors(random_sizes(1, 3), 0, 0), AnchorError);
}

TEST(KMeansTest, ObjectiveNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto whs = random_sizes(seed, 80);
    for (auto update : {CentroidUpdate::kMean, CentroidUpdate::kMedoid}) {
      KMeansOptions opts;
      opts.update = update;
      const KMeansResult r = kmeans_anchors(whs, 9, seed, opts);
      for (std::size_t i = 1; i < r.distance_history.size(); ++i) {
        EXPECT_LE(r.distance_history[i], r.distance_history[i - 1]) << "seed " << seed;
      }
    }
  }
}

TEST(KMeansTest, RecoversTwoWellSeparatedClusters) {
  const std::vector<BoxSize> whs = {{8, 18},   {12, 22},  {10, 20},  {9, 21},  {11, 19},
                                    {96, 48},  {104, 52}, {100, 50}, {98, 49}, {102, 51}};
  const auto expected = oracle::best_two_partition(whs);
  EXPECT_EQ(expected.first, (BoxSize{10, 20}));
  EXPECT_EQ(expected.second, (BoxSize{100, 50}));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const KMeansResult r = kmeans_anchors(whs, 2, seed);
    ASSERT_EQ(r.anchors.anchors.size(), 2u);
    EXPECT_EQ(r.anchors.anchors[0], expected.first) << "seed " << seed;
    EXPECT_EQ(r.anchors.anchors[1], expected.second) << "seed " << seed;
    EXPECT_EQ(r.cluster_sizes, (std::vector<std::size_t>{5, 5}));
    EXPECT_TRUE(r.converged);
  }
}

double oracle_cost(const std::vector<BoxSize>& pts, const BoxSize& m) {
  double cost = 0;
  for (const auto& p : pts) {
    const double inter = std::min(p.w, m.w) * std::min(p.h, m.h);
    cost += 1.0 - inter / (p.w * p.h + m.w * m.h - inter);
  }
  return cost;
}

TEST(KMeansTest, RecoversExhaustiveTwoPartitionOnSmallSets) {
  // The best 2-partition splits the two groups; each returned centroid is
  // either the group mean or a point the mean does not improve on.
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> jitter(-2, 2);
    std::vector<BoxSize> small, large;
    for (int i = 0; i < 4; ++i) small.push_back({20.0 + jitter(rng), 30.0 + jitter(rng)});
    for (int i = 0; i < 4; ++i) large.push_back({300.0 + jitter(rng), 200.0 + jitter(rng)});
    std::vector<BoxSize> whs = small;
    whs.insert(whs.end(), large.begin(), large.end());
    const auto expected = oracle::best_two_partition(whs);
    const KMeansResult r = kmeans_anchors(whs, 2, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(r.cluster_sizes, (std::vector<std::size_t>{4, 4}));
    const std::vector<BoxSize> groups[2] = {small, large};
    const BoxSize means[2] = {expected.first, expected.second};
    for (int g = 0; g < 2; ++g) {
      const BoxSize& got = r.anchors.anchors[g];
      if (got != means[g]) {
        EXPECT_LE(oracle_cost(groups[g], got), oracle_cost(groups[g], means[g])) << "trial " << trial;
      }
    }

    KMeansOptions medoid;
    medoid.update = CentroidUpdate::kMedoid;
    const KMeansResult m = kmeans_anchors(whs, 2, static_cast<std::uint64_t>(trial), medoid);
    for (int g = 0; g < 2; ++g) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : groups[g]) best = std::min(best, oracle_cost(groups[g], p));
      EXPECT_EQ(oracle_cost(groups[g], m.anchors.anchors[g]), best) << "trial " << trial;
    }
  }
}

TEST(KMeansTest, TwoSeparatedClustersExact) {
  std::vector<BoxSize> whs(4, BoxSize{10, 10});
  whs.insert(whs.end(), 4, BoxSize{200, 200});
  const auto expected = oracle::best_two_partition(whs);
  EXPECT_EQ(expected.first, (BoxSize{10, 10}));
  EXPECT_EQ(expected.second, (BoxSize{200, 200}));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const KMeansResult r = kmeans_anchors(whs, 2, seed);
    EXPECT_EQ(r.anchors.anchors[0], expected.first);
    EXPECT_EQ(r.anchors.anchors[1], expected.second);
  }
}

TEST(KMeansTest, SortedByAreaAndDeterministic) {
  const auto whs = random_sizes(5, 200);
  const KMeansResult a = kmeans_anchors(whs, 16, 1234);
  const KMeansResult b = kmeans_anchors(whs, 16, 1234);
  ASSERT_EQ(a.anchors.anchors.size(), 16u);
  for (std::size_t i = 1; i < 16; ++i) {
    EXPECT_LE(a.anchors.anchors[i - 1].area(), a.anchors.anchors[i].area());
  }
  EXPECT_EQ(a.anchors.to_darknet_string(), b.anchors.to_darknet_string());
  EXPECT_EQ(a.distance_history, b.distance_history);
  std::size_t total = 0;
  for (auto s : a.cluster_sizes) total += s;
  EXPECT_EQ(total, 200u);
  EXPECT_GT(a.mean_iou, 0.0);
  EXPECT_LE(a.mean_iou, 1.0);
}

TEST(KMeansTest, DuplicateHeavyInputStillGetsDistinctSeeds) {
  std::vector<BoxSize> whs(50, BoxSize{40, 40});
  whs.push_back({200, 100});
  whs.push_back({90, 300});
  const KMeansResult r = kmeans_anchors(whs, 3, 7);
  EXPECT_EQ(r.anchors.anchors[0], (BoxSize{40, 40}));
  EXPECT_EQ(r.cluster_sizes[0], 50u);
}

TEST(KMeansTest, DarknetStringFormat) {
  AnchorSet s;
  s.anchors = {{10.4, 13.6}, {33.5, 23}};
  EXPECT_EQ(s.to_darknet_string(), "10,14, 34,23");
}

TEST(PerClassTest, ReportsPerClassFailures) {
  DatasetIndex idx;
  for (int i = 0; i < 6; ++i) {
    LabeledImage img;
    img.labels.push_back({ClassId::kFire, BBox(0.5, 0.5, 0.05 * (i + 1), 0.1)});
    if (i == 0) img.labels.push_back({ClassId::kSmoke, BBox(0.5, 0.5, 0.9, 0.9)});
    idx.images.push_back(img);
  }
  const auto out = per_class_anchors(idx, 3, 1);
  ASSERT_EQ(out.size(), 2u);
  ASSERT_TRUE(out.at(ClassId::kFire).result.has_value());
  EXPECT_EQ(out.at(ClassId::kFire).result->anchors.anchors.size(), 3u);
  EXPECT_FALSE(out.at(ClassId::kSmoke).result.has_value());
  EXPECT_NE(out.at(ClassId::kSmoke).error.find("need at least k=3"), std::string::npos);
}

}  // namespace
}  // namespace firewatch
