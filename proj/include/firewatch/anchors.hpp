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
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "firewatch/dataset.hpp"
#include "firewatch/detail/numeric.hpp"
#include "firewatch/geometry.hpp"

namespace firewatch {

class AnchorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultCanvasPx = 576;
inline constexpr int kDefaultAnchorCount = 16;

struct BoxSize {
  double w = 0;
  double h = 0;

  double area() const { return w * h; }
  bool operator==(const BoxSize&) const = default;
  auto operator<=>(const BoxSize&) const = default;
};

struct AnchorSet {
  int canvas_px = kDefaultCanvasPx;
  std::vector<BoxSize> anchors;  // ascending area

  double mean_area() const {
    if (anchors.empty()) return 0.0;
    double s = 0;
    for (const auto& a : anchors) s += a.area();
    return s / static_cast<double>(anchors.size());
  }

  // Darknet cfg `anchors=` value: "w,h, w,h, ..." rounded to integers.
  std::string to_darknet_string() const {
    std::string out;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      if (i > 0) out += ", ";
      out += std::to_string(std::lround(anchors[i].w)) + "," +
             std::to_string(std::lround(anchors[i].h));
    }
    return out;
  }
};

// IoU of two rectangles sharing a center.
inline double iou_wh(const BoxSize& a, const BoxSize& b) {
  const double inter = std::min(a.w, b.w) * std::min(a.h, b.h);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline double anchor_distance(const BoxSize& box, const BoxSize& centroid) {
  return 1.0 - iou_wh(box, centroid);
}

// Box sizes of one class (or all classes) scaled to a square canvas.
inline std::vector<BoxSize> collect_wh(const DatasetIndex& index, int canvas_px = kDefaultCanvasPx,
                                       std::optional<ClassId> only = std::nullopt) {
  if (canvas_px <= 0) throw AnchorError("canvas size must be positive");
  std::vector<BoxSize> whs;
  for (const auto& img : index.images) {
    for (const auto& l : img.labels) {
      if (only && l.cls != *only) continue;
      whs.push_back({l.box.w() * canvas_px, l.box.h() * canvas_px});
    }
  }
  if (whs.empty()) throw AnchorError("no boxes to cluster");
  return whs;
}

enum class CentroidUpdate { kMean, kMedoid };

struct KMeansOptions {
  int max_iters = 1000;
  CentroidUpdate update = CentroidUpdate::kMean;
  int canvas_px = kDefaultCanvasPx;
};

struct KMeansResult {
  AnchorSet anchors;
  std::vector<std::size_t> cluster_sizes;  // aligned with anchors
  std::vector<double> distance_history;    // total distance after each iteration
  double mean_iou = 0.0;                   // box vs. its centroid
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline std::size_t nearest_centroid(const BoxSize& box, const std::vector<BoxSize>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = anchor_distance(box, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline double cluster_cost(const std::vector<BoxSize>& whs, const std::vector<std::size_t>& members,
                           const BoxSize& centroid) {
  ExactSum s;
  for (std::size_t i : members) s.add(anchor_distance(whs[i], centroid));
  return s.value();
}

// True when moving a cluster's centroid from `from` to `to` does not raise
// its total distance, decided on the exact sums.
inline bool move_does_not_increase(const std::vector<BoxSize>& whs,
                                   const std::vector<std::size_t>& members, const BoxSize& from,
                                   const BoxSize& to) {
  ExactSum diff;
  for (std::size_t i : members) {
    diff.add(anchor_distance(whs[i], to));
    diff.add(-anchor_distance(whs[i], from));
  }
  return diff.value() <= 0.0;
}

// Uniform double in [0,1) from raw engine output, identical across standard
// library implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Greedy k-means++ seeding: the first centroid is a seeded uniform pick; each
// later one is the best of a few candidates drawn with probability
// proportional to squared distance from the nearest chosen centroid. Once
// every box coincides with a centroid the rest are uniform picks.
inline std::vector<BoxSize> initial_centroids(const std::vector<BoxSize>& whs, std::size_t k,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = whs.size();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<BoxSize> picked{whs[static_cast<std::size_t>(rng() % n)]};
  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = anchor_distance(whs[i], picked[0]);
    closest[i] = d * d;
  }
  while (picked.size() < k) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    if (!(total > 0.0)) {
      picked.push_back(whs[static_cast<std::size_t>(rng() % n)]);
      continue;
    }
    std::size_t best = n;
    double best_potential = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      const double target = unit_uniform(rng) * total;
      double run = 0.0;
      std::size_t cand = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        run += closest[i];
        if (run > target && closest[i] > 0.0) {
          cand = i;
          break;
        }
      }
      while (closest[cand] == 0.0) --cand;  // rounding at the tail
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = anchor_distance(whs[i], whs[cand]);
        potential += std::min(closest[i], d * d);
      }
      if (potential < best_potential) {
        best_potential = potential;
        best = cand;
      }
    }
    picked.push_back(whs[best]);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = anchor_distance(whs[i], whs[best]);
      closest[i] = std::min(closest[i], d * d);
    }
  }
  return picked;
}

}  // namespace detail

// k-means over box sizes with distance 1 - IoU of co-centered boxes.
//
// Each iteration assigns every box to its nearest centroid (ties: lowest
// index) and then moves each centroid to the mean (or medoid) of its members.
// A move that would raise the cluster's total distance is not taken, so the
// total distance never increases. Empty clusters are reseeded at the box
// farthest from its centroid. Stops when assignments repeat or after
// max_iters iterations.
inline KMeansResult kmeans_anchors(const std::vector<BoxSize>& whs, int k, std::uint64_t seed,
                                   const KMeansOptions& opts = {}) {
  if (k < 1) throw AnchorError("k must be >= 1");
  if (whs.size() < static_cast<std::size_t>(k)) {
    throw AnchorError("need at least k=" + std::to_string(k) + " boxes, have " +
                      std::to_string(whs.size()));
  }
  for (const auto& b : whs) {
    if (!(b.w > 0.0) || !(b.h > 0.0)) throw AnchorError("box sizes must be positive");
  }
  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<BoxSize> centroids = detail::initial_centroids(whs, kk, seed);
  std::vector<std::size_t> assignment(whs.size(), kk);
  KMeansResult result;
  double previous_total = std::numeric_limits<double>::infinity();

  // Exact objective never increases and rounding is monotone, so the recorded
  // history is non-increasing with no tolerance.
  auto total_distance = [&] {
    detail::ExactSum s;
    for (std::size_t i = 0; i < whs.size(); ++i) s.add(anchor_distance(whs[i], centroids[assignment[i]]));
    return s.value();
  };

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < whs.size(); ++i) {
      const std::size_t c = detail::nearest_centroid(whs[i], centroids);
      if (c != assignment[i]) {
        assignment[i] = c;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      break;
    }

    std::vector<std::vector<std::size_t>> members(kk);
    for (std::size_t i = 0; i < whs.size(); ++i) members[assignment[i]].push_back(i);

    for (std::size_t c = 0; c < kk; ++c) {
      if (members[c].empty()) continue;
      BoxSize candidate;
      if (opts.update == CentroidUpdate::kMean) {
        double sw = 0, sh = 0;
        for (std::size_t i : members[c]) {
          sw += whs[i].w;
          sh += whs[i].h;
        }
        const double n = static_cast<double>(members[c].size());
        candidate = {sw / n, sh / n};
      } else {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i : members[c]) {
          const double cost = detail::cluster_cost(whs, members[c], whs[i]);
          if (cost < best) {
            best = cost;
            candidate = whs[i];
          }
        }
      }
      if (detail::move_does_not_increase(whs, members[c], centroids[c], candidate)) {
        centroids[c] = candidate;
      }
    }

    for (std::size_t c = 0; c < kk; ++c) {
      if (!members[c].empty()) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < whs.size(); ++i) {
        const double d = anchor_distance(whs[i], centroids[assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centroids[c] = whs[far];
    }

    const double total = total_distance();
    if (total > previous_total) {
      throw std::logic_error("k-means objective increased");
    }
    previous_total = total;
    result.distance_history.push_back(total);
  }

  std::vector<std::size_t> order(kk);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (centroids[a].area() != centroids[b].area()) return centroids[a].area() < centroids[b].area();
    return centroids[a] < centroids[b];
  });

  std::vector<std::size_t> sizes(kk, 0);
  double iou_sum = 0;
  for (std::size_t i = 0; i < whs.size(); ++i) {
    ++sizes[assignment[i]];
    iou_sum += iou_wh(whs[i], centroids[assignment[i]]);
  }
  result.anchors.canvas_px = opts.canvas_px;
  for (std::size_t c : order) {
    result.anchors.anchors.push_back(centroids[c]);
    result.cluster_sizes.push_back(sizes[c]);
  }
  result.mean_iou = iou_sum / static_cast<double>(whs.size());
  return result;
}

inline KMeansResult kmeans_anchors(const DatasetIndex& index, int k, std::uint64_t seed,
                                   const KMeansOptions& opts = {}) {
  return kmeans_anchors(collect_wh(index, opts.canvas_px), k, seed, opts);
}

struct ClassAnchors {
  std::optional<KMeansResult> result;
  std::string error;  // set when clustering failed for this class
};

// Clusters each class's boxes independently. Classes without boxes are left
// out of the map; classes with fewer boxes than k carry an error.
inline std::map<ClassId, ClassAnchors> per_class_anchors(const DatasetIndex& index, int k,
                                                         std::uint64_t seed,
                                                         const KMeansOptions& opts = {}) {
  std::map<ClassId, ClassAnchors> out;
  for (ClassId cls : kAllClasses) {
    std::vector<BoxSize> whs;
    try {
      whs = collect_wh(index, opts.canvas_px, cls);
    } catch (const AnchorError&) {
      continue;
    }
    ClassAnchors entry;
    try {
      entry.result = kmeans_anchors(whs, k, seed, opts);
    } catch (const AnchorError& e) {
      entry.error = e.what();
    }
    out.emplace(cls, std::move(entry));
  }
  return out;
}

// Side-car report: one line per anchor with cluster size, then mean IoU.
inline std::string anchor_report(const KMeansResult& r) {
  std::string out;
  for (std::size_t i = 0; i < r.anchors.anchors.size(); ++i) {
    const auto& a = r.anchors.anchors[i];
    out += "anchor " + std::to_string(i) + ": " + detail::fixed(a.w, 2) + " x " +
           detail::fixed(a.h, 2) + "  boxes=" + std::to_string(r.cluster_sizes[i]) + "\n";
  }
  out += "mean_iou: " + detail::fixed(r.mean_iou, 4) + "\n";
  out += "iterations: " + std::to_string(r.iterations) + (r.converged ? " (converged)" : "") + "\n";
  return out;
}

}  // namespace firewatch
