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
#include <deque>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "firewatch/detail/numeric.hpp"
#include "firewatch/detect.hpp"
#include "firewatch/geometry.hpp"

namespace firewatch {

struct TemporalConfig {
  int window = 10;
  double assoc_iou = 0.3;
  int miss_limit = 5;
  double decay = 1.0;  // 1 = plain moving average

  void validate() const {
    if (window < 1) throw std::invalid_argument("temporal window must be >= 1");
    if (!(assoc_iou > 0.0 && assoc_iou < 1.0)) {
      throw std::invalid_argument("association IoU must be in (0,1)");
    }
    if (miss_limit < 0) throw std::invalid_argument("miss limit must be >= 0");
    if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must be in (0,1]");
  }
};

struct TrackedRegion {
  std::uint64_t region_id = 0;
  ClassId cls = ClassId::kFire;
  BBox box;
  double evidence = 0.0;
  int frames_seen = 0;
  int frames_missed = 0;
  double born_at = 0.0;
  std::deque<double> history;  // newest last; at most `window` entries
};

// Appends this frame's confidence (absent counts as 0) and recomputes the
// region's evidence: the mean over the last `window` frames, where frames
// before the region existed also count as 0. With decay < 1 the mean is
// weighted by decay^age, normalized over the full window.
inline double smooth(TrackedRegion& region, std::optional<double> conf, const TemporalConfig& cfg) {
  region.history.push_back(conf.value_or(0.0));
  while (region.history.size() > static_cast<std::size_t>(cfg.window)) region.history.pop_front();

  if (cfg.decay == 1.0) {
    const std::vector<double> values(region.history.begin(), region.history.end());
    region.evidence = detail::exact_mean(values, static_cast<std::size_t>(cfg.window));
  } else {
    double num = 0.0, den = 0.0, w = 1.0;
    for (int age = 0; age < cfg.window; ++age) {
      const std::size_t n = region.history.size();
      if (static_cast<std::size_t>(age) < n) num += w * region.history[n - 1 - static_cast<std::size_t>(age)];
      den += w;
      w *= cfg.decay;
    }
    region.evidence = num / den;
  }
  return region.evidence;
}

// ---------------------------------------------------------------------------
// Association

struct Association {
  std::size_t region = 0;  // index into the region list
  std::size_t detection = 0;
  double iou = 0.0;
};

struct AssociationPlan {
  std::vector<Association> matches;
  std::vector<std::size_t> unmatched_regions;
  std::vector<std::size_t> unmatched_detections;
};

// Greedy same-class matching by descending IoU (ties: region index, then
// detection index). Pairs below assoc_iou never match.
inline AssociationPlan associate(const std::vector<TrackedRegion>& regions,
                                 const std::vector<Detection>& dets, const TemporalConfig& cfg) {
  std::vector<Association> candidates;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (regions[r].cls != dets[d].cls) continue;
      const double v = iou(regions[r].box, dets[d].box);
      if (v >= cfg.assoc_iou) candidates.push_back({r, d, v});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Association& a, const Association& b) { return a.iou > b.iou; });

  AssociationPlan plan;
  std::vector<bool> region_used(regions.size(), false), det_used(dets.size(), false);
  for (const auto& c : candidates) {
    if (region_used[c.region] || det_used[c.detection]) continue;
    region_used[c.region] = det_used[c.detection] = true;
    plan.matches.push_back(c);
  }
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (!region_used[r]) plan.unmatched_regions.push_back(r);
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (!det_used[d]) plan.unmatched_detections.push_back(d);
  }
  return plan;
}

struct TrackerUpdate {
  std::vector<TrackedRegion> regions;  // live regions after this frame
  std::vector<TrackedRegion> retired;  // regions retired on this frame
  std::vector<std::uint64_t> spawned;  // ids created on this frame
};

// Per-stream region tracker. Not thread-safe; one updater per stream.
class RegionTracker {
 public:
  explicit RegionTracker(TemporalConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  TrackerUpdate update(const FrameDetections& frame) {
    const AssociationPlan plan = associate(regions_, frame.detections, cfg_);
    TrackerUpdate out;

    std::vector<bool> matched(regions_.size(), false);
    for (const auto& m : plan.matches) {
      TrackedRegion& r = regions_[m.region];
      const Detection& d = frame.detections[m.detection];
      r.box = d.box;
      ++r.frames_seen;
      r.frames_missed = 0;
      smooth(r, d.confidence, cfg_);
      matched[m.region] = true;
    }
    std::vector<TrackedRegion> live;
    live.reserve(regions_.size() + plan.unmatched_detections.size());
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      TrackedRegion& r = regions_[i];
      if (!matched[i]) {
        ++r.frames_missed;
        smooth(r, std::nullopt, cfg_);
        if (r.frames_missed > cfg_.miss_limit) {
          out.retired.push_back(std::move(r));
          continue;
        }
      }
      live.push_back(std::move(r));
    }
    for (std::size_t d : plan.unmatched_detections) {
      const Detection& det = frame.detections[d];
      TrackedRegion r;
      r.region_id = next_id_++;
      r.cls = det.cls;
      r.box = det.box;
      r.frames_seen = 1;
      r.born_at = frame.timestamp_s;
      smooth(r, det.confidence, cfg_);
      out.spawned.push_back(r.region_id);
      live.push_back(std::move(r));
    }
    regions_ = std::move(live);
    out.regions = regions_;
    return out;
  }

  const std::vector<TrackedRegion>& regions() const { return regions_; }
  const TemporalConfig& config() const { return cfg_; }

 private:
  TemporalConfig cfg_;
  std::vector<TrackedRegion> regions_;
  std::uint64_t next_id_ = 1;
};

// Region-trace log line: {"stream", "frame", "region_id", "class", "evidence"}.
inline void write_region_trace(std::ostream& out, const FrameDetections& frame,
                               const std::vector<TrackedRegion>& regions) {
  for (const auto& r : regions) {
    out << "{\"stream\": " << nlohmann::json(frame.stream_id).dump()
        << ", \"frame\": " << frame.frame_index << ", \"region_id\": " << r.region_id
        << ", \"class\": \"" << class_name(r.cls) << "\", \"evidence\": "
        << detail::fixed(r.evidence, 6) << "}\n";
  }
}

}  // namespace firewatch
