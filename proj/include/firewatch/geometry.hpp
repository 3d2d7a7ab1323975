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
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace firewatch {

// The two object classes the detector emits.
enum class ClassId : std::uint8_t { kFire = 0, kSmoke = 1 };

inline constexpr std::size_t kNumClasses = 2;
inline constexpr std::array<ClassId, kNumClasses> kAllClasses = {
    ClassId::kFire, ClassId::kSmoke};

constexpr std::size_t index_of(ClassId c) {
  return static_cast<std::size_t>(c);
}

constexpr std::string_view class_name(ClassId c) {
  return c == ClassId::kFire ? "fire" : "smoke";
}

inline std::optional<ClassId> class_from_name(std::string_view name) {
  if (name == "fire") return ClassId::kFire;
  if (name == "smoke") return ClassId::kSmoke;
  return std::nullopt;
}

inline std::optional<ClassId> class_from_index(long long id) {
  if (id < 0 || id >= static_cast<long long>(kNumClasses)) return std::nullopt;
  return static_cast<ClassId>(id);
}

// Per-class storage indexed by ClassId.
template <typename T>
struct PerClass {
  std::array<T, kNumClasses> values{};

  T& operator[](ClassId c) { return values[index_of(c)]; }
  const T& operator[](ClassId c) const { return values[index_of(c)]; }
  bool operator==(const PerClass&) const = default;
};

// Axis-aligned corners in normalized image coordinates.
struct Corners {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double area() const { return (x1 - x0) * (y1 - y0); }
};

// Center-format rectangle normalized to the image size (darknet convention).
class BBox {
 public:
  BBox() = default;

  // Throws std::invalid_argument unless 0 <= cx,cy <= 1 and 0 < w,h <= 1.
  BBox(double cx, double cy, double w, double h) : cx_(cx), cy_(cy), w_(w), h_(h) {
    if (!is_valid(cx, cy, w, h)) {
      throw std::invalid_argument("invalid box (" + std::to_string(cx) + ", " +
                                  std::to_string(cy) + ", " + std::to_string(w) +
                                  ", " + std::to_string(h) + ")");
    }
  }

  static bool is_valid(double cx, double cy, double w, double h) {
    return cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0 && w > 0.0 &&
           w <= 1.0 && h > 0.0 && h <= 1.0;
  }

  static BBox from_corners(double x0, double y0, double x1, double y1) {
    return BBox((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0);
  }

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double w() const { return w_; }
  double h() const { return h_; }

  // Corners clamped to the unit square.
  Corners corners() const {
    return {std::clamp(cx_ - w_ / 2.0, 0.0, 1.0), std::clamp(cy_ - h_ / 2.0, 0.0, 1.0),
            std::clamp(cx_ + w_ / 2.0, 0.0, 1.0), std::clamp(cy_ + h_ / 2.0, 0.0, 1.0)};
  }

  double area() const { return corners().area(); }

  bool operator==(const BBox&) const = default;

 private:
  double cx_ = 0.5, cy_ = 0.5, w_ = 1.0, h_ = 1.0;
};

struct Detection {
  BBox box;
  ClassId cls = ClassId::kFire;
  double confidence = 0.0;

  bool operator==(const Detection&) const = default;
};

inline double intersection_area(const BBox& a, const BBox& b) {
  const Corners p = a.corners();
  const Corners q = b.corners();
  const double iw = std::min(p.x1, q.x1) - std::max(p.x0, q.x0);
  const double ih = std::min(p.y1, q.y1) - std::max(p.y0, q.y0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

inline double union_area(const BBox& a, const BBox& b) {
  return a.area() + b.area() - intersection_area(a, b);
}

inline double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::min(1.0, inter / uni);
}

// Class-aware greedy non-maximum suppression.
//
// Within each class, detections are visited by descending confidence (ties:
// input order) and a detection is dropped when its IoU with an already kept
// detection of the same class is >= iou_threshold. The result is ordered by
// descending confidence, ties by input order.
inline std::vector<Detection> nms(const std::vector<Detection>& dets,
                                  double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (dets[i].confidence != dets[j].confidence) {
      return dets[i].confidence > dets[j].confidence;
    }
    return i < j;
  });

  std::vector<std::size_t> kept;
  kept.reserve(dets.size());
  for (std::size_t i : order) {
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (dets[k].cls == dets[i].cls && iou(dets[k].box, dets[i].box) >= iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(i);
  }

  std::vector<Detection> out;
  out.reserve(kept.size());
  for (std::size_t k : kept) out.push_back(dets[k]);
  return out;
}

}  // namespace firewatch
