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
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"

#include "firewatch/dataset.hpp"
#include "firewatch/detail/numeric.hpp"
#include "firewatch/detect.hpp"
#include "firewatch/geometry.hpp"

// Two evaluation perspectives over the same detector output:
//  * detection: every ground-truth box must be found (IoU matching), giving
//    TP/FP/FN per box plus AP;
//  * recognition: an image is flagged correctly if at least one box of the
//    class is found, giving TP/TN/FP/FN per image.

namespace firewatch {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ApMethod { kAllPoint, kElevenPoint };

struct EvalConfig {
  double iou_threshold = 0.5;
  double confidence_threshold = 0.25;
  ApMethod ap_method = ApMethod::kAllPoint;

  void validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
      throw std::invalid_argument("IoU threshold must be in (0,1)");
    }
    if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0)) {
      throw std::invalid_argument("confidence threshold must be in (0,1)");
    }
  }
};

// Exact non-negative fraction; undefined when the denominator is zero.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 0;

  bool defined() const { return den > 0; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Ratio&) const = default;
};

// Fraction as a percentage with `decimals` digits, rounded to nearest with
// ties toward zero. Computed exactly from the integers, so 302/400 shows as
// 75 and 297/404 as 74. Undefined ratios render as an em dash.
inline std::string format_percent(const Ratio& r, int decimals) {
  if (!r.defined()) return "—";
  std::int64_t scale = 100;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  const __int128 scaled = static_cast<__int128>(r.num) * scale;
  std::int64_t q = static_cast<std::int64_t>(scaled / r.den);
  const __int128 rem = scaled % r.den;
  if (2 * rem > r.den) ++q;
  std::string digits = std::to_string(q);
  if (decimals == 0) return digits;
  if (digits.size() <= static_cast<std::size_t>(decimals)) {
    digits.insert(0, static_cast<std::size_t>(decimals) + 1 - digits.size(), '0');
  }
  digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
  return digits;
}

struct DetectionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  DetectionCounts& operator+=(const DetectionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const DetectionCounts&) const = default;
};

struct RecognitionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  RecognitionCounts& operator+=(const RecognitionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const RecognitionCounts&) const = default;
};

struct MetricsReport {
  Ratio precision;
  Ratio recall;
  Ratio f1;
  std::optional<double> ap;  // detection perspective only
};

// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R) = 2TP/(2TP+FP+FN).
// F1 is undefined unless both P and R are; it is 0 when TP = 0.
inline MetricsReport metrics_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  MetricsReport m;
  m.precision = {tp, tp + fp};
  m.recall = {tp, tp + fn};
  if (m.precision.defined() && m.recall.defined()) {
    m.f1 = tp == 0 ? Ratio{0, 1} : Ratio{2 * tp, 2 * tp + fp + fn};
  }
  return m;
}

inline MetricsReport detection_metrics(const DetectionCounts& c) {
  return metrics_from_counts(c.tp, c.fp, c.fn);
}

inline MetricsReport recognition_metrics(const RecognitionCounts& c) {
  return metrics_from_counts(c.tp, c.fp, c.fn);
}

// ---------------------------------------------------------------------------
// Per-object matching

struct MatchedPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0.0;
};

struct ImageMatch {
  PerClass<DetectionCounts> counts;
  std::vector<MatchedPair> pairs;
  std::vector<bool> pred_is_tp;  // aligned with the input predictions
};

// Prediction visit order: descending confidence, ties by input position.
inline std::vector<std::size_t> confidence_order(const std::vector<Detection>& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });
  return order;
}

// Index of the unmatched same-class ground truth with the highest IoU >=
// threshold (ties: lowest index), if any.
inline std::optional<std::pair<std::size_t, double>> best_unmatched_gt(
    const Detection& pred, const std::vector<Label>& gts, const std::vector<bool>& taken,
    double iou_threshold) {
  std::optional<std::pair<std::size_t, double>> best;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (taken[g] || gts[g].cls != pred.cls) continue;
    const double v = iou(pred.box, gts[g].box);
    if (v >= iou_threshold && (!best || v > best->second)) best = std::make_pair(g, v);
  }
  return best;
}

// Greedy one-to-one matching. A prediction that claims no ground truth is an
// FP of its own class; a ground truth left unclaimed is an FN of its class,
// including when only a wrong-class box covers it.
inline ImageMatch match_image(const std::vector<Detection>& preds, const std::vector<Label>& gts,
                              double iou_threshold) {
  ImageMatch m;
  m.pred_is_tp.assign(preds.size(), false);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t p : confidence_order(preds)) {
    if (auto hit = best_unmatched_gt(preds[p], gts, taken, iou_threshold)) {
      taken[hit->first] = true;
      m.pred_is_tp[p] = true;
      m.pairs.push_back({p, hit->first, hit->second});
      ++m.counts[preds[p].cls].tp;
    } else {
      ++m.counts[preds[p].cls].fp;
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) ++m.counts[gts[g].cls].fn;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Average precision

struct ImageEvidence {
  std::vector<Detection> preds;
  std::vector<Label> gts;
};

struct PrPoint {
  double recall = 0;
  double precision = 0;
  bool is_tp = false;
  std::int64_t tp = 0;    // true positives up to and including this point
  std::int64_t rank = 0;  // predictions up to and including this point
};

// Precision/recall after each prediction of `cls`, sweeping all images'
// predictions by descending confidence and matching each against its own
// image's still-unmatched ground truths.
inline std::vector<PrPoint> pr_curve(std::span<const ImageEvidence> images, ClassId cls,
                                     double iou_threshold, std::size_t* n_gt_out = nullptr) {
  struct Entry {
    double conf;
    std::size_t image;
    std::size_t pred;
  };
  std::vector<Entry> entries;
  std::size_t n_gt = 0;
  std::vector<std::vector<bool>> taken(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    taken[i].assign(images[i].gts.size(), false);
    for (const auto& g : images[i].gts) n_gt += g.cls == cls ? 1 : 0;
    for (std::size_t p = 0; p < images[i].preds.size(); ++p) {
      if (images[i].preds[p].cls == cls) entries.push_back({images[i].preds[p].confidence, i, p});
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.conf > b.conf; });
  if (n_gt_out) *n_gt_out = n_gt;

  std::vector<PrPoint> curve;
  curve.reserve(entries.size());
  std::int64_t tp = 0, fp = 0;
  for (const auto& e : entries) {
    const auto& img = images[e.image];
    const bool hit_found = [&] {
      if (auto hit = best_unmatched_gt(img.preds[e.pred], img.gts, taken[e.image], iou_threshold)) {
        taken[e.image][hit->first] = true;
        return true;
      }
      return false;
    }();
    (hit_found ? tp : fp)++;
    curve.push_back({n_gt ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0,
                     static_cast<double>(tp) / static_cast<double>(tp + fp), hit_found, tp, tp + fp});
  }
  return curve;
}

// Area under the precision/recall curve with the monotone precision envelope
// (precision at recall r := max precision at any recall >= r). Undefined when
// the class has no ground truth.
inline std::optional<double> average_precision(std::span<const ImageEvidence> images, ClassId cls,
                                               double iou_threshold,
                                               ApMethod method = ApMethod::kAllPoint) {
  std::size_t n_gt = 0;
  std::vector<PrPoint> curve = pr_curve(images, cls, iou_threshold, &n_gt);
  if (n_gt == 0) return std::nullopt;

  // Exact arithmetic throughout; the single rounding is the final conversion.
  using Rational = boost::multiprecision::cpp_rational;
  auto precision_at = [&](std::size_t i) { return Rational(curve[i].tp, curve[i].rank); };
  std::vector<std::size_t> envelope(curve.size());  // index of the max precision at or after i
  for (std::size_t i = curve.size(); i-- > 0;) {
    envelope[i] = i;
    if (i + 1 < curve.size() && precision_at(envelope[i + 1]) > precision_at(i)) {
      envelope[i] = envelope[i + 1];
    }
  }
  const auto gt = static_cast<std::int64_t>(n_gt);

  if (method == ApMethod::kElevenPoint) {
    Rational sum = 0;
    for (std::int64_t k = 0; k <= 10; ++k) {
      // first point with recall >= k/10, i.e. 10*tp >= k*n_gt
      for (std::size_t i = 0; i < curve.size(); ++i) {
        if (10 * curve[i].tp >= k * gt) {
          sum += precision_at(envelope[i]);
          break;
        }
      }
    }
    return static_cast<double>(sum / 11);
  }

  // Each TP raises recall by exactly 1/n_gt.
  Rational sum = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].is_tp) sum += precision_at(envelope[i]);
  }
  return static_cast<double>(sum / gt);
}

// ---------------------------------------------------------------------------
// Per-image recognition

enum class Outcome { kTP, kTN, kFP, kFN };

inline std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kTP: return "TP";
    case Outcome::kTN: return "TN";
    case Outcome::kFP: return "FP";
    case Outcome::kFN: return "FN";
  }
  return "?";
}

// An image with ground truth of `cls` is a TP when some predicted box of the
// class overlaps any of them with IoU >= threshold, else FN. An image
// without ground truth of `cls` is an FP when any box of the class is
// predicted, else TN.
inline Outcome recognize_image(const std::vector<Detection>& preds, const std::vector<Label>& gts,
                               ClassId cls, double iou_threshold) {
  const bool has_gt = std::any_of(gts.begin(), gts.end(), [&](const Label& g) { return g.cls == cls; });
  if (!has_gt) {
    const bool any_pred =
        std::any_of(preds.begin(), preds.end(), [&](const Detection& d) { return d.cls == cls; });
    return any_pred ? Outcome::kFP : Outcome::kTN;
  }
  for (const auto& d : preds) {
    if (d.cls != cls) continue;
    for (const auto& g : gts) {
      if (g.cls == cls && iou(d.box, g.box) >= iou_threshold) return Outcome::kTP;
    }
  }
  return Outcome::kFN;
}

inline void tally(RecognitionCounts& c, Outcome o) {
  switch (o) {
    case Outcome::kTP: ++c.tp; break;
    case Outcome::kTN: ++c.tn; break;
    case Outcome::kFP: ++c.fp; break;
    case Outcome::kFN: ++c.fn; break;
  }
}

// ---------------------------------------------------------------------------
// Whole-run evaluation

struct GroundTruthSet {
  std::string name;
  std::map<std::string, std::vector<Label>> images;

  static GroundTruthSet from_index(const DatasetIndex& index) {
    GroundTruthSet gt{index.name, {}};
    for (const auto& img : index.images) {
      if (!gt.images.emplace(img.image_id, img.labels).second) {
        throw EvalError("duplicate image id '" + img.image_id + "'");
      }
    }
    return gt;
  }
};

// Detections keyed by image id. In the interchange format each image is its
// own stream with a single frame.
using DetectionSet = std::map<std::string, std::vector<Detection>>;

inline DetectionSet detections_by_image(const std::vector<FrameDetections>& frames) {
  DetectionSet out;
  for (const auto& f : frames) {
    if (out.count(f.stream_id)) {
      throw EvalError("image '" + f.stream_id + "' has more than one frame");
    }
    out[f.stream_id] = f.detections;
  }
  return out;
}

struct DetectionBlock {
  DetectionCounts counts;
  MetricsReport metrics;
};

struct RecognitionBlock {
  RecognitionCounts counts;
  MetricsReport metrics;
};

struct EvalReport {
  EvalConfig config;
  std::string dataset;
  std::size_t n_images = 0;
  PerClass<DetectionBlock> detection;
  DetectionBlock detection_combined;  // AP here is the mean of defined class APs
  PerClass<RecognitionBlock> recognition;
  RecognitionBlock recognition_combined;
};

inline EvalReport evaluate_run(const DetectionSet& dets, const GroundTruthSet& gt,
                               const EvalConfig& cfg) {
  cfg.validate();
  std::vector<std::string> orphans;
  for (const auto& [id, _] : dets) {
    if (!gt.images.count(id)) orphans.push_back(id + " (no ground truth)");
  }
  for (const auto& [id, _] : gt.images) {
    if (!dets.count(id)) orphans.push_back(id + " (no detections record)");
  }
  if (!orphans.empty()) {
    std::string msg = "image id mismatch:";
    for (const auto& o : orphans) msg += " " + o;
    throw EvalError(msg);
  }

  EvalReport report;
  report.config = cfg;
  report.dataset = gt.name;
  report.n_images = gt.images.size();

  std::vector<ImageEvidence> evidence;
  evidence.reserve(gt.images.size());
  PerClass<std::int64_t> gt_boxes{}, kept_preds{}, pos_images{}, neg_images{};

  for (const auto& [id, gts] : gt.images) {
    const auto& all_preds = dets.at(id);
    // AP sweeps every prediction; the counts use the thresholded set.
    evidence.push_back({all_preds, gts});
    std::vector<Detection> preds;
    for (const auto& d : all_preds) {
      if (d.confidence >= cfg.confidence_threshold) preds.push_back(d);
    }
    const ImageMatch m = match_image(preds, gts, cfg.iou_threshold);
    for (ClassId c : kAllClasses) {
      report.detection[c].counts += m.counts[c];
      const Outcome o = recognize_image(preds, gts, c, cfg.iou_threshold);
      tally(report.recognition[c].counts, o);
      if (m.counts[c].tp > 0 && o != Outcome::kTP) {
        throw std::logic_error("detection TP without recognition TP on image " + id);
      }
      const bool has_gt = std::any_of(gts.begin(), gts.end(), [&](const Label& g) { return g.cls == c; });
      (has_gt ? pos_images : neg_images)[c]++;
      for (const auto& g : gts) gt_boxes[c] += g.cls == c ? 1 : 0;
      for (const auto& d : preds) kept_preds[c] += d.cls == c ? 1 : 0;
    }
  }

  double ap_sum = 0.0;
  int ap_defined = 0;
  for (ClassId c : kAllClasses) {
    auto& det = report.detection[c];
    auto& rec = report.recognition[c];
    if (det.counts.tp + det.counts.fn != gt_boxes[c] || det.counts.tp + det.counts.fp != kept_preds[c]) {
      throw std::logic_error("detection count conservation violated");
    }
    if (rec.counts.tp + rec.counts.fn != pos_images[c] ||
        rec.counts.tn + rec.counts.fp != neg_images[c]) {
      throw std::logic_error("recognition count conservation violated");
    }
    det.metrics = detection_metrics(det.counts);
    det.metrics.ap = average_precision(evidence, c, cfg.iou_threshold, cfg.ap_method);
    if (det.metrics.ap) {
      ap_sum += *det.metrics.ap;
      ++ap_defined;
    }
    rec.metrics = recognition_metrics(rec.counts);
    report.detection_combined.counts += det.counts;
    report.recognition_combined.counts += rec.counts;
  }
  report.detection_combined.metrics = detection_metrics(report.detection_combined.counts);
  if (ap_defined > 0) report.detection_combined.metrics.ap = ap_sum / ap_defined;
  report.recognition_combined.metrics = recognition_metrics(report.recognition_combined.counts);
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline nlohmann::ordered_json ratio_json(const Ratio& r) {
  if (!r.defined()) return nullptr;
  return r.value();
}

inline nlohmann::ordered_json metrics_json(const MetricsReport& m, bool with_ap) {
  nlohmann::ordered_json j;
  j["precision"] = ratio_json(m.precision);
  j["recall"] = ratio_json(m.recall);
  j["f1"] = ratio_json(m.f1);
  if (with_ap) j["ap"] = m.ap ? nlohmann::ordered_json(*m.ap) : nlohmann::ordered_json(nullptr);
  return j;
}

inline nlohmann::ordered_json detection_block_json(const DetectionBlock& b) {
  nlohmann::ordered_json j;
  j["tp"] = b.counts.tp;
  j["fp"] = b.counts.fp;
  j["fn"] = b.counts.fn;
  const auto m = metrics_json(b.metrics, true);
  for (const auto& [k, v] : m.items()) j[k] = v;
  return j;
}

inline nlohmann::ordered_json recognition_block_json(const RecognitionBlock& b) {
  nlohmann::ordered_json j;
  j["tp"] = b.counts.tp;
  j["tn"] = b.counts.tn;
  j["fp"] = b.counts.fp;
  j["fn"] = b.counts.fn;
  const auto m = metrics_json(b.metrics, false);
  for (const auto& [k, v] : m.items()) j[k] = v;
  return j;
}

inline std::string pad(const std::string& s, std::size_t width) {
  // em dash is 3 bytes but one column
  std::size_t cols = 0;
  for (unsigned char ch : s) cols += (ch & 0xC0) != 0x80 ? 1 : 0;
  return cols >= width ? s : std::string(width - cols, ' ') + s;
}

inline std::string ap_percent(const std::optional<double>& ap) {
  return ap ? fixed(*ap * 100.0, 1) + "%" : "—";
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["images"] = r.n_images;
  j["config"] = {{"iou_threshold", r.config.iou_threshold},
                 {"confidence_threshold", r.config.confidence_threshold},
                 {"ap_method", r.config.ap_method == ApMethod::kAllPoint ? "all-point" : "11-point"}};
  nlohmann::ordered_json det, rec;
  for (ClassId c : kAllClasses) {
    det[std::string(class_name(c))] = detail::detection_block_json(r.detection[c]);
    rec[std::string(class_name(c))] = detail::recognition_block_json(r.recognition[c]);
  }
  det["combined"] = detail::detection_block_json(r.detection_combined);
  rec["combined"] = detail::recognition_block_json(r.recognition_combined);
  j["detection"] = det;
  j["recognition"] = rec;
  return j;
}

// Per-object table: per-class TP/FP/AP, then combined TP/FP/FN/P/R/F1 in
// integer percent.
inline std::string render_detection_table(const EvalReport& r) {
  using detail::pad;
  std::string out;
  out += pad("", 12) + pad("Fire", 8) + pad("", 16) + pad("Smoke", 8) + pad("", 16) +
         "  Fire + Smoke\n";
  out += pad("", 12);
  for (int i = 0; i < 2; ++i) out += pad("TP", 6) + pad("FP", 6) + pad("AP", 8) + pad("", 4);
  out += pad("TP", 6) + pad("FP", 6) + pad("FN", 6) + pad("Precision", 11) + pad("Recall", 8) +
         pad("F1", 6) + "\n";
  std::string name = r.dataset.empty() ? "run" : r.dataset;
  if (name.size() > 11) name = name.substr(0, 11);
  out += name + std::string(12 - name.size(), ' ');
  for (ClassId c : kAllClasses) {
    const auto& b = r.detection[c];
    out += pad(std::to_string(b.counts.tp), 6) + pad(std::to_string(b.counts.fp), 6) +
           pad(detail::ap_percent(b.metrics.ap), 8) + pad("", 4);
  }
  const auto& cb = r.detection_combined;
  auto pct = [](const Ratio& x) { return x.defined() ? format_percent(x, 0) + "%" : format_percent(x, 0); };
  out += pad(std::to_string(cb.counts.tp), 6) + pad(std::to_string(cb.counts.fp), 6) +
         pad(std::to_string(cb.counts.fn), 6) + pad(pct(cb.metrics.precision), 11) +
         pad(pct(cb.metrics.recall), 8) + pad(pct(cb.metrics.f1), 6) + "\n";
  return out;
}

// Per-image table: per-class TP/TN/FP/FN/P/R/F1 with one decimal.
inline std::string render_recognition_table(const EvalReport& r) {
  using detail::pad;
  std::string out;
  out += pad("", 12) + "  Fire" + pad("", 46) + "  Smoke\n";
  out += pad("", 12);
  for (int i = 0; i < 2; ++i) {
    out += pad("TP", 6) + pad("TN", 6) + pad("FP", 6) + pad("FN", 6) + pad("Precision", 11) +
           pad("Recall", 8) + pad("F1", 7);
  }
  out += "\n";
  std::string name = r.dataset.empty() ? "run" : r.dataset;
  if (name.size() > 11) name = name.substr(0, 11);
  out += name + std::string(12 - name.size(), ' ');
  for (ClassId c : kAllClasses) {
    const auto& b = r.recognition[c];
    out += pad(std::to_string(b.counts.tp), 6) + pad(std::to_string(b.counts.tn), 6) +
           pad(std::to_string(b.counts.fp), 6) + pad(std::to_string(b.counts.fn), 6) +
           pad(format_percent(b.metrics.precision, 1), 11) +
           pad(format_percent(b.metrics.recall, 1), 8) + pad(format_percent(b.metrics.f1, 1), 7);
  }
  out += "\n";
  return out;
}

}  // namespace firewatch
