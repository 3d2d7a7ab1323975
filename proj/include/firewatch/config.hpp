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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "firewatch/alarm.hpp"
#include "firewatch/anchors.hpp"
#include "firewatch/dataset.hpp"
#include "firewatch/detect.hpp"
#include "firewatch/eval.hpp"
#include "firewatch/retention.hpp"
#include "firewatch/temporal.hpp"

// Configuration document: one JSON object with a section per module, e.g.
//   {"detector": {"confidence_threshold": 0.3}, "temporal": {"window": 8}}
// Unknown sections and keys are rejected.

namespace firewatch {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AnchorOptions {
  int k = kDefaultAnchorCount;
  int canvas_px = kDefaultCanvasPx;
  int max_iters = 1000;
  bool per_class = false;
};

struct GlobalConfig {
  DetectorConfig detector;
  EvalConfig eval;
  TemporalConfig temporal;
  AlarmConfig alarm;
  AugmentationSpec augment;
  SplitSpec split;
  AnchorOptions anchors;
  RetentionPolicy retention;
  std::optional<std::uint64_t> seed;  // explicit seed, from file or flag

  void validate() const {
    try {
      detector.validate();
      eval.validate();
      temporal.validate();
      alarm.validate();
      augment.validate();
      split.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (anchors.k < 1) throw ConfigError("anchors.k must be >= 1");
    if (anchors.canvas_px < 1) throw ConfigError("anchors.canvas_px must be >= 1");
    if (anchors.max_iters < 1) throw ConfigError("anchors.max_iters must be >= 1");
    if (retention.window < 1) throw ConfigError("retention.window must be >= 1");
  }
};

namespace detail {

class SectionReader {
 public:
  SectionReader(const nlohmann::json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw ConfigError("section '" + section_ + "' must be an object");
  }

  template <typename Handler>
  void each(Handler&& handler) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!handler(it.key(), it.value())) {
        throw ConfigError("unknown key '" + section_ + "." + it.key() + "'");
      }
    }
  }

  double number(const std::string& key, const nlohmann::json& v) const {
    if (!v.is_number()) throw ConfigError(section_ + "." + key + " must be a number");
    return v.get<double>();
  }
  int integer(const std::string& key, const nlohmann::json& v) const {
    if (!v.is_number_integer()) throw ConfigError(section_ + "." + key + " must be an integer");
    return v.get<int>();
  }
  std::uint64_t unsigned_integer(const std::string& key, const nlohmann::json& v) const {
    if (!v.is_number_unsigned()) {
      throw ConfigError(section_ + "." + key + " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, const nlohmann::json& v) const {
    if (!v.is_boolean()) throw ConfigError(section_ + "." + key + " must be true or false");
    return v.get<bool>();
  }

 private:
  const nlohmann::json& j_;
  std::string section_;
};

}  // namespace detail

inline void apply_section(const nlohmann::json& j, DetectorConfig& c) {
  detail::SectionReader r(j, "detector");
  r.each([&](const std::string& k, const nlohmann::json& v) {
    if (k == "confidence_threshold") c.confidence_threshold = r.number(k, v);
    else if (k == "nms_iou") c.nms_iou = r.number(k, v);
    else if (k == "input_width") c.input_width = r.integer(k, v);
    else if (k == "input_height") c.input_height = r.integer(k, v);
    else return false;
    return true;
  });
}

inline void apply_section(const nlohmann::json& j, EvalConfig& c) {
  detail::SectionReader r(j, "eval");
  r.each([&](const std::string& k, const nlohmann::json& v) {
    if (k == "iou_threshold") c.iou_threshold = r.number(k, v);
    else if (k == "confidence_threshold") c.confidence_threshold = r.number(k, v);
    else if (k == "ap_method") {
      if (v == "all-point") c.ap_method = ApMethod::kAllPoint;
      else if (v == "11-point") c.ap_method = ApMethod::kElevenPoint;
      else throw ConfigError("eval.ap_method must be \"all-point\" or \"11-point\"");
    } else return false;
    return true;
  });
}

inline void apply_section(const nlohmann::json& j, TemporalConfig& c) {
  detail::SectionReader r(j, "temporal");
  r.each([&](const std::string& k, const nlohmann::json& v) {
    if (k == "window") c.window = r.integer(k, v);
    else if (k == "assoc_iou") c.assoc_iou = r.number(k, v);
    else if (k == "miss_limit") c.miss_limit = r.integer(k, v);
    else if (k == "decay") c.decay = r.number(k, v);
    else return false;
    return true;
  });
}

inline void apply_section(const nlohmann::json& j, AlarmConfig& c) {
  detail::SectionReader r(j, "alarm");
  r.each([&](const std::string& k, const nlohmann::json& v) {
    if (k == "evidence_threshold") c.evidence_threshold = r.number(k, v);
    else if (k == "hold_frames") c.hold_frames = r.integer(k, v);
    else if (k == "enable_fire") c.enabled[ClassId::kFire] = r.boolean(k, v);
    else if (k == "enable_smoke") c.enabled[ClassId::kSmoke] = r.boolean(k, v);
    else return false;
    return true;
  });
}

inline void apply_section(const nlohmann::json& j, AugmentationSpec& c) {
  detail::SectionReader r(j, "augment");
  r.each([&](const std::string& k, const nlohmann::json& v) {
    if (k == "brightness_gain") c.brightness_gain = r.number(k, v);
    else if (k == "contrast_gain") c.contrast_gain = r.number(k, v);
    else if (k == "blur_kernel") c.blur_kernel = r.integer(k, v);
    else return false;
    return true;
  });
}

inline void apply_section(const nlohmann::json& j, SplitSpec& c) {
  detail::SectionReader r(j, "split");
  r.each([&](const std::string& k, const nlohmann::json& v) {
    if (k == "train_fraction") c.train_fraction = r.number(k, v);
    else return false;
    return true;
  });
}

inline void apply_section(const nlohmann::json& j, AnchorOptions& c) {
  detail::SectionReader r(j, "anchors");
  r.each([&](const std::string& k, const nlohmann::json& v) {
    if (k == "k") c.k = r.integer(k, v);
    else if (k == "canvas_px") c.canvas_px = r.integer(k, v);
    else if (k == "max_iters") c.max_iters = r.integer(k, v);
    else if (k == "per_class") c.per_class = r.boolean(k, v);
    else return false;
    return true;
  });
}

inline void apply_section(const nlohmann::json& j, RetentionPolicy& c) {
  detail::SectionReader r(j, "retention");
  r.each([&](const std::string& k, const nlohmann::json& v) {
    if (k == "window") c.window = static_cast<std::size_t>(r.unsigned_integer(k, v));
    else if (k == "strict") c.strict = r.boolean(k, v);
    else return false;
    return true;
  });
}

inline void apply_document(const nlohmann::json& doc, GlobalConfig& cfg) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (key == "detector") apply_section(*it, cfg.detector);
    else if (key == "eval") apply_section(*it, cfg.eval);
    else if (key == "temporal") apply_section(*it, cfg.temporal);
    else if (key == "alarm") apply_section(*it, cfg.alarm);
    else if (key == "augment") apply_section(*it, cfg.augment);
    else if (key == "split") apply_section(*it, cfg.split);
    else if (key == "anchors") apply_section(*it, cfg.anchors);
    else if (key == "retention") apply_section(*it, cfg.retention);
    else if (key == "seed") {
      if (!it->is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
      cfg.seed = it->get<std::uint64_t>();
    } else {
      throw ConfigError("unknown config section '" + key + "'");
    }
  }
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DatasetError& e) {
    throw ConfigError(e.what());
  }
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline GlobalConfig load_config(const std::filesystem::path& path, GlobalConfig base = {}) {
  apply_document(parse_json_file(path), base);
  return base;
}

}  // namespace firewatch
