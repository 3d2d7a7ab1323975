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

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "firewatch/detail/numeric.hpp"
#include "firewatch/geometry.hpp"

namespace firewatch {

// Detections of one frame. Carries no pixel data by construction.
struct FrameDetections {
  std::string stream_id;
  std::uint64_t frame_index = 0;
  double timestamp_s = 0.0;
  std::vector<Detection> detections;

  bool operator==(const FrameDetections&) const = default;
};

struct DetectorConfig {
  double confidence_threshold = 0.25;
  double nms_iou = 0.45;
  int input_width = 576;
  int input_height = 576;

  void validate() const {
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
      throw std::invalid_argument("confidence threshold must be in [0,1]");
    }
    if (!(nms_iou > 0.0 && nms_iou < 1.0)) {
      throw std::invalid_argument("NMS IoU threshold must be in (0,1)");
    }
    if (input_width <= 0 || input_height <= 0) {
      throw std::invalid_argument("input resolution must be positive");
    }
  }
};

// Confidence filter followed by class-aware NMS.
inline FrameDetections postprocess(const FrameDetections& raw, const DetectorConfig& cfg) {
  FrameDetections out{raw.stream_id, raw.frame_index, raw.timestamp_s, {}};
  std::vector<Detection> kept;
  kept.reserve(raw.detections.size());
  for (const auto& d : raw.detections) {
    if (d.confidence >= cfg.confidence_threshold) kept.push_back(d);
  }
  out.detections = nms(kept, cfg.nms_iou);
  return out;
}

// ---------------------------------------------------------------------------
// Detection interchange format: JSON lines, one detection per line,
//   {"stream": str, "frame": int, "t": float, "class": "fire"|"smoke",
//    "conf": float, "box": [cx, cy, w, h]}
// A frame without detections is a single record with "class": null and no
// conf/box. Consecutive records with the same stream and frame form one
// frame.

class StreamError : public std::runtime_error {
 public:
  StreamError(std::size_t line, const std::string& what)
      : std::runtime_error("record " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace detail

// One interchange line (without the trailing newline). Field order is fixed.
inline std::string format_record(const std::string& stream, std::uint64_t frame, double t,
                                 const Detection* det) {
  std::string out = "{\"stream\": " + detail::json_string(stream) +
                    ", \"frame\": " + std::to_string(frame) +
                    ", \"t\": " + detail::shortest_fixed(t) + ", \"class\": ";
  if (!det) return out + "null}";
  out += "\"" + std::string(class_name(det->cls)) + "\", \"conf\": " +
         detail::shortest_fixed(det->confidence) + ", \"box\": [" +
         detail::shortest_fixed(det->box.cx()) + ", " + detail::shortest_fixed(det->box.cy()) +
         ", " + detail::shortest_fixed(det->box.w()) + ", " +
         detail::shortest_fixed(det->box.h()) + "]}";
  return out;
}

inline void write_frame(std::ostream& out, const FrameDetections& f) {
  if (f.detections.empty()) {
    out << format_record(f.stream_id, f.frame_index, f.timestamp_s, nullptr) << '\n';
    return;
  }
  for (const auto& d : f.detections) {
    out << format_record(f.stream_id, f.frame_index, f.timestamp_s, &d) << '\n';
  }
}

inline void write_detection_stream(std::ostream& out, const std::vector<FrameDetections>& frames) {
  for (const auto& f : frames) write_frame(out, f);
}

// Incremental reader for the interchange format. Works on files and on live
// byte streams alike; a frame is emitted once a record of a different frame
// (or end of input) is seen.
class DetectionStreamReader {
 public:
  explicit DetectionStreamReader(std::istream& in) : in_(in) {}

  std::optional<FrameDetections> next() {
    while (true) {
      std::optional<Record> rec = read_record();
      if (!rec) {
        if (!pending_) return std::nullopt;
        std::optional<FrameDetections> done = std::move(pending_);
        pending_.reset();
        return done;
      }
      if (pending_ && pending_->stream_id == rec->stream && pending_->frame_index == rec->frame) {
        if (rec->t != pending_->timestamp_s) {
          throw StreamError(line_, "timestamp differs within frame " + std::to_string(rec->frame));
        }
        if (rec->det) {
          if (pending_has_null_) throw StreamError(line_, "detection after null record in frame");
          pending_->detections.push_back(*rec->det);
        } else {
          throw StreamError(line_, "null record in a frame that has detections");
        }
        continue;
      }
      check_order(*rec);
      std::optional<FrameDetections> done = std::move(pending_);
      pending_ = FrameDetections{rec->stream, rec->frame, rec->t, {}};
      pending_has_null_ = !rec->det;
      if (rec->det) pending_->detections.push_back(*rec->det);
      if (done) return done;
    }
  }

  std::size_t records_read() const { return line_; }

 private:
  struct Record {
    std::string stream;
    std::uint64_t frame = 0;
    double t = 0;
    std::optional<Detection> det;
  };

  struct StreamCursor {
    std::uint64_t frame = 0;
    double t = 0;
  };

  std::optional<Record> read_record() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      return parse(line);
    }
    return std::nullopt;
  }

  Record parse(const std::string& line) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw StreamError(line_, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw StreamError(line_, "record is not an object");
    for (const auto& [key, _] : j.items()) {
      if (key != "stream" && key != "frame" && key != "t" && key != "class" && key != "conf" &&
          key != "box") {
        throw StreamError(line_, "unknown field '" + key + "'");
      }
    }
    Record r;
    if (!j.contains("stream") || !j["stream"].is_string()) {
      throw StreamError(line_, "missing or non-string 'stream'");
    }
    r.stream = j["stream"].get<std::string>();
    // non-negative integers parse as unsigned
    if (!j.contains("frame") || !j["frame"].is_number_unsigned()) {
      throw StreamError(line_, "missing or invalid 'frame'");
    }
    r.frame = j["frame"].get<std::uint64_t>();
    if (!j.contains("t") || !j["t"].is_number() || !(j["t"].get<double>() >= 0.0) ||
        !std::isfinite(j["t"].get<double>())) {
      throw StreamError(line_, "missing or invalid 't'");
    }
    r.t = j["t"].get<double>();
    if (!j.contains("class")) throw StreamError(line_, "missing 'class'");
    const auto& cls = j["class"];
    if (cls.is_null()) {
      if (j.contains("conf") || j.contains("box")) {
        throw StreamError(line_, "null-class record must not carry conf or box");
      }
      return r;
    }
    if (!cls.is_string()) throw StreamError(line_, "'class' must be a string or null");
    const auto id = class_from_name(cls.get<std::string>());
    if (!id) throw StreamError(line_, "unknown class '" + cls.get<std::string>() + "'");
    if (!j.contains("conf") || !j["conf"].is_number()) throw StreamError(line_, "missing 'conf'");
    const double conf = j["conf"].get<double>();
    if (!(conf >= 0.0 && conf <= 1.0)) {
      throw StreamError(line_, "confidence outside [0,1]");
    }
    if (!j.contains("box") || !j["box"].is_array() || j["box"].size() != 4) {
      throw StreamError(line_, "'box' must be [cx, cy, w, h]");
    }
    double v[4];
    for (int i = 0; i < 4; ++i) {
      if (!j["box"][i].is_number()) throw StreamError(line_, "non-numeric box coordinate");
      v[i] = j["box"][i].get<double>();
    }
    if (!BBox::is_valid(v[0], v[1], v[2], v[3])) throw StreamError(line_, "invalid box");
    r.det = Detection{BBox(v[0], v[1], v[2], v[3]), *id, conf};
    return r;
  }

  void check_order(const Record& r) {
    auto it = cursors_.find(r.stream);
    if (it != cursors_.end()) {
      if (r.frame <= it->second.frame) {
        throw StreamError(line_, "frame index " + std::to_string(r.frame) +
                                     " not increasing in stream '" + r.stream + "'");
      }
      if (r.t < it->second.t) {
        throw StreamError(line_, "timestamp decreasing in stream '" + r.stream + "'");
      }
    }
    cursors_[r.stream] = {r.frame, r.t};
  }

  std::istream& in_;
  std::size_t line_ = 0;
  std::optional<FrameDetections> pending_;
  bool pending_has_null_ = false;
  std::map<std::string, StreamCursor> cursors_;
};

inline std::vector<FrameDetections> load_detection_stream(std::istream& in) {
  DetectionStreamReader reader(in);
  std::vector<FrameDetections> frames;
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  return frames;
}

inline std::vector<FrameDetections> load_detection_stream_text(const std::string& text) {
  std::istringstream in(text);
  return load_detection_stream(in);
}

}  // namespace firewatch
