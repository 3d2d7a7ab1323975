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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "firewatch/alarm.hpp"
#include "firewatch/config.hpp"
#include "firewatch/detect.hpp"
#include "firewatch/retention.hpp"
#include "firewatch/temporal.hpp"

namespace firewatch {

// detect -> temporal -> alarm for one stream.
class StreamPipeline {
 public:
  struct FrameOutcome {
    FrameDetections detections;  // after postprocess
    TrackerUpdate tracker;
    AlarmState state;
    std::vector<AlarmEvent> events;
  };

  StreamPipeline(std::string stream_id, DetectorConfig detector, TemporalConfig temporal,
                 AlarmConfig alarm)
      : stream_id_(std::move(stream_id)), detector_(detector), tracker_(temporal), alarm_(alarm) {
    detector_.validate();
    alarm_.validate();
  }

  FrameOutcome process(const FrameDetections& raw) {
    FrameOutcome out;
    out.detections = postprocess(raw, detector_);
    out.tracker = tracker_.update(out.detections);
    StepResult r = step(state_, out.tracker.regions, raw.timestamp_s, alarm_);
    state_ = r.state;
    for (auto& e : r.events) e.stream = stream_id_;
    out.state = state_;
    out.events = std::move(r.events);
    return out;
  }

  // Live path: runs `detector` on the frame's pixels under the retention
  // guard, then continues with boxes only.
  template <typename Detector>
  FrameOutcome process(RetainedFrame frame, Detector&& detector) {
    GuardedResult g = retention_guard(std::move(frame), std::forward<Detector>(detector));
    return process(g.detections);
  }

  void reset_alarm(double t) { state_ = reset(state_, t).state; }

  const AlarmState& state() const { return state_; }
  const std::string& stream_id() const { return stream_id_; }

 private:
  std::string stream_id_;
  DetectorConfig detector_;
  RegionTracker tracker_;
  AlarmConfig alarm_;
  AlarmState state_;
};

struct Scenario {
  std::string name;
  std::filesystem::path stream_path;
  std::vector<ReferenceAlarm> reference;
  GlobalConfig config;
};

// Scenario document:
//   {"name": "...", "stream": "detections.jsonl",
//    "reference": [{"label": "ceiling", "t": 275}],
//    "detector": {...}, "temporal": {...}, "alarm": {...}, "retention": {...}}
// The stream path is resolved relative to the scenario file.
inline Scenario load_scenario(const std::filesystem::path& path, GlobalConfig base = {}) {
  const nlohmann::json doc = parse_json_file(path);
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  Scenario s;
  s.config = std::move(base);
  s.name = path.stem().string();
  nlohmann::json overrides = nlohmann::json::object();
  bool have_stream = false;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (key == "name") {
      if (!it->is_string()) throw ConfigError("scenario name must be a string");
      s.name = it->get<std::string>();
    } else if (key == "stream") {
      if (!it->is_string()) throw ConfigError("scenario stream must be a path string");
      s.stream_path = path.parent_path() / it->get<std::string>();
      have_stream = true;
    } else if (key == "reference") {
      if (!it->is_array()) throw ConfigError("scenario reference must be an array");
      for (const auto& r : *it) {
        if (!r.is_object() || r.size() != 2 || !r.contains("label") || !r.contains("t") ||
            !r["label"].is_string() || !r["t"].is_number()) {
          throw ConfigError("reference entries must be {\"label\": str, \"t\": seconds}");
        }
        s.reference.push_back({r["label"].get<std::string>(), r["t"].get<double>()});
      }
    } else if (key == "detector" || key == "temporal" || key == "alarm" || key == "retention") {
      overrides[key] = *it;
    } else {
      throw ConfigError("unknown scenario key '" + key + "'");
    }
  }
  if (!have_stream) throw ConfigError("scenario has no stream");
  apply_document(overrides, s.config);
  s.config.validate();
  return s;
}

struct ReplayResult {
  AlarmTimeline timeline;
  std::vector<AlarmEvent> events;
  std::vector<std::string> event_log;  // one formatted line per event
  std::vector<std::string> frame_log;  // per-frame state and region trace
  RetentionStats retention;
  std::size_t frames = 0;
};

// Deterministic end-to-end run over recorded detections. Each frame passes
// through the retention guard with a placeholder payload so the retention
// contract is exercised exactly as in a live run.
inline ReplayResult replay(const std::vector<FrameDetections>& frames, const GlobalConfig& cfg,
                           const std::vector<ReferenceAlarm>& reference) {
  cfg.validate();
  RetentionMonitor monitor(cfg.retention);
  std::map<std::string, StreamPipeline> pipelines;
  ReplayResult result;

  for (const auto& raw : frames) {
    auto it = pipelines.find(raw.stream_id);
    if (it == pipelines.end()) {
      it = pipelines
               .emplace(raw.stream_id,
                        StreamPipeline(raw.stream_id, cfg.detector, cfg.temporal, cfg.alarm))
               .first;
    }
    RetainedFrame payload = monitor.admit(raw.stream_id, raw.frame_index,
                                          std::vector<std::uint8_t>(16, std::uint8_t{0x7f}));
    auto out = it->second.process(std::move(payload),
                                  [&](std::span<const std::uint8_t>) { return raw; });
    ++result.frames;

    double peak = 0.0;
    for (const auto& r : out.tracker.regions) peak = std::max(peak, r.evidence);
    std::ostringstream line;
    line << "{\"t\": " << detail::fixed(raw.timestamp_s, 3)
         << ", \"stream\": " << nlohmann::json(raw.stream_id).dump()
         << ", \"frame\": " << raw.frame_index << ", \"detections\": " << out.detections.detections.size()
         << ", \"regions\": " << out.tracker.regions.size()
         << ", \"peak_evidence\": " << detail::fixed(peak, 6) << ", \"state\": \""
         << level_name(out.state.level) << "\"}";
    result.frame_log.push_back(line.str());
    std::ostringstream trace;
    write_region_trace(trace, out.detections, out.tracker.regions);
    std::string t = trace.str();
    std::size_t pos = 0;
    while (pos < t.size()) {
      const std::size_t end = t.find('\n', pos);
      result.frame_log.push_back(t.substr(pos, end - pos));
      pos = end + 1;
    }

    for (auto& e : out.events) {
      result.event_log.push_back(format_event(e));
      result.events.push_back(std::move(e));
    }
  }
  result.retention = monitor.stats();
  result.timeline = benchmark_latency(result.events, reference);
  return result;
}

inline std::vector<FrameDetections> load_detection_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read detection stream " + path.string());
  return load_detection_stream(in);
}

inline ReplayResult replay(const Scenario& scenario) {
  return replay(load_detection_file(scenario.stream_path), scenario.config, scenario.reference);
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace firewatch
