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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "firewatch/detail/numeric.hpp"
#include "firewatch/geometry.hpp"
#include "firewatch/temporal.hpp"

namespace firewatch {

class AlarmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AlarmConfig {
  double evidence_threshold = 0.5;
  int hold_frames = 3;
  PerClass<bool> enabled{{true, true}};

  void validate() const {
    if (!(evidence_threshold > 0.0 && evidence_threshold < 1.0)) {
      throw std::invalid_argument("evidence threshold must be in (0,1)");
    }
    if (hold_frames < 1) throw std::invalid_argument("hold frames must be >= 1");
  }
};

enum class AlarmLevel { kIdle, kSuspect, kAlarm };

inline std::string_view level_name(AlarmLevel s) {
  switch (s) {
    case AlarmLevel::kIdle: return "IDLE";
    case AlarmLevel::kSuspect: return "SUSPECT";
    case AlarmLevel::kAlarm: return "ALARM";
  }
  return "?";
}

struct AlarmState {
  AlarmLevel level = AlarmLevel::kIdle;
  double since = 0.0;  // time the current level was entered
  std::optional<ClassId> triggering_class;
  int qualifying_frames = 0;  // consecutive, while SUSPECT
  std::optional<double> last_t;
};

struct AlarmEvent {
  double t = 0.0;
  std::string stream;
  AlarmLevel from = AlarmLevel::kIdle;
  AlarmLevel to = AlarmLevel::kIdle;
  std::optional<ClassId> cls;
  double evidence = 0.0;
  // First qualifying frame of the episode (SUSPECT entry). For ALARM events
  // this is the reported detection time, not the escalation time.
  double detection_time = 0.0;
};

struct StepResult {
  AlarmState state;
  std::vector<AlarmEvent> events;  // 0..2 (IDLE->SUSPECT->ALARM on one frame when hold is 1)
};

// Strongest evidence among regions of enabled classes. Ties keep the first
// region in list order.
inline std::optional<std::pair<ClassId, double>> peak_evidence(
    std::span<const TrackedRegion> regions, const AlarmConfig& cfg) {
  std::optional<std::pair<ClassId, double>> best;
  for (const auto& r : regions) {
    if (!cfg.enabled[r.cls]) continue;
    if (!best || r.evidence > best->second) best = std::make_pair(r.cls, r.evidence);
  }
  return best;
}

// Advances the alarm machine by one frame.
//   IDLE    -> SUSPECT  when the peak evidence reaches the threshold
//   SUSPECT -> ALARM    after hold_frames consecutive qualifying frames
//                       (counting the SUSPECT entry frame)
//   SUSPECT -> IDLE     on the first non-qualifying frame
//   ALARM latches until reset().
inline StepResult step(const AlarmState& state, std::span<const TrackedRegion> regions, double t,
                       const AlarmConfig& cfg) {
  if (state.last_t && t < *state.last_t) {
    throw AlarmError("time went backwards: " + detail::fixed(t, 3) + " < " +
                     detail::fixed(*state.last_t, 3));
  }
  StepResult out{state, {}};
  out.state.last_t = t;
  if (state.level == AlarmLevel::kAlarm) return out;

  const auto peak = peak_evidence(regions, cfg);
  const bool qualifies = peak && peak->second >= cfg.evidence_threshold;
  const double evidence = peak ? peak->second : 0.0;
  AlarmState& s = out.state;

  if (!qualifies) {
    if (s.level == AlarmLevel::kSuspect) {
      out.events.push_back({t, {}, AlarmLevel::kSuspect, AlarmLevel::kIdle, s.triggering_class,
                            evidence, s.since});
      s.level = AlarmLevel::kIdle;
      s.since = t;
      s.triggering_class.reset();
      s.qualifying_frames = 0;
    }
    return out;
  }

  if (s.level == AlarmLevel::kIdle) {
    s.level = AlarmLevel::kSuspect;
    s.since = t;
    s.triggering_class = peak->first;
    s.qualifying_frames = 1;
    out.events.push_back({t, {}, AlarmLevel::kIdle, AlarmLevel::kSuspect, peak->first, evidence, t});
  } else {
    ++s.qualifying_frames;
  }
  if (s.qualifying_frames >= cfg.hold_frames) {
    const double detection_time = s.since;
    s.level = AlarmLevel::kAlarm;
    s.since = t;
    out.events.push_back({t, {}, AlarmLevel::kSuspect, AlarmLevel::kAlarm, s.triggering_class,
                          evidence, detection_time});
  }
  return out;
}

inline StepResult reset(const AlarmState& state, double t) {
  StepResult out{state, {}};
  if (state.level != AlarmLevel::kIdle) {
    out.events.push_back({t, {}, state.level, AlarmLevel::kIdle, state.triggering_class, 0.0, t});
  }
  out.state = AlarmState{};
  out.state.since = t;
  out.state.last_t = std::max(t, state.last_t.value_or(t));
  return out;
}

// Event log line: {"t", "stream", "transition", "class", "evidence"}.
inline std::string format_event(const AlarmEvent& e) {
  std::string out = "{\"t\": " + detail::fixed(e.t, 3) +
                    ", \"stream\": " + nlohmann::json(e.stream).dump() + ", \"transition\": \"" +
                    std::string(level_name(e.from)) + "->" + std::string(level_name(e.to)) +
                    "\", \"class\": ";
  out += e.cls ? "\"" + std::string(class_name(*e.cls)) + "\"" : std::string("null");
  out += ", \"evidence\": " + detail::fixed(e.evidence, 6);
  if (e.to == AlarmLevel::kAlarm) out += ", \"detection_time\": " + detail::fixed(e.detection_time, 3);
  out += "}";
  return out;
}

// ---------------------------------------------------------------------------
// Latency benchmark against reference (ceiling) detectors

struct ReferenceAlarm {
  std::string label;
  double t = 0.0;  // seconds from stream start
};

struct LatencyGain {
  std::string label;
  std::optional<double> gain_s;  // reference - camera; empty when the camera never alarmed
};

struct AlarmTimeline {
  std::optional<double> camera_alarm_s;
  std::vector<ReferenceAlarm> reference_alarms;
  std::vector<LatencyGain> gains;
};

// Camera detection time is the earliest ALARM event's detection time. Gains
// may be negative when the camera is slower.
inline AlarmTimeline benchmark_latency(std::span<const AlarmEvent> camera_events,
                                       const std::vector<ReferenceAlarm>& reference) {
  AlarmTimeline tl;
  for (const auto& e : camera_events) {
    if (e.to != AlarmLevel::kAlarm) continue;
    if (!tl.camera_alarm_s || e.detection_time < *tl.camera_alarm_s) {
      tl.camera_alarm_s = e.detection_time;
    }
  }
  tl.reference_alarms = reference;
  for (const auto& r : reference) {
    LatencyGain g{r.label, std::nullopt};
    if (tl.camera_alarm_s) g.gain_s = r.t - *tl.camera_alarm_s;
    tl.gains.push_back(std::move(g));
  }
  return tl;
}

inline std::string render_timeline(const AlarmTimeline& tl) {
  std::string out = "camera detection: ";
  out += tl.camera_alarm_s ? detail::fixed(*tl.camera_alarm_s, 3) + " s\n" : "not detected\n";
  for (std::size_t i = 0; i < tl.reference_alarms.size(); ++i) {
    const auto& r = tl.reference_alarms[i];
    const auto& g = tl.gains[i];
    out += "reference " + r.label + ": " + detail::fixed(r.t, 3) + " s  gain: ";
    out += g.gain_s ? detail::fixed(*g.gain_s, 3) + " s\n" : "not detected\n";
  }
  return out;
}

inline nlohmann::ordered_json timeline_json(const AlarmTimeline& tl) {
  nlohmann::ordered_json j;
  j["camera_detection_s"] = tl.camera_alarm_s ? nlohmann::ordered_json(*tl.camera_alarm_s)
                                              : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json refs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < tl.reference_alarms.size(); ++i) {
    nlohmann::ordered_json r;
    r["label"] = tl.reference_alarms[i].label;
    r["t"] = tl.reference_alarms[i].t;
    r["gain_s"] = tl.gains[i].gain_s ? nlohmann::ordered_json(*tl.gains[i].gain_s)
                                     : nlohmann::ordered_json(nullptr);
    refs.push_back(r);
  }
  j["references"] = refs;
  return j;
}

}  // namespace firewatch
