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
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "firewatch/detect.hpp"

// Frame retention: pixel buffers live only while the detection stage runs.
// Admission is bounded per stream, disposal zeroes and frees the buffer, and
// any later pixel access is a contract violation.

namespace firewatch {

class RetentionViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct RetentionPolicy {
  std::size_t window = 1;  // max in-flight frames per stream
  bool strict = true;
};

struct DisposalAck {
  std::string stream_id;
  std::uint64_t frame_index = 0;
  std::size_t bytes_zeroed = 0;
};

struct RetentionStats {
  std::size_t admitted = 0;
  std::size_t disposed = 0;
  std::size_t high_water_mark = 0;  // max frames retained at once, any stream
  std::size_t violations = 0;       // window overruns (non-strict mode only)
  std::size_t in_flight = 0;
};

namespace detail {

struct RetentionLedger {
  RetentionPolicy policy;
  std::mutex mu;
  RetentionStats stats;
  std::map<std::string, std::size_t> per_stream;

  void admit(const std::string& stream) {
    std::lock_guard lock(mu);
    std::size_t& n = per_stream[stream];
    if (n >= policy.window) {
      if (policy.strict) {
        throw RetentionViolation("stream '" + stream + "' already retains " + std::to_string(n) +
                                 " frame(s); window is " + std::to_string(policy.window));
      }
      ++stats.violations;
    }
    ++n;
    ++stats.admitted;
    ++stats.in_flight;
    stats.high_water_mark = std::max(stats.high_water_mark, stats.in_flight);
  }

  void release(const std::string& stream) {
    std::lock_guard lock(mu);
    --per_stream[stream];
    ++stats.disposed;
    --stats.in_flight;
  }
};

}  // namespace detail

// Move-only owner of one frame's pixels.
class RetainedFrame {
 public:
  RetainedFrame(RetainedFrame&& other) noexcept { *this = std::move(other); }
  RetainedFrame& operator=(RetainedFrame&& other) noexcept {
    if (this != &other) {
      dispose_quietly();
      ledger_ = std::move(other.ledger_);
      stream_id_ = std::move(other.stream_id_);
      frame_index_ = other.frame_index_;
      pixels_ = std::move(other.pixels_);
      live_ = std::exchange(other.live_, false);
    }
    return *this;
  }
  RetainedFrame(const RetainedFrame&) = delete;
  RetainedFrame& operator=(const RetainedFrame&) = delete;
  ~RetainedFrame() { dispose_quietly(); }

  std::span<const std::uint8_t> pixels() const {
    if (!live_) {
      throw RetentionViolation("pixel access after disposal (stream '" + stream_id_ +
                               "', frame " + std::to_string(frame_index_) + ")");
    }
    return pixels_;
  }

  bool live() const { return live_; }
  const std::string& stream_id() const { return stream_id_; }
  std::uint64_t frame_index() const { return frame_index_; }

  // Zeroes and frees the buffer. Idempotent.
  DisposalAck dispose() {
    DisposalAck ack{stream_id_, frame_index_, 0};
    if (!live_) return ack;
    std::fill(pixels_.begin(), pixels_.end(), std::uint8_t{0});
    ack.bytes_zeroed = pixels_.size();
    std::vector<std::uint8_t>().swap(pixels_);
    live_ = false;
    if (ledger_) ledger_->release(stream_id_);
    return ack;
  }

 private:
  friend class RetentionMonitor;

  RetainedFrame(std::shared_ptr<detail::RetentionLedger> ledger, std::string stream,
                std::uint64_t frame, std::vector<std::uint8_t> pixels)
      : ledger_(std::move(ledger)), stream_id_(std::move(stream)), frame_index_(frame),
        pixels_(std::move(pixels)), live_(true) {}

  void dispose_quietly() noexcept {
    try {
      dispose();
    } catch (...) {
    }
  }

  std::shared_ptr<detail::RetentionLedger> ledger_;
  std::string stream_id_;
  std::uint64_t frame_index_ = 0;
  std::vector<std::uint8_t> pixels_;
  bool live_ = false;
};

class RetentionMonitor {
 public:
  explicit RetentionMonitor(RetentionPolicy policy = {})
      : ledger_(std::make_shared<detail::RetentionLedger>()) {
    if (policy.window < 1) throw std::invalid_argument("retention window must be >= 1");
    ledger_->policy = policy;
  }

  // Throws RetentionViolation in strict mode when the stream's window is full.
  RetainedFrame admit(std::string stream_id, std::uint64_t frame_index,
                      std::vector<std::uint8_t> pixels) {
    ledger_->admit(stream_id);
    return RetainedFrame(ledger_, std::move(stream_id), frame_index, std::move(pixels));
  }

  RetentionStats stats() const {
    std::lock_guard lock(ledger_->mu);
    return ledger_->stats;
  }

  const RetentionPolicy& policy() const { return ledger_->policy; }

 private:
  std::shared_ptr<detail::RetentionLedger> ledger_;
};

struct GuardedResult {
  FrameDetections detections;
  DisposalAck ack;
};

// Runs `stage` on the frame's pixels and disposes the frame as soon as it
// returns (or throws). Only boxes leave this function.
template <typename Stage>
GuardedResult retention_guard(RetainedFrame frame, Stage&& stage) {
  FrameDetections dets;
  try {
    dets = std::forward<Stage>(stage)(frame.pixels());
  } catch (...) {
    frame.dispose();
    throw;
  }
  DisposalAck ack = frame.dispose();
  return {std::move(dets), std::move(ack)};
}

}  // namespace firewatch
