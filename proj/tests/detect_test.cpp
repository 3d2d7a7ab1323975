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
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "firewatch/detect.hpp"
#include "firewatch/retention.hpp"

namespace firewatch {
namespace {

FrameDetections frame(std::string stream, std::uint64_t index, double t,
                      std::vector<Detection> dets = {}) {
  return {std::move(stream), index, t, std::move(dets)};
}

TEST(PostprocessTest, ThresholdThenNms) {
  const BBox a = BBox::from_corners(0.0, 0.0, 0.5, 0.5);
  const BBox b = BBox::from_corners(0.0, 0.0, 0.5, 0.48);
  const BBox c = BBox::from_corners(0.6, 0.6, 0.9, 0.9);
  const auto out = postprocess(frame("cam", 0, 0.0,
                                     {{a, ClassId::kFire, 0.9},
                                      {b, ClassId::kFire, 0.8},
                                      {c, ClassId::kSmoke, 0.25},
                                      {c, ClassId::kFire, 0.2}}),
                               DetectorConfig{});
  ASSERT_EQ(out.detections.size(), 2u);
  EXPECT_EQ(out.detections[0].confidence, 0.9);
  EXPECT_EQ(out.detections[1].cls, ClassId::kSmoke);  // conf == threshold is kept
  EXPECT_EQ(out.stream_id, "cam");
}

TEST(PostprocessTest, ConfigValidation) {
  EXPECT_THROW((DetectorConfig{1.5, 0.45, 576, 576}.validate()), std::invalid_argument);
  EXPECT_THROW((DetectorConfig{0.25, 1.0, 576, 576}.validate()), std::invalid_argument);
  EXPECT_THROW((DetectorConfig{0.25, 0.45, 0, 576}.validate()), std::invalid_argument);
}

TEST(InterchangeTest, RecordFormatIsFixed) {
  const Detection d{BBox(0.5, 0.25, 0.125, 0.2), ClassId::kSmoke, 0.85};
  EXPECT_EQ(format_record("cam1", 12, 6.5, &d),
            "{\"stream\": \"cam1\", \"frame\": 12, \"t\": 6.5, \"class\": \"smoke\", "
            "\"conf\": 0.85, \"box\": [0.5, 0.25, 0.125, 0.2]}");
  EXPECT_EQ(format_record("cam1", 13, 7.0, nullptr),
            "{\"stream\": \"cam1\", \"frame\": 13, \"t\": 7, \"class\": null}");
}

TEST(InterchangeTest, RoundTripIsByteIdentical) {
  std::vector<FrameDetections> frames = {
      frame("a", 0, 0.0),
      frame("a", 1, 0.5,
            {{BBox(0.5, 0.5, 0.2, 0.2), ClassId::kFire, 0.9},
             {BBox(0.1, 0.1, 0.1, 0.1), ClassId::kSmoke, 0.3}}),
      frame("b", 0, 0.25, {{BBox(0.3, 0.3, 0.1, 0.2), ClassId::kFire, 0.123456789}}),
      frame("a", 2, 1.0),
  };
  std::ostringstream first;
  write_detection_stream(first, frames);
  const auto parsed = load_detection_stream_text(first.str());
  ASSERT_EQ(parsed.size(), frames.size());
  EXPECT_EQ(parsed[1].detections.size(), 2u);
  EXPECT_EQ(parsed[2].detections[0].confidence, 0.123456789);
  std::ostringstream second;
  write_detection_stream(second, parsed);
  EXPECT_EQ(first.str(), second.str());
}

TEST(InterchangeTest, AcceptsFieldsInAnyOrderAndBlankLines) {
  const auto frames = load_detection_stream_text(
      "\n{\"class\": \"fire\", \"box\": [0.5, 0.5, 0.1, 0.1], \"conf\": 0.5, \"t\": 0, "
      "\"frame\": 0, \"stream\": \"s\"}\n\n");
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].detections[0].cls, ClassId::kFire);
}

std::size_t error_line(const std::string& text) {
  try {
    load_detection_stream_text(text);
  } catch (const StreamError& e) {
    return e.line();
  }
  return 0;
}

TEST(InterchangeTest, SchemaErrorsNameTheLine) {
  const std::string ok = "{\"stream\": \"s\", \"frame\": 0, \"t\": 0, \"class\": null}\n";
  EXPECT_EQ(error_line(ok + "not json\n"), 2u);
  EXPECT_EQ(error_line(ok + "[1,2]\n"), 2u);
  EXPECT_EQ(error_line("{\"stream\": \"s\", \"frame\": 0, \"t\": 0, \"class\": null, \"x\": 1}\n"), 1u);
  EXPECT_EQ(error_line("{\"frame\": 0, \"t\": 0, \"class\": null}\n"), 1u);
  EXPECT_EQ(error_line("{\"stream\": \"s\", \"frame\": -1, \"t\": 0, \"class\": null}\n"), 1u);
  EXPECT_EQ(error_line("{\"stream\": \"s\", \"frame\": 0.5, \"t\": 0, \"class\": null}\n"), 1u);
  EXPECT_EQ(error_line("{\"stream\": \"s\", \"frame\": 0, \"t\": -1, \"class\": null}\n"), 1u);
  EXPECT_EQ(error_line("{\"stream\": \"s\", \"frame\": 0, \"t\": 0, \"class\": \"steam\", "
                       "\"conf\": 0.5, \"box\": [0.5, 0.5, 0.1, 0.1]}\n"),
            1u);
  EXPECT_EQ(error_line("{\"stream\": \"s\", \"frame\": 0, \"t\": 0, \"class\": \"fire\", "
                       "\"conf\": 1.5, \"box\": [0.5, 0.5, 0.1, 0.1]}\n"),
            1u);
  EXPECT_EQ(error_line("{\"stream\": \"s\", \"frame\": 0, \"t\": 0, \"class\": \"fire\", "
                       "\"conf\": 0.5, \"box\": [0.5, 0.5, 0, 0.1]}\n"),
            1u);
  EXPECT_EQ(error_line("{\"stream\": \"s\", \"frame\": 0, \"t\": 0, \"class\": \"fire\", "
                       "\"conf\": 0.5, \"box\": [0.5, 0.5, 0.1]}\n"),
            1u);
  EXPECT_EQ(error_line("{\"stream\": \"s\", \"frame\": 0, \"t\": 0, \"class\": null, \"conf\": 0.5}\n"),
            1u);
}

TEST(InterchangeTest, OrderingViolations) {
  const std::string f0 = "{\"stream\": \"s\", \"frame\": 0, \"t\": 1, \"class\": null}\n";
  const std::string f1 = "{\"stream\": \"s\", \"frame\": 1, \"t\": 0.5, \"class\": null}\n";
  const std::string f1b = "{\"stream\": \"s\", \"frame\": 1, \"t\": 2, \"class\": null}\n";
  EXPECT_EQ(error_line(f0 + f1), 2u);            // time goes backwards
  EXPECT_EQ(error_line(f1b + f0), 2u);           // frame goes backwards
  EXPECT_EQ(error_line(f0 + f1b + f1b), 3u);     // repeated frame after a break is not allowed
  const std::string null0 = "{\"stream\": \"s\", \"frame\": 0, \"t\": 1, \"class\": null}\n";
  const std::string det0 =
      "{\"stream\": \"s\", \"frame\": 0, \"t\": 1, \"class\": \"fire\", \"conf\": 0.5, "
      "\"box\": [0.5, 0.5, 0.1, 0.1]}\n";
  EXPECT_EQ(error_line(null0 + det0), 2u);
  EXPECT_EQ(error_line(det0 + null0), 2u);
}

TEST(InterchangeTest, InterleavedStreamsKeepIndependentOrder) {
  const auto frames = load_detection_stream_text(
      "{\"stream\": \"a\", \"frame\": 0, \"t\": 0, \"class\": null}\n"
      "{\"stream\": \"b\", \"frame\": 5, \"t\": 10, \"class\": null}\n"
      "{\"stream\": \"a\", \"frame\": 1, \"t\": 1, \"class\": null}\n"
      "{\"stream\": \"b\", \"frame\": 6, \"t\": 11, \"class\": null}\n");
  ASSERT_EQ(frames.size(), 4u);
  EXPECT_EQ(frames[1].stream_id, "b");
  EXPECT_EQ(frames[1].frame_index, 5u);
}

TEST(RetentionTest, DisposeZeroesAndBlocksAccess) {
  RetentionMonitor monitor;
  RetainedFrame f = monitor.admit("cam", 3, std::vector<std::uint8_t>(32, 200));
  EXPECT_EQ(f.pixels().size(), 32u);
  EXPECT_EQ(f.pixels()[5], 200);
  const DisposalAck ack = f.dispose();
  EXPECT_EQ(ack.bytes_zeroed, 32u);
  EXPECT_EQ(ack.frame_index, 3u);
  EXPECT_FALSE(f.live());
  EXPECT_THROW(f.pixels(), RetentionViolation);
  EXPECT_EQ(f.dispose().bytes_zeroed, 0u);  // idempotent
  EXPECT_EQ(monitor.stats().disposed, 1u);
  EXPECT_EQ(monitor.stats().in_flight, 0u);
}

TEST(RetentionTest, StrictWindowRefusesSecondFrame) {
  RetentionMonitor monitor;
  RetainedFrame a = monitor.admit("cam", 0, std::vector<std::uint8_t>(4, 1));
  EXPECT_THROW(monitor.admit("cam", 1, std::vector<std::uint8_t>(4, 1)), RetentionViolation);
  RetainedFrame other = monitor.admit("other", 0, std::vector<std::uint8_t>(4, 1));
  a.dispose();
  EXPECT_NO_THROW(monitor.admit("cam", 1, std::vector<std::uint8_t>(4, 1)));
}

TEST(RetentionTest, LenientModeCountsViolations) {
  RetentionMonitor monitor(RetentionPolicy{1, false});
  RetainedFrame a = monitor.admit("cam", 0, {1});
  RetainedFrame b = monitor.admit("cam", 1, {1});
  EXPECT_EQ(monitor.stats().violations, 1u);
  EXPECT_EQ(monitor.stats().high_water_mark, 2u);
}

TEST(RetentionTest, DestructorAndMoveRelease) {
  RetentionMonitor monitor;
  {
    RetainedFrame a = monitor.admit("cam", 0, {1, 2, 3});
    RetainedFrame moved = std::move(a);
    EXPECT_FALSE(a.live());  // NOLINT(bugprone-use-after-move)
    EXPECT_TRUE(moved.live());
    EXPECT_EQ(monitor.stats().in_flight, 1u);
  }
  EXPECT_EQ(monitor.stats().in_flight, 0u);
  EXPECT_EQ(monitor.stats().disposed, 1u);
}

TEST(RetentionTest, GuardDisposesAfterStageAndOnThrow) {
  RetentionMonitor monitor;
  std::span<const std::uint8_t> seen;
  auto result = retention_guard(monitor.admit("cam", 7, std::vector<std::uint8_t>(8, 9)),
                                [&](std::span<const std::uint8_t> px) {
                                  seen = px;
                                  return frame("cam", 7, 3.5);
                                });
  EXPECT_EQ(result.ack.bytes_zeroed, 8u);
  EXPECT_EQ(result.detections.frame_index, 7u);
  EXPECT_EQ(monitor.stats().in_flight, 0u);

  EXPECT_THROW(retention_guard(monitor.admit("cam", 8, {1}),
                               [](std::span<const std::uint8_t>) -> FrameDetections {
                                 throw std::runtime_error("detector failed");
                               }),
               std::runtime_error);
  EXPECT_EQ(monitor.stats().in_flight, 0u);
  EXPECT_EQ(monitor.stats().high_water_mark, 1u);
}

TEST(RetentionTest, ConcurrentStreamsStayWithinWindow) {
  RetentionMonitor monitor;
  std::vector<std::thread> threads;
  for (int s = 0; s < 4; ++s) {
    threads.emplace_back([&monitor, s] {
      for (std::uint64_t i = 0; i < 200; ++i) {
        retention_guard(monitor.admit("cam" + std::to_string(s), i, std::vector<std::uint8_t>(16, 1)),
                        [&](std::span<const std::uint8_t>) { return FrameDetections{}; });
      }
    });
  }
  for (auto& t : threads) t.join();
  const auto st = monitor.stats();
  EXPECT_EQ(st.admitted, 800u);
  EXPECT_EQ(st.disposed, 800u);
  EXPECT_LE(st.high_water_mark, 4u);
  EXPECT_EQ(st.violations, 0u);
}

}  // namespace
}  // namespace firewatch
