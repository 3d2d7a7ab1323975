#!/usr/bin/env python3
# Copyright 2026 The Firewatch Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Regenerates the replay fixtures in this directory.

The outputs are committed; rerunning this script must reproduce them byte for
byte. Records use the same layout as the C++ writer.
"""

import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent


def num(v):
    v = round(v, 6)
    if v == int(v):
        return str(int(v))
    return repr(v)


def record(stream, frame, t, det=None):
    head = f'{{"stream": {json.dumps(stream)}, "frame": {frame}, "t": {num(t)}, "class": '
    if det is None:
        return head + "null}"
    cls, conf, box = det
    coords = ", ".join(num(c) for c in box)
    return head + f'"{cls}", "conf": {num(conf)}, "box": [{coords}]}}'


def write_stream(path, stream, frames, fps, detections_at):
    lines = []
    for f in frames:
        t = f / fps
        dets = detections_at(f)
        if not dets:
            lines.append(record(stream, f, t))
        for d in dets:
            lines.append(record(stream, f, t, d))
    path.write_text("\n".join(lines) + "\n")


def write_scenario(name, stream_file, reference, fps_note=None, extra=None):
    doc = {"name": name, "stream": stream_file, "reference": reference}
    doc["temporal"] = {"window": 10, "assoc_iou": 0.3, "miss_limit": 5}
    doc["alarm"] = {"evidence_threshold": 0.5, "hold_frames": 3}
    if extra:
        doc.update(extra)
    (HERE / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")


def scene1():
    # 1 frame per second. A fire appears in frame 258 at a steady 0.85 and
    # grows; a single-frame smoke false positive at frame 5 and low-confidence
    # clutter below the detector threshold never reach the alarm.
    def dets(f):
        out = []
        if f == 5:
            out.append(("smoke", 0.9, (0.7, 0.3, 0.2, 0.15)))
        if f % 7 == 3:
            out.append(("fire", 0.12, (0.2, 0.8, 0.05, 0.05)))
        if f >= 258:
            k = f - 258
            conf = 0.85 if f <= 263 else min(0.95, 0.85 + 0.01 * (f - 263))
            w = min(0.3, 0.1 + 0.004 * k)
            out.append(("fire", conf, (0.4 + 0.001 * k, 0.6, w, w)))
            # a duplicate box the detector's NMS removes
            out.append(("fire", 0.5, (0.4 + 0.001 * k, 0.6 + 0.002, w, w)))
        if f >= 270:
            out.append(("smoke", 0.6, (0.4, 0.3, 0.4, 0.3)))
        return out

    write_stream(HERE / "warehouse_scene1.jsonl", "warehouse_cam1", range(0, 301), 1.0, dets)
    write_scenario("warehouse_scene1", "warehouse_scene1.jsonl",
                   [{"label": "ceiling", "t": 275}])


def scene2():
    # 2 frames per second. A spotlight glare is flagged as fire for one frame
    # at t=2.0; the real fire starts at t=6.5 with confidence 0.9.
    def dets(f):
        out = []
        t = f / 2.0
        if t == 2.0:
            out.append(("fire", 0.88, (0.15, 0.2, 0.1, 0.1)))
        if t >= 6.5:
            k = f - 13
            out.append(("fire", 0.9, (0.55, 0.5 - 0.001 * k, 0.12, 0.12)))
        if t >= 20.0:
            out.append(("smoke", 0.7, (0.55, 0.3, 0.3, 0.2)))
        return out

    write_stream(HERE / "warehouse_scene2.jsonl", "warehouse_cam2", range(0, 121), 2.0, dets)
    write_scenario("warehouse_scene2", "warehouse_scene2.jsonl",
                   [{"label": "ceiling-left", "t": 32}, {"label": "ceiling-right", "t": 43}])


def quiet_scene():
    # 120 frames with nothing above the detector threshold.
    def dets(f):
        return [("smoke", 0.1, (0.5, 0.5, 0.3, 0.3))] if f % 10 == 0 else []

    write_stream(HERE / "quiet_scene.jsonl", "lobby_cam", range(0, 120), 1.0, dets)
    write_scenario("quiet_scene", "quiet_scene.jsonl", [{"label": "ceiling", "t": 60}])


if __name__ == "__main__":
    scene1()
    scene2()
    quiet_scene()
