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
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "firewatch/anchors.hpp"
#include "firewatch/config.hpp"
#include "firewatch/dataset.hpp"
#include "firewatch/detect.hpp"
#include "firewatch/eval.hpp"
#include "firewatch/replay.hpp"

// `firewatch` command line: augment, anchors, eval, replay, split.
// Data goes to `out`, diagnostics to `err`. Exit status 0 means success.

namespace firewatch::cli {

enum class OutputFormat { kTable, kStructured };

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> iou_thresh;
  std::optional<double> conf_thresh;
  std::optional<int> window;
  bool strict_repro = false;
  std::string format = "table";
};

// defaults < config file < flags
inline GlobalConfig resolve_config(const GlobalFlags& flags) {
  GlobalConfig cfg;
  if (!flags.config_path.empty()) cfg = load_config(flags.config_path, cfg);
  if (flags.seed) cfg.seed = flags.seed;
  if (flags.iou_thresh) cfg.eval.iou_threshold = *flags.iou_thresh;
  if (flags.conf_thresh) {
    cfg.eval.confidence_threshold = *flags.conf_thresh;
    cfg.detector.confidence_threshold = *flags.conf_thresh;
  }
  if (flags.window) cfg.temporal.window = *flags.window;
  cfg.validate();
  return cfg;
}

inline std::uint64_t require_seed(const GlobalFlags& flags, const GlobalConfig& cfg) {
  if (flags.strict_repro && !flags.seed) {
    throw ConfigError("--strict-repro requires an explicit --seed");
  }
  return cfg.seed.value_or(0);
}

// A directory of images + labels, or a manifest list file.
inline DatasetIndex load_dataset(const std::filesystem::path& p) {
  if (std::filesystem::is_directory(p)) return index_dataset(p);
  if (std::filesystem::is_regular_file(p)) return read_manifest(p);
  throw DatasetError("no such dataset: " + p.string());
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fire/smoke detection pipeline and evaluation toolkit", "firewatch"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file with per-module sections")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "Seed for randomized steps (split, anchors)");
  app.add_option("--iou-thresh", flags.iou_thresh, "IoU threshold for evaluation matching")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--conf-thresh", flags.conf_thresh, "Detection confidence threshold")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--window", flags.window, "Temporal averaging window (frames)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--strict-repro", flags.strict_repro, "Require an explicit --seed");
  app.add_option("--format", flags.format, "Output format")
      ->check(CLI::IsMember({"table", "structured"}));

  // augment
  auto* augment_cmd = app.add_subcommand("augment", "Write original + bright/contrast/blur variants");
  std::string aug_in, aug_out;
  std::optional<double> aug_bright, aug_contrast;
  std::optional<int> aug_blur;
  augment_cmd->add_option("in_dir", aug_in, "Input image directory")->required();
  augment_cmd->add_option("out_dir", aug_out, "Output directory")->required();
  augment_cmd->add_option("--brightness", aug_bright, "Brightness gain");
  augment_cmd->add_option("--contrast", aug_contrast, "Contrast gain about mid-level 128");
  augment_cmd->add_option("--blur", aug_blur, "Box blur kernel size (odd)");

  // anchors
  auto* anchors_cmd = app.add_subcommand("anchors", "Estimate anchor boxes with k-means");
  std::string anc_dataset;
  std::optional<int> anc_k, anc_canvas;
  bool anc_per_class = false;
  anchors_cmd->add_option("dataset", anc_dataset, "Dataset directory or manifest")->required();
  anchors_cmd->add_option("--k", anc_k, "Number of anchors");
  anchors_cmd->add_option("--canvas", anc_canvas, "Canvas size in pixels");
  anchors_cmd->add_flag("--per-class", anc_per_class, "Cluster each class separately");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate detections against ground truth");
  std::string ev_gt, ev_dets, ev_mode = "detect", ev_report = "eval_report.json";
  eval_cmd->add_option("gt_dir", ev_gt, "Ground-truth directory")->required();
  eval_cmd->add_option("detections", ev_dets, "Detection interchange file")->required();
  eval_cmd->add_option("--mode", ev_mode, "detect (per object) or recognize (per image)")
      ->check(CLI::IsMember({"detect", "recognize"}));
  eval_cmd->add_option("--report", ev_report, "Where to write the structured report");

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Replay a scenario through the alarm pipeline");
  std::string rp_scenario, rp_events, rp_frames;
  replay_cmd->add_option("scenario", rp_scenario, "Scenario file")->required();
  replay_cmd->add_option("--events", rp_events, "Write the event log here");
  replay_cmd->add_option("--frames", rp_frames, "Write the per-frame log here");

  // split
  auto* split_cmd = app.add_subcommand("split", "Stratified train/test split into manifests");
  std::string sp_dataset, sp_out = ".";
  std::optional<double> sp_fraction;
  split_cmd->add_option("dataset", sp_dataset, "Dataset directory or manifest")->required();
  split_cmd->add_option("--fraction", sp_fraction, "Train fraction, in (0,1)")
      ->check(CLI::Range(0.0, 1.0).description("") & CLI::Validator(
                  [](std::string& s) -> std::string {
                    const double v = std::stod(s);
                    return (v > 0.0 && v < 1.0) ? "" : "fraction must be in (0,1)";
                  },
                  "(0,1)"));
  split_cmd->add_option("--out", sp_out, "Directory for train.txt and test.txt");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    GlobalConfig cfg = resolve_config(flags);
    const bool structured = flags.format == "structured";

    if (augment_cmd->parsed()) {
      if (aug_bright) cfg.augment.brightness_gain = *aug_bright;
      if (aug_contrast) cfg.augment.contrast_gain = *aug_contrast;
      if (aug_blur) cfg.augment.blur_kernel = *aug_blur;
      cfg.validate();
      const DatasetIndex in = index_dataset(aug_in);
      if (in.images.empty()) throw DatasetError("no images in " + aug_in);
      const DatasetIndex res = augment(in, cfg.augment, aug_out);
      if (structured) {
        out << nlohmann::ordered_json{{"input", in.images.size()}, {"output", res.images.size()}}.dump()
            << "\n";
      } else {
        out << in.images.size() << " → " << res.images.size() << "\n";
      }
      return 0;
    }

    if (anchors_cmd->parsed()) {
      if (anc_k) cfg.anchors.k = *anc_k;
      if (anc_canvas) cfg.anchors.canvas_px = *anc_canvas;
      if (anc_per_class) cfg.anchors.per_class = true;
      cfg.validate();
      const std::uint64_t seed = require_seed(flags, cfg);
      const DatasetIndex ds = load_dataset(anc_dataset);
      KMeansOptions opts;
      opts.canvas_px = cfg.anchors.canvas_px;
      opts.max_iters = cfg.anchors.max_iters;
      if (!cfg.anchors.per_class) {
        const KMeansResult r = kmeans_anchors(ds, cfg.anchors.k, seed, opts);
        if (structured) {
          nlohmann::ordered_json j;
          j["anchors"] = r.anchors.to_darknet_string();
          j["cluster_sizes"] = r.cluster_sizes;
          j["mean_iou"] = r.mean_iou;
          j["iterations"] = r.iterations;
          out << j.dump() << "\n";
        } else {
          out << r.anchors.to_darknet_string() << "\n" << anchor_report(r);
        }
        return 0;
      }
      int status = 0;
      nlohmann::ordered_json j;
      for (const auto& [cls, entry] : per_class_anchors(ds, cfg.anchors.k, seed, opts)) {
        const std::string name(class_name(cls));
        if (!entry.result) {
          err << "error: " << name << ": " << entry.error << "\n";
          j[name] = {{"error", entry.error}};
          status = 1;
          continue;
        }
        if (structured) {
          j[name] = {{"anchors", entry.result->anchors.to_darknet_string()},
                     {"mean_iou", entry.result->mean_iou}};
        } else {
          out << name << ": " << entry.result->anchors.to_darknet_string() << "\n"
              << anchor_report(*entry.result);
        }
      }
      if (structured) out << j.dump() << "\n";
      return status;
    }

    if (eval_cmd->parsed()) {
      const GroundTruthSet gt = GroundTruthSet::from_index(index_dataset(ev_gt));
      const DetectionSet dets = detections_by_image(load_detection_file(ev_dets));
      const EvalReport report = evaluate_run(dets, gt, cfg.eval);
      const std::string doc = to_json(report).dump(2) + "\n";
      write_text_file(ev_report, doc);
      if (structured) {
        out << doc;
      } else {
        out << (ev_mode == "detect" ? render_detection_table(report)
                                    : render_recognition_table(report));
      }
      return 0;
    }

    if (replay_cmd->parsed()) {
      const Scenario sc = load_scenario(rp_scenario, cfg);
      const ReplayResult r = replay(sc);
      if (!rp_events.empty()) write_text_file(rp_events, join_lines(r.event_log));
      if (!rp_frames.empty()) write_text_file(rp_frames, join_lines(r.frame_log));
      if (structured) {
        nlohmann::ordered_json j = timeline_json(r.timeline);
        j["scenario"] = sc.name;
        j["frames"] = r.frames;
        j["retention_high_water_mark"] = r.retention.high_water_mark;
        out << j.dump() << "\n";
      } else {
        out << "scenario: " << sc.name << "\n" << render_timeline(r.timeline);
      }
      return 0;
    }

    if (split_cmd->parsed()) {
      if (sp_fraction) cfg.split.train_fraction = *sp_fraction;
      cfg.split.seed = require_seed(flags, cfg);
      cfg.validate();
      const DatasetIndex ds = load_dataset(sp_dataset);
      const SplitResult s = split(ds, cfg.split);
      std::filesystem::create_directories(sp_out);
      write_manifest(s.train, std::filesystem::path(sp_out) / "train.txt");
      write_manifest(s.test, std::filesystem::path(sp_out) / "test.txt");
      if (structured) {
        out << nlohmann::ordered_json{{"train", s.train.images.size()}, {"test", s.test.images.size()}}
                   .dump()
            << "\n";
      } else {
        out << "train: " << s.train.images.size() << "\ntest: " << s.test.images.size() << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace firewatch::cli
