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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "firewatch/detail/numeric.hpp"
#include "firewatch/geometry.hpp"
#include "firewatch/image.hpp"

namespace firewatch {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LabelParseError : public DatasetError {
 public:
  LabelParseError(std::size_t line, const std::string& what)
      : DatasetError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Label {
  ClassId cls = ClassId::kFire;
  BBox box;

  bool operator==(const Label&) const = default;
};

// Parses a darknet label file: one `class_id cx cy w h` line per object.
// Blank lines are skipped; an empty file is a negative image.
inline std::vector<Label> parse_labels(std::string_view text,
                                       int class_count = static_cast<int>(kNumClasses)) {
  std::vector<Label> labels;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      if (j > i) fields.push_back(line.substr(i, j - i));
      i = j;
    }
    if (fields.empty()) continue;
    if (fields.size() != 5) {
      throw LabelParseError(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    }
    long long id = 0;
    if (!detail::parse_int(fields[0], id)) {
      throw LabelParseError(line_no, "bad class id '" + std::string(fields[0]) + "'");
    }
    if (id < 0 || id >= class_count || !class_from_index(id)) {
      throw LabelParseError(line_no, "unknown class " + std::to_string(id));
    }
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!detail::parse_plain_decimal(fields[k + 1], v[k])) {
        throw LabelParseError(line_no, "bad number '" + std::string(fields[k + 1]) + "'");
      }
      if (v[k] < 0.0 || v[k] > 1.0) {
        throw LabelParseError(line_no, "coordinate outside [0,1]: " + std::string(fields[k + 1]));
      }
    }
    if (v[2] <= 0.0 || v[3] <= 0.0) {
      throw LabelParseError(line_no, "non-positive box size");
    }
    labels.push_back({*class_from_index(id), BBox(v[0], v[1], v[2], v[3])});
  }
  return labels;
}

inline std::string serialize_labels(const std::vector<Label>& labels) {
  std::string out;
  for (const Label& l : labels) {
    out += std::to_string(index_of(l.cls));
    for (double v : {l.box.cx(), l.box.cy(), l.box.w(), l.box.h()}) {
      out += ' ';
      out += detail::shortest_fixed(v);
    }
    out += '\n';
  }
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DatasetError("write failed: " + path.string());
}

struct LabeledImage {
  std::string image_id;  // file stem
  std::filesystem::path path;
  int width_px = 0;
  int height_px = 0;
  std::vector<Label> labels;

  bool is_negative() const { return labels.empty(); }
  std::filesystem::path label_path() const {
    auto p = path;
    return p.replace_extension(".txt");
  }
};

struct DatasetCounts {
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t n_total = 0;

  bool operator==(const DatasetCounts&) const = default;
};

struct DatasetIndex {
  std::string name;
  std::vector<LabeledImage> images;

  DatasetCounts counts() const {
    DatasetCounts c;
    for (const auto& img : images) {
      (img.is_negative() ? c.n_negative : c.n_positive)++;
    }
    c.n_total = images.size();
    return c;
  }

  std::size_t box_count() const {
    std::size_t n = 0;
    for (const auto& img : images) n += img.labels.size();
    return n;
  }
};

// Concatenation of two indices, e.g. the union of two source datasets.
inline DatasetIndex merge(const DatasetIndex& a, const DatasetIndex& b, std::string name) {
  DatasetIndex out{std::move(name), a.images};
  out.images.insert(out.images.end(), b.images.begin(), b.images.end());
  return out;
}

inline bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp" ||
         ext == ".ppm" || ext == ".pgm" || ext == ".tif" || ext == ".tiff";
}

inline LabeledImage load_labeled_image(const std::filesystem::path& image_path) {
  LabeledImage img;
  img.path = image_path;
  img.image_id = image_path.stem().string();
  const auto label_path = img.label_path();
  if (!std::filesystem::exists(label_path)) {
    throw DatasetError("missing label file for " + image_path.string());
  }
  const ImageSize size = read_image_size(image_path);
  img.width_px = size.width;
  img.height_px = size.height;
  try {
    img.labels = parse_labels(read_text_file(label_path));
  } catch (const LabelParseError& e) {
    throw DatasetError(label_path.string() + ": " + e.what());
  }
  return img;
}

// Indexes every image in `root` (non-recursive, sorted by file name). Each
// image needs a sibling `.txt` label file; an empty one marks a negative.
inline DatasetIndex index_dataset(const std::filesystem::path& root, std::string name = {}) {
  if (!std::filesystem::is_directory(root)) {
    throw DatasetError("not a directory: " + root.string());
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  DatasetIndex index;
  index.name = name.empty() ? root.filename().string() : std::move(name);
  index.images.reserve(paths.size());
  for (const auto& p : paths) index.images.push_back(load_labeled_image(p));
  return index;
}

// Darknet-style list file: one image path per line.
inline void write_manifest(const DatasetIndex& index, const std::filesystem::path& path) {
  std::string text;
  for (const auto& img : index.images) text += img.path.string() + "\n";
  write_text_file(path, text);
}

inline DatasetIndex read_manifest(const std::filesystem::path& path) {
  DatasetIndex index;
  index.name = path.stem().string();
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    index.images.push_back(load_labeled_image(line));
  }
  return index;
}

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentationSpec {
  double brightness_gain = 1.5;
  double contrast_gain = 1.5;
  int blur_kernel = 5;

  void validate() const {
    if (!(brightness_gain > 0.0) || !(contrast_gain > 0.0)) {
      throw std::invalid_argument("augmentation gains must be > 0");
    }
    if (blur_kernel < 1 || blur_kernel % 2 == 0) {
      throw std::invalid_argument("blur kernel must be odd and >= 1");
    }
  }
};

inline constexpr std::uint8_t kContrastMidLevel = 128;

inline std::uint8_t clamp_round(double v) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

inline std::uint8_t brighten(std::uint8_t p, double gain) {
  return clamp_round(gain * p);
}

inline std::uint8_t contrast(std::uint8_t p, double gain) {
  return clamp_round(kContrastMidLevel + gain * (static_cast<double>(p) - kContrastMidLevel));
}

inline Image8 apply_brightness(const Image8& in, double gain) {
  Image8 out = in;
  for (auto& p : out.data) p = brighten(p, gain);
  return out;
}

inline Image8 apply_contrast(const Image8& in, double gain) {
  Image8 out = in;
  for (auto& p : out.data) p = contrast(p, gain);
  return out;
}

// k x k mean filter per channel with edge replication; the mean is rounded
// half up.
inline Image8 box_blur(const Image8& in, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("blur kernel must be odd");
  Image8 out = in;
  const int r = kernel / 2;
  const long n = static_cast<long>(kernel) * kernel;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      for (int c = 0; c < in.channels; ++c) {
        long sum = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = std::clamp(y + dy, 0, in.height - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = std::clamp(x + dx, 0, in.width - 1);
            sum += in.at(xx, yy, c);
          }
        }
        out.at(x, y, c) = static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
      }
    }
  }
  return out;
}

inline constexpr std::string_view kVariantSuffixes[] = {"_bright", "_contrast", "_blur"};

// Writes the original plus brightness, contrast and blur variants of every
// image into `out_dir` (4x the input). Label files are copied unchanged.
inline DatasetIndex augment(const DatasetIndex& index, const AugmentationSpec& spec,
                            const std::filesystem::path& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw DatasetError("cannot create " + out_dir.string());

  DatasetIndex out;
  out.name = index.name + "_augmented";
  out.images.reserve(index.images.size() * 4);
  for (const auto& img : index.images) {
    const Image8 pixels = read_image(img.path);
    const std::string label_text = read_text_file(img.label_path());
    const std::string ext = img.path.extension().string();

    auto emit = [&](const std::string& stem, const Image8* variant) {
      const fs::path dst = out_dir / (stem + ext);
      if (fs::exists(dst) && fs::equivalent(dst, img.path)) {
        throw DatasetError("output would overwrite input: " + dst.string());
      }
      if (variant) {
        write_image(dst, *variant);
      } else {
        fs::copy_file(img.path, dst, fs::copy_options::overwrite_existing, ec);
        if (ec) throw DatasetError("cannot copy to " + dst.string() + ": " + ec.message());
      }
      auto label_dst = dst;
      write_text_file(label_dst.replace_extension(".txt"), label_text);
      LabeledImage li = img;
      li.image_id = stem;
      li.path = dst;
      out.images.push_back(std::move(li));
    };

    emit(img.image_id, nullptr);
    const Image8 bright = apply_brightness(pixels, spec.brightness_gain);
    emit(img.image_id + std::string(kVariantSuffixes[0]), &bright);
    const Image8 contr = apply_contrast(pixels, spec.contrast_gain);
    emit(img.image_id + std::string(kVariantSuffixes[1]), &contr);
    const Image8 blurred = box_blur(pixels, spec.blur_kernel);
    emit(img.image_id + std::string(kVariantSuffixes[2]), &blurred);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Train/test split

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
      throw std::invalid_argument("train fraction must be in (0,1)");
    }
  }
};

struct SplitResult {
  DatasetIndex train;
  DatasetIndex test;
};

inline std::size_t floor_fraction(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

// Seeded, stratified split. |train| = floor(fraction * n); each stratum
// (positive, negative) gets floor(fraction * stratum size) and any remaining
// slots go to the stratum with the larger fractional remainder (positive on
// ties). Both halves keep the input order.
inline SplitResult split(const DatasetIndex& index, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = index.images.size();
  if (n < 2) throw DatasetError("split needs at least 2 images");

  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < n; ++i) strata[index.images[i].is_negative() ? 1 : 0].push_back(i);

  std::mt19937_64 rng(spec.seed);
  // Fisher-Yates on raw engine output so the permutation is identical across
  // standard library implementations.
  for (auto& s : strata) {
    for (std::size_t i = s.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(s[i - 1], s[j]);
    }
  }

  const std::size_t n_train = floor_fraction(spec.train_fraction, n);
  std::size_t take[2];
  double rem[2];
  for (int k = 0; k < 2; ++k) {
    const double exact = spec.train_fraction * static_cast<double>(strata[k].size());
    take[k] = floor_fraction(spec.train_fraction, strata[k].size());
    rem[k] = exact - static_cast<double>(take[k]);
  }
  std::size_t missing = n_train - take[0] - take[1];
  while (missing > 0) {
    int k = rem[0] >= rem[1] ? 0 : 1;
    if (take[k] == strata[k].size()) k = 1 - k;
    ++take[k];
    rem[k] = -1.0;
    --missing;
  }

  std::vector<bool> in_train(n, false);
  for (int k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < take[k]; ++i) in_train[strata[k][i]] = true;
  }
  SplitResult result;
  result.train.name = index.name + "_train";
  result.test.name = index.name + "_test";
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? result.train : result.test).images.push_back(index.images[i]);
  }
  return result;
}

}  // namespace firewatch
