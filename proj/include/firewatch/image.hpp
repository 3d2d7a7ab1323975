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
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace firewatch {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Interleaved 8-bit image, row-major.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const Image8&) const = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

namespace detail {

inline cv::Mat decode(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw ImageError("cannot decode image " + path.string());
  return m;
}

}  // namespace detail

inline ImageSize read_image_size(const std::filesystem::path& path) {
  const cv::Mat m = detail::decode(path);
  return {m.cols, m.rows};
}

// Decodes to 8-bit, 3 channels. Gray and BGRA inputs are expanded/dropped to
// 3 channels; any depth other than 8 bits is rejected.
inline Image8 read_image(const std::filesystem::path& path) {
  const cv::Mat m = detail::decode(path);
  if (m.depth() != CV_8U) {
    throw ImageError("not an 8-bit image: " + path.string());
  }
  const int src_channels = m.channels();
  if (src_channels != 1 && src_channels != 3 && src_channels != 4) {
    throw ImageError("unsupported channel count in " + path.string());
  }
  Image8 img(m.cols, m.rows, 3);
  for (int y = 0; y < m.rows; ++y) {
    const std::uint8_t* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = src_channels == 1 ? row[x] : row[x * src_channels + c];
      }
    }
  }
  return img;
}

inline void write_image(const std::filesystem::path& path, const Image8& img) {
  const int type = CV_MAKETYPE(CV_8U, img.channels);
  cv::Mat m(img.height, img.width, type, const_cast<std::uint8_t*>(img.data.data()));
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), m);
  } catch (const cv::Exception& e) {
    throw ImageError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw ImageError("cannot write " + path.string());
}

}  // namespace firewatch
