/* Copyright 2026 The geosyn Authors

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

#include "data/raster_io.h"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <stdexcept>

namespace geosyn {
namespace {

cv::Mat imread_checked(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty())
    throw std::runtime_error("raster: cannot read " + path);
  return m;
}

void imwrite_checked(const std::string& path, const cv::Mat& m) {
  if (!cv::imwrite(path, m))
    throw std::runtime_error("raster: cannot write " + path);
}

}  // namespace

Tensor<float> read_raster_f32(const std::string& path) {
  cv::Mat m = imread_checked(path);
  int ch = m.channels();
  if (ch != 1 && ch != 3)
    throw std::runtime_error("raster: " + path + " has " + std::to_string(ch) +
                             " channels, expected 1 or 3");
  cv::Mat f;
  m.convertTo(f, CV_MAKETYPE(CV_32F, ch));
  Tensor<float> out({ch, f.rows, f.cols});
  for (int y = 0; y < f.rows; ++y) {
    const float* row = f.ptr<float>(y);
    for (int x = 0; x < f.cols; ++x) {
      for (int c = 0; c < ch; ++c) {
        // OpenCV stores color images BGR; flip back to RGB.
        int src = ch == 3 ? 2 - c : c;
        out[(int64_t{c} * f.rows + y) * f.cols + x] = row[x * ch + src];
      }
    }
  }
  return out;
}

Tensor<int32_t> read_labels(const std::string& path) {
  cv::Mat m = imread_checked(path);
  if (m.channels() != 1)
    throw std::runtime_error("labels: " + path + " must be single channel");
  if (m.depth() != CV_8U && m.depth() != CV_16U && m.depth() != CV_32S)
    throw std::runtime_error("labels: " + path + " must be integer typed");
  cv::Mat i32;
  m.convertTo(i32, CV_32S);
  Tensor<int32_t> out({m.rows, m.cols});
  for (int y = 0; y < m.rows; ++y) {
    const int32_t* row = i32.ptr<int32_t>(y);
    for (int x = 0; x < m.cols; ++x) out[int64_t{y} * m.cols + x] = row[x];
  }
  return out;
}

void write_tiff_f32(const std::string& path, const Tensor<float>& chw) {
  if (chw.rank() != 3 || (chw.dim(0) != 1 && chw.dim(0) != 3))
    throw std::invalid_argument("write_tiff_f32: tensor must be [1|3,H,W], got " +
                                chw.shape_str());
  int ch = static_cast<int>(chw.dim(0));
  int h = static_cast<int>(chw.dim(1));
  int w = static_cast<int>(chw.dim(2));
  cv::Mat m(h, w, CV_MAKETYPE(CV_32F, ch));
  for (int y = 0; y < h; ++y) {
    float* row = m.ptr<float>(y);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        int dst = ch == 3 ? 2 - c : c;
        row[x * ch + dst] = chw[(int64_t{c} * h + y) * w + x];
      }
  }
  // The default TIFF codec settings are lossy for float samples; store raw.
  if (!cv::imwrite(path, m, {cv::IMWRITE_TIFF_COMPRESSION, 1}))
    throw std::runtime_error("raster: cannot write " + path);
}

void write_png_rgb8(const std::string& path, const Tensor<float>& chw) {
  if (chw.rank() != 3 || chw.dim(0) != 3)
    throw std::invalid_argument("write_png_rgb8: tensor must be [3,H,W], got " +
                                chw.shape_str());
  int h = static_cast<int>(chw.dim(1));
  int w = static_cast<int>(chw.dim(2));
  cv::Mat m(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        float v = chw[(int64_t{c} * h + y) * w + x];
        v = std::min(255.0f, std::max(0.0f, v));
        row[x * 3 + (2 - c)] = static_cast<uint8_t>(std::lround(v));
      }
  }
  imwrite_checked(path, m);
}

void write_labels_u8(const std::string& path, const Tensor<int32_t>& hw) {
  if (hw.rank() != 2)
    throw std::invalid_argument("write_labels_u8: tensor must be [H,W], got " +
                                hw.shape_str());
  int h = static_cast<int>(hw.dim(0));
  int w = static_cast<int>(hw.dim(1));
  cv::Mat m(h, w, CV_8UC1);
  for (int y = 0; y < h; ++y) {
    uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < w; ++x) {
      int32_t v = hw[int64_t{y} * w + x];
      if (v < 0 || v > 255)
        throw std::invalid_argument("write_labels_u8: class id " +
                                    std::to_string(v) + " does not fit in u8");
      row[x] = static_cast<uint8_t>(v);
    }
  }
  imwrite_checked(path, m);
}

}  // namespace geosyn
