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

#include "edit/flood.h"

#include <algorithm>
#include <iostream>
#include <stdexcept>

namespace geosyn {

namespace {

std::vector<std::pair<int64_t, int64_t>> disk_offsets(int64_t radius) {
  std::vector<std::pair<int64_t, int64_t>> offs;
  for (int64_t dy = -radius; dy <= radius; ++dy)
    for (int64_t dx = -radius; dx <= radius; ++dx)
      if (dy * dy + dx * dx <= radius * radius) offs.emplace_back(dy, dx);
  return offs;
}

}  // namespace

FloodResult flood_edit(const Tensor<float>& dem,
                       const Tensor<int32_t>& landcover,
                       const FloodSpec& spec) {
  if (dem.rank() != 2 || landcover.rank() != 2)
    throw std::invalid_argument("flood: dem and landcover must be [H,W]");
  if (dem.shape() != landcover.shape())
    throw std::invalid_argument("flood: dem " + dem.shape_str() +
                                " and landcover " + landcover.shape_str() +
                                " are misaligned");
  if (spec.erosion_radius < 1)
    throw std::invalid_argument("flood: erosion radius must be >= 1");
  if (spec.water_class < 0)
    throw std::invalid_argument("flood: water class must be >= 0");

  int64_t h = dem.dim(0), w = dem.dim(1);
  // Threshold and leveled value share one float representation; comparing
  // against the double while writing the rounded float would break exact
  // idempotence whenever the cast rounds upward.
  float level = static_cast<float>(spec.h_min);
  std::vector<uint8_t> below(static_cast<size_t>(h * w));
  for (int64_t i = 0; i < h * w; ++i) below[i] = dem[i] <= level ? 1 : 0;

  auto offs = disk_offsets(spec.erosion_radius);
  FloodResult r;
  r.dem = dem.clone();
  r.landcover = landcover.clone();
  r.mask = Tensor<uint8_t>({h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      bool keep = true;
      for (auto [dy, dx] : offs) {
        int64_t ny = y + dy, nx = x + dx;
        if (ny < 0 || ny >= h || nx < 0 || nx >= w || !below[ny * w + nx]) {
          keep = false;
          break;
        }
      }
      if (keep) {
        r.mask[y * w + x] = 1;
        r.dem[y * w + x] = level;
        r.landcover[y * w + x] = spec.water_class;
      }
    }
  return r;
}

std::vector<FloodResult> sweep(const Tensor<float>& dem,
                               const Tensor<int32_t>& landcover,
                               std::vector<double> levels,
                               const FloodSpec& spec) {
  if (levels.empty())
    throw std::invalid_argument("flood: sweep needs at least one level");
  if (!std::is_sorted(levels.begin(), levels.end())) {
    std::cerr << "note: flood levels were not ascending; sorting them\n";
    std::sort(levels.begin(), levels.end());
  }
  std::vector<FloodResult> out;
  out.reserve(levels.size());
  for (double level : levels) {
    FloodSpec s = spec;
    s.h_min = level;
    out.push_back(flood_edit(dem, landcover, s));
  }
  return out;
}

}  // namespace geosyn
