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

#ifndef GEOSYN_EDIT_FLOOD_H_
#define GEOSYN_EDIT_FLOOD_H_

#include <cstdint>
#include <vector>

#include "core/tensor.h"

namespace geosyn {

// What-if flooding: pixels at or below h_min, cleaned by a morphological
// erosion, become water in the landcover map and are leveled to h_min in
// the elevation model.
struct FloodSpec {
  double h_min = 0.0;
  int64_t erosion_radius = 1;  // Euclidean disk; radius 1 is the 3x3 cross
  int32_t water_class = 0;
};

struct FloodResult {
  Tensor<float> dem;        // [H,W]
  Tensor<int32_t> landcover;  // [H,W]
  Tensor<uint8_t> mask;     // [H,W], 1 on flooded pixels
};

// M = erode({p : dem[p] <= h_min}, disk(radius)); the erosion treats pixels
// outside the frame as not in the set, so a band of width radius along the
// border never floods. Outside M both outputs are bit-identical to the
// inputs, which makes the edit exactly idempotent.
FloodResult flood_edit(const Tensor<float>& dem,
                       const Tensor<int32_t>& landcover,
                       const FloodSpec& spec);

// One flood_edit per level, always ascending; unsorted input levels are
// sorted first with a note on stderr. Monotone levels yield nested masks.
std::vector<FloodResult> sweep(const Tensor<float>& dem,
                               const Tensor<int32_t>& landcover,
                               std::vector<double> levels,
                               const FloodSpec& spec);

}  // namespace geosyn

#endif  // GEOSYN_EDIT_FLOOD_H_
