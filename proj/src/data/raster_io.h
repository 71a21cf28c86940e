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

#ifndef GEOSYN_DATA_RASTER_IO_H_
#define GEOSYN_DATA_RASTER_IO_H_

#include <string>

#include "core/tensor.h"

namespace geosyn {

// Continuous rasters land as [C,H,W] float32 with C of 1 or 3. Integer
// formats keep their raw sample values (so 8-bit imagery spans 0..255);
// three-channel images are returned in RGB order regardless of on-disk order.
Tensor<float> read_raster_f32(const std::string& path);

// Class maps as [H,W] int32 from single-channel 8- or 16-bit files.
Tensor<int32_t> read_labels(const std::string& path);

// Float32 TIFF, 1 or 3 channels, values written untouched.
void write_tiff_f32(const std::string& path, const Tensor<float>& chw);

// 8-bit PNG from a [3,H,W] tensor; values are clamped to 0..255 and rounded.
void write_png_rgb8(const std::string& path, const Tensor<float>& chw);

// 8-bit single-channel PNG or TIFF of class ids (must fit in 0..255).
void write_labels_u8(const std::string& path, const Tensor<int32_t>& hw);

}  // namespace geosyn

#endif  // GEOSYN_DATA_RASTER_IO_H_
