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

#ifndef GEOSYN_DATA_NORMALIZE_H_
#define GEOSYN_DATA_NORMALIZE_H_

#include <string>

#include "core/tensor.h"
#include "json.hpp"

namespace geosyn {

// Sensor-value mapping into the network's working range: an optional decibel
// transform, a clip to the sensor's dynamic range, then an affine map onto
// [target_lo, target_hi]. All arithmetic is double precision; the tensor
// helpers merely cast at the boundary.
struct NormalizationSpec {
  std::string name = "custom";
  // Pass-through (the "none" preset) hands values to the network untouched;
  // digital elevation models are fed in raw meters by default.
  bool passthrough = false;
  bool to_db = false;
  double db_factor = 10.0;
  double clip_lo = 0.0;
  double clip_hi = 1.0;
  double target_lo = 0.0;
  double target_hi = 1.0;

  void validate() const;

  // Forward map for one sample. Throws on NaN and, when to_db is set, on
  // non-positive input.
  double normalize(double x) const;

  // Exact inverse on [target_lo, target_hi]; anything outside (or NaN) is a
  // caller bug and throws.
  double denormalize(double y) const;

  void normalize_inplace(Tensor<float>* t) const;
  void denormalize_inplace(Tensor<float>* t) const;

  nlohmann::json to_json() const;
  static NormalizationSpec from_json(const nlohmann::json& j);

  // Known sensors: "terrasar", "sentinel1", "sentinel2", "geonrw_rgb",
  // "identity", "none". Throws on anything else.
  static NormalizationSpec preset(const std::string& name);
};

}  // namespace geosyn

#endif  // GEOSYN_DATA_NORMALIZE_H_
