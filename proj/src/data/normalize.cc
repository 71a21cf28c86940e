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

#include "data/normalize.h"

#include <cmath>
#include <stdexcept>

namespace geosyn {

void NormalizationSpec::validate() const {
  if (!(clip_hi > clip_lo))
    throw std::invalid_argument("NormalizationSpec: clip range [" +
                                std::to_string(clip_lo) + ", " +
                                std::to_string(clip_hi) + "] is empty");
  if (!(target_hi > target_lo))
    throw std::invalid_argument("NormalizationSpec: target range empty");
  if (to_db && db_factor != 10.0 && db_factor != 20.0)
    throw std::invalid_argument("NormalizationSpec: db_factor must be 10 or 20");
}

double NormalizationSpec::normalize(double x) const {
  if (std::isnan(x))
    throw std::invalid_argument("normalize: NaN sample in " + name);
  if (passthrough) return x;
  if (to_db) {
    if (x <= 0.0)
      throw std::invalid_argument("normalize: non-positive sample " +
                                  std::to_string(x) +
                                  " under dB transform in " + name);
    x = db_factor * std::log10(x);
  }
  if (x < clip_lo) x = clip_lo;
  if (x > clip_hi) x = clip_hi;
  double unit = (x - clip_lo) / (clip_hi - clip_lo);
  return target_lo + unit * (target_hi - target_lo);
}

double NormalizationSpec::denormalize(double y) const {
  if (passthrough) {
    if (std::isnan(y))
      throw std::invalid_argument("denormalize: NaN sample in " + name);
    return y;
  }
  if (std::isnan(y) || y < target_lo || y > target_hi)
    throw std::invalid_argument("denormalize: value " + std::to_string(y) +
                                " outside target range [" +
                                std::to_string(target_lo) + ", " +
                                std::to_string(target_hi) + "] in " + name);
  double unit = (y - target_lo) / (target_hi - target_lo);
  double x = clip_lo + unit * (clip_hi - clip_lo);
  if (to_db) x = std::pow(10.0, x / db_factor);
  return x;
}

void NormalizationSpec::normalize_inplace(Tensor<float>* t) const {
  for (int64_t i = 0; i < t->numel(); ++i)
    (*t)[i] = static_cast<float>(normalize(static_cast<double>((*t)[i])));
}

void NormalizationSpec::denormalize_inplace(Tensor<float>* t) const {
  for (int64_t i = 0; i < t->numel(); ++i)
    (*t)[i] = static_cast<float>(denormalize(static_cast<double>((*t)[i])));
}

nlohmann::json NormalizationSpec::to_json() const {
  return {{"name", name},           {"passthrough", passthrough},
          {"to_db", to_db},         {"db_factor", db_factor},
          {"clip_lo", clip_lo},     {"clip_hi", clip_hi},
          {"target_lo", target_lo}, {"target_hi", target_hi}};
}

NormalizationSpec NormalizationSpec::from_json(const nlohmann::json& j) {
  NormalizationSpec s;
  s.name = j.at("name").get<std::string>();
  s.passthrough = j.value("passthrough", false);
  s.to_db = j.at("to_db").get<bool>();
  s.db_factor = j.at("db_factor").get<double>();
  s.clip_lo = j.at("clip_lo").get<double>();
  s.clip_hi = j.at("clip_hi").get<double>();
  s.target_lo = j.at("target_lo").get<double>();
  s.target_hi = j.at("target_hi").get<double>();
  s.validate();
  return s;
}

NormalizationSpec NormalizationSpec::preset(const std::string& name) {
  NormalizationSpec s;
  s.name = name;
  if (name == "terrasar") {
    s.to_db = true;
    s.db_factor = 10.0;
    s.clip_lo = 0.0;
    s.clip_hi = 100.0;
  } else if (name == "sentinel1") {
    s.clip_lo = -20.0;
    s.clip_hi = 5.0;
  } else if (name == "sentinel2") {
    s.clip_lo = 0.0;
    s.clip_hi = 3500.0;
  } else if (name == "geonrw_rgb") {
    s.clip_lo = 0.0;
    s.clip_hi = 255.0;
  } else if (name == "identity") {
    s.clip_lo = 0.0;
    s.clip_hi = 1.0;
  } else if (name == "none") {
    s.passthrough = true;
  } else {
    throw std::invalid_argument("unknown normalization preset: " + name);
  }
  s.validate();
  return s;
}

}  // namespace geosyn
