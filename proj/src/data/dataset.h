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

#ifndef GEOSYN_DATA_DATASET_H_
#define GEOSYN_DATA_DATASET_H_

#include <string>
#include <vector>

#include "core/rng.h"
#include "core/tensor.h"
#include "data/normalize.h"

namespace geosyn {

// Two directory layouts are understood.
//
// "geonrw":  <root>/<utm_zone>/<tile>_rgb.jp2 (or _rgb.png), <tile>_dem.tif,
//            <tile>_seg.tif and optionally <tile>_sar.tif. Tile ids are
//            "<utm_zone>/<tile>". <root>/test_ids.txt lists test members,
//            one per line, either a whole zone directory or a full tile id.
//
// "dfc2020": <root>/s1/<id>.tif, <root>/s2/<id>.tif, <root>/lc/<id>.tif.
//            <root>/test_ids.txt lists test tile ids.
struct TileRecord {
  std::string id;
  std::string image;   // optical target: rgb or s2
  std::string raster;  // conditioning raster: dem or s1
  std::string seg;
  std::string sar;     // geonrw sar target; empty when the tile has none
};

struct Manifest {
  std::string layout;  // "geonrw" | "dfc2020"
  std::string root;
  int64_t num_classes = 10;
  std::vector<TileRecord> train;
  std::vector<TileRecord> test;

  double pixel_size_m() const { return layout == "dfc2020" ? 10.0 : 1.0; }

  // Walks the directory tree. require_sar keeps only tiles that carry a SAR
  // channel (the GeoNRW SAR subset). Tiles with missing required channels
  // abort the scan with every offending tile id in the message.
  static Manifest scan(const std::string& root, const std::string& layout,
                       bool require_sar);

  // Line-oriented text: a header, then one "<split> <id>" line per tile.
  // Loading re-derives file paths from the recorded root and layout.
  void save(const std::string& path) const;
  static Manifest load(const std::string& path);

  void validate() const;  // split disjointness, non-empty ids
};

// What a training batch is assembled from.
struct LoadOptions {
  std::string target = "rgb";  // "rgb" | "sar" | "s2"
  NormalizationSpec image_norm;
  NormalizationSpec raster_norm;
  bool raster_demean = false;  // subtract the tile mean from the raster
  int64_t num_classes = 10;

  nlohmann::json to_json() const;
  static LoadOptions from_json(const nlohmann::json& j);
};

struct LoadedTile {
  std::string id;
  Tensor<float> image;    // [C,H,W], normalized
  Tensor<float> raster;   // [1,H,W], normalized
  Tensor<int32_t> labels;  // [H,W]
};

// Reads, validates (aligned shapes, labels < C, finite rasters) and
// normalizes one tile.
LoadedTile load_tile(const Manifest& m, const TileRecord& rec,
                     const LoadOptions& opt);

// Random crop of all three channels to size x size; whole tile when the size
// matches. Throws if the tile is smaller than the crop.
LoadedTile random_crop(const LoadedTile& tile, int64_t size, Rng& rng);

// Stacked batch in network order.
struct Batch {
  std::vector<std::string> ids;
  Tensor<float> image;    // [N,C,H,W]
  Tensor<float> raster;   // [N,1,H,W]
  Tensor<int32_t> labels;  // [N,H,W]
};

Batch stack_tiles(const std::vector<LoadedTile>& tiles);

}  // namespace geosyn

#endif  // GEOSYN_DATA_DATASET_H_
