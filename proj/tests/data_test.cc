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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/ops_conv.h"
#include "core/rng.h"
#include "data/dataset.h"
#include "data/normalize.h"
#include "data/raster_io.h"
#include "doctest.h"

namespace fs = std::filesystem;

namespace geosyn {
namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("geosyn_data_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string str() const { return path.string(); }
};

TEST_CASE("normalization presets match the sensor constants") {
  auto terrasar = NormalizationSpec::preset("terrasar");
  CHECK(terrasar.normalize(10.0) == doctest::Approx(0.10).epsilon(1e-12));

  auto s1 = NormalizationSpec::preset("sentinel1");
  CHECK(s1.normalize(-7.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s1.denormalize(0.5) == doctest::Approx(-7.5).epsilon(1e-12));

  auto s2 = NormalizationSpec::preset("sentinel2");
  CHECK(s2.normalize(1750.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s2.normalize(4000.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s2.denormalize(0.0) == 0.0);

  auto rgb = NormalizationSpec::preset("geonrw_rgb");
  CHECK(rgb.normalize(255.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rgb.normalize(0.0) == 0.0);

  auto none = NormalizationSpec::preset("none");
  CHECK(none.normalize(123.75) == 123.75);
  CHECK(none.denormalize(-42.5) == -42.5);

  CHECK_THROWS_AS(NormalizationSpec::preset("spot"), std::invalid_argument);
}

TEST_CASE("normalization round trips, ordering and error contracts") {
  Rng rng(71);
  for (const char* name : {"terrasar", "sentinel1", "sentinel2"}) {
    auto spec = NormalizationSpec::preset(name);
    double span = spec.clip_hi - spec.clip_lo;
    for (int i = 0; i < 1000; ++i) {
      double v = spec.clip_lo + rng.uniform() * span;
      if (spec.to_db) v = std::pow(10.0, v / spec.db_factor);
      double rt = spec.denormalize(spec.normalize(v));
      double native = spec.to_db ? spec.db_factor * std::log10(rt) : rt;
      double orig = spec.to_db ? spec.db_factor * std::log10(v) : v;
      CHECK(std::abs(native - orig) <= 1e-6 * span);
    }
    // Monotone non-decreasing on a sorted probe.
    double prev = spec.normalize(spec.to_db ? 1e-8 : spec.clip_lo - span);
    for (int i = 0; i <= 50; ++i) {
      double v = spec.clip_lo - span / 2 + span * 2 * i / 50.0;
      if (spec.to_db) v = std::pow(10.0, v / spec.db_factor);
      double y = spec.normalize(v);
      CHECK(y >= prev);
      CHECK(y >= spec.target_lo);
      CHECK(y <= spec.target_hi);
      prev = y;
    }
  }

  auto terrasar = NormalizationSpec::preset("terrasar");
  CHECK_THROWS_AS(terrasar.normalize(0.0), std::invalid_argument);
  CHECK_THROWS_AS(terrasar.normalize(-3.0), std::invalid_argument);
  CHECK_THROWS_AS(terrasar.normalize(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(terrasar.denormalize(1.5), std::invalid_argument);
  CHECK_THROWS_AS(terrasar.denormalize(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(terrasar.denormalize(std::nan("")), std::invalid_argument);

  // Symmetric target range and JSON round trip.
  auto s2 = NormalizationSpec::preset("sentinel2");
  s2.target_lo = -1.0;
  s2.target_hi = 1.0;
  CHECK(s2.normalize(1750.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s2.denormalize(-1.0) == 0.0);
  auto back = NormalizationSpec::from_json(s2.to_json());
  CHECK(back.target_lo == -1.0);
  CHECK(back.clip_hi == 3500.0);
  CHECK(back.name == "sentinel2");

  NormalizationSpec bad;
  bad.clip_lo = 1.0;
  bad.clip_hi = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("one-hot planes sum to one and argmax inverts") {
  Rng rng(72);
  Tensor<int32_t> labels({2, 32, 32});
  for (int64_t i = 0; i < labels.numel(); ++i)
    labels[i] = static_cast<int32_t>(rng.uniform_int(10));
  Tensor<float> oh = one_hot<float>(labels, 10);
  int64_t plane = 32 * 32;
  for (int64_t n = 0; n < 2; ++n)
    for (int64_t i = 0; i < plane; ++i) {
      float sum = 0.0f;
      int best = -1;
      for (int64_t c = 0; c < 10; ++c) {
        float v = oh[(n * 10 + c) * plane + i];
        sum += v;
        if (v == 1.0f) best = static_cast<int>(c);
      }
      CHECK(sum == 1.0f);
      CHECK(best == labels[n * plane + i]);
    }

  Tensor<int32_t> bad({1, 2, 2});
  bad[3] = 10;
  CHECK_THROWS_WITH_AS(one_hot<float>(bad, 10),
                       doctest::Contains("pixel (1, 1)"),
                       std::invalid_argument);
}

TEST_CASE("raster files round trip through disk") {
  TempDir dir;
  Rng rng(73);

  Tensor<float> dem({1, 20, 24});
  rng.fill_uniform(dem, -10.0f, 900.0f);
  std::string dem_path = dir.str() + "/dem.tif";
  write_tiff_f32(dem_path, dem);
  Tensor<float> dem2 = read_raster_f32(dem_path);
  REQUIRE(dem2.same_shape(dem));
  for (int64_t i = 0; i < dem.numel(); ++i) CHECK(dem2[i] == dem[i]);

  Tensor<float> s2({3, 16, 16});
  rng.fill_uniform(s2, 0.0f, 3500.0f);
  std::string s2_path = dir.str() + "/s2.tif";
  write_tiff_f32(s2_path, s2);
  Tensor<float> s2b = read_raster_f32(s2_path);
  REQUIRE(s2b.same_shape(s2));
  for (int64_t i = 0; i < s2.numel(); ++i) CHECK(s2b[i] == s2[i]);

  Tensor<float> rgb({3, 12, 18});
  for (int64_t i = 0; i < rgb.numel(); ++i)
    rgb[i] = static_cast<float>(rng.uniform_int(256));
  std::string rgb_path = dir.str() + "/img.png";
  write_png_rgb8(rgb_path, rgb);
  Tensor<float> rgb2 = read_raster_f32(rgb_path);
  REQUIRE(rgb2.same_shape(rgb));
  for (int64_t i = 0; i < rgb.numel(); ++i) CHECK(rgb2[i] == rgb[i]);

  Tensor<int32_t> seg({10, 14});
  for (int64_t i = 0; i < seg.numel(); ++i)
    seg[i] = static_cast<int32_t>(rng.uniform_int(10));
  std::string seg_path = dir.str() + "/seg.tif";
  write_labels_u8(seg_path, seg);
  Tensor<int32_t> seg2 = read_labels(seg_path);
  REQUIRE(seg2.same_shape(seg));
  for (int64_t i = 0; i < seg.numel(); ++i) CHECK(seg2[i] == seg[i]);

  CHECK_THROWS_AS(read_raster_f32(dir.str() + "/absent.tif"),
                  std::runtime_error);
  Tensor<int32_t> wide({1, 1});
  wide[0] = 300;
  CHECK_THROWS_AS(write_labels_u8(dir.str() + "/bad.png", wide),
                  std::invalid_argument);
}

// Writes one complete GeoNRW-style tile. Values are deterministic in (seed).
void write_geonrw_tile(const fs::path& zone, const std::string& tile,
                       uint64_t seed, bool with_sar, int64_t hw = 32) {
  Rng rng(seed);
  fs::create_directories(zone);
  std::string base = (zone / tile).string();
  Tensor<float> rgb({3, hw, hw});
  for (int64_t i = 0; i < rgb.numel(); ++i)
    rgb[i] = static_cast<float>(rng.uniform_int(256));
  write_png_rgb8(base + "_rgb.png", rgb);
  Tensor<float> dem({1, hw, hw});
  rng.fill_uniform(dem, 50.0f, 320.0f);
  write_tiff_f32(base + "_dem.tif", dem);
  Tensor<int32_t> seg({hw, hw});
  for (int64_t i = 0; i < seg.numel(); ++i)
    seg[i] = static_cast<int32_t>(rng.uniform_int(10));
  write_labels_u8(base + "_seg.tif", seg);
  if (with_sar) {
    Tensor<float> sar({1, hw, hw});
    rng.fill_uniform(sar, 1.0f, 90.0f);
    write_tiff_f32(base + "_sar.tif", sar);
  }
}

TEST_CASE("geonrw scan, split rules, SAR subset, manifest round trip") {
  TempDir dir;
  write_geonrw_tile(dir.path / "32U", "aachen_1", 101, true);
  write_geonrw_tile(dir.path / "32U", "aachen_2", 102, false);
  write_geonrw_tile(dir.path / "33U", "bonn_1", 103, true);
  write_geonrw_tile(dir.path / "33U", "bonn_2", 104, true);
  write_geonrw_tile(dir.path / "33U", "bonn_3", 105, false);
  {
    std::ofstream os(dir.path / "test_ids.txt");
    os << "32U\n";            // whole zone
    os << "33U/bonn_2\n";     // single tile
  }

  Manifest m = Manifest::scan(dir.str(), "geonrw", false);
  CHECK(m.train.size() == 2);  // bonn_1, bonn_3
  CHECK(m.test.size() == 3);   // aachen_1, aachen_2, bonn_2
  CHECK(m.pixel_size_m() == 1.0);

  Manifest sar = Manifest::scan(dir.str(), "geonrw", true);
  CHECK(sar.train.size() == 1);  // bonn_1
  CHECK(sar.test.size() == 2);   // aachen_1, bonn_2

  std::string mpath = dir.str() + "/manifest.txt";
  m.save(mpath);
  Manifest m2 = Manifest::load(mpath);
  CHECK(m2.layout == "geonrw");
  CHECK(m2.train.size() == m.train.size());
  CHECK(m2.test.size() == m.test.size());
  REQUIRE(!m2.test.empty());
  CHECK(m2.test[0].id == m.test[0].id);
  CHECK(m2.test[0].raster == m.test[0].raster);

  // A tile with a missing channel aborts the scan and is named.
  write_geonrw_tile(dir.path / "33U", "bonn_4", 106, false);
  fs::remove(dir.path / "33U" / "bonn_4_seg.tif");
  CHECK_THROWS_WITH_AS(Manifest::scan(dir.str(), "geonrw", false),
                       doctest::Contains("33U/bonn_4"), std::runtime_error);

  CHECK_THROWS_AS(Manifest::scan(dir.str(), "nonsense", false),
                  std::invalid_argument);
  CHECK_THROWS_AS(Manifest::scan(dir.str() + "/absent", "geonrw", false),
                  std::runtime_error);
}

void write_dfc_tile(const fs::path& root, const std::string& id,
                    uint64_t seed, int64_t hw = 32) {
  Rng rng(seed);
  for (const char* sub : {"s1", "s2", "lc"}) fs::create_directories(root / sub);
  Tensor<float> s1({1, hw, hw});
  rng.fill_uniform(s1, -19.0f, 4.0f);
  write_tiff_f32((root / "s1" / (id + ".tif")).string(), s1);
  Tensor<float> s2({3, hw, hw});
  rng.fill_uniform(s2, 0.0f, 3400.0f);
  write_tiff_f32((root / "s2" / (id + ".tif")).string(), s2);
  Tensor<int32_t> lc({hw, hw});
  for (int64_t i = 0; i < lc.numel(); ++i)
    lc[i] = static_cast<int32_t>(rng.uniform_int(10));
  write_labels_u8((root / "lc" / (id + ".tif")).string(), lc);
}

TEST_CASE("dfc2020 scan and split") {
  TempDir dir;
  for (int i = 0; i < 5; ++i)
    write_dfc_tile(dir.path, "tile_" + std::to_string(i), 200 + i);
  {
    std::ofstream os(dir.path / "test_ids.txt");
    os << "tile_1\ntile_4\n";
  }
  Manifest m = Manifest::scan(dir.str(), "dfc2020", false);
  CHECK(m.train.size() == 3);
  CHECK(m.test.size() == 2);
  CHECK(m.pixel_size_m() == 10.0);

  fs::remove(dir.path / "s2" / "tile_2.tif");
  CHECK_THROWS_WITH_AS(Manifest::scan(dir.str(), "dfc2020", false),
                       doctest::Contains("tile_2"), std::runtime_error);
}

TEST_CASE("tile loading validates, normalizes and selects targets") {
  TempDir dir;
  write_geonrw_tile(dir.path / "32U", "t1", 301, true);
  {
    std::ofstream os(dir.path / "test_ids.txt");
  }
  Manifest m = Manifest::scan(dir.str(), "geonrw", false);
  REQUIRE(m.train.size() == 1);

  LoadOptions opt;
  opt.target = "rgb";
  opt.image_norm = NormalizationSpec::preset("geonrw_rgb");
  opt.raster_norm = NormalizationSpec::preset("none");
  LoadedTile tile = load_tile(m, m.train[0], opt);
  CHECK(tile.image.dim(0) == 3);
  CHECK(tile.raster.dim(0) == 1);
  for (int64_t i = 0; i < tile.image.numel(); ++i) {
    CHECK(tile.image[i] >= 0.0f);
    CHECK(tile.image[i] <= 1.0f);
  }
  // DEM flows through in raw meters under the "none" spec.
  float rmin = tile.raster[0], rmax = tile.raster[0];
  for (int64_t i = 0; i < tile.raster.numel(); ++i) {
    rmin = std::min(rmin, tile.raster[i]);
    rmax = std::max(rmax, tile.raster[i]);
  }
  CHECK(rmin >= 50.0f);
  CHECK(rmax <= 320.0f);

  LoadOptions demean = opt;
  demean.raster_demean = true;
  LoadedTile centered = load_tile(m, m.train[0], demean);
  double mean = 0.0;
  for (int64_t i = 0; i < centered.raster.numel(); ++i)
    mean += centered.raster[i];
  CHECK(std::abs(mean / centered.raster.numel()) < 1e-3);

  LoadOptions sar_opt = opt;
  sar_opt.target = "sar";
  sar_opt.image_norm = NormalizationSpec::preset("terrasar");
  LoadedTile sar_tile = load_tile(m, m.train[0], sar_opt);
  CHECK(sar_tile.image.dim(0) == 1);
  for (int64_t i = 0; i < sar_tile.image.numel(); ++i) {
    CHECK(sar_tile.image[i] >= 0.0f);
    CHECK(sar_tile.image[i] <= 1.0f);
  }

  // Label outside [0, C) is rejected with its position.
  Tensor<int32_t> seg({32, 32});
  seg.fill(3);
  seg[5 * 32 + 7] = 12;
  write_labels_u8((dir.path / "32U" / "t1_seg.tif").string(), seg);
  CHECK_THROWS_WITH_AS(load_tile(m, m.train[0], opt),
                       doctest::Contains("(5, 7)"), std::runtime_error);

  // Misaligned channel shapes are rejected.
  Tensor<int32_t> seg_ok({32, 32});
  seg_ok.fill(1);
  write_labels_u8((dir.path / "32U" / "t1_seg.tif").string(), seg_ok);
  Tensor<float> small_dem({1, 16, 16});
  small_dem.fill(100.0f);
  write_tiff_f32((dir.path / "32U" / "t1_dem.tif").string(), small_dem);
  CHECK_THROWS_WITH_AS(load_tile(m, m.train[0], opt),
                       doctest::Contains("misaligned"), std::runtime_error);
}

TEST_CASE("random crops and batch stacking") {
  Rng data_rng(74);
  LoadedTile tile;
  tile.id = "t";
  tile.image = Tensor<float>({3, 40, 48});
  tile.raster = Tensor<float>({1, 40, 48});
  tile.labels = Tensor<int32_t>({40, 48});
  data_rng.fill_uniform(tile.image, 0.0f, 1.0f);
  data_rng.fill_uniform(tile.raster, 0.0f, 1.0f);
  for (int64_t i = 0; i < tile.labels.numel(); ++i)
    tile.labels[i] = static_cast<int32_t>(i % 10);

  Rng a(7), b(7), c(8);
  LoadedTile ca = random_crop(tile, 16, a);
  LoadedTile cb = random_crop(tile, 16, b);
  CHECK(ca.image.same_shape(Tensor<float>({3, 16, 16})));
  for (int64_t i = 0; i < ca.image.numel(); ++i)
    CHECK(ca.image[i] == cb.image[i]);
  bool all_same = true;
  for (int rep = 0; rep < 8 && all_same; ++rep) {
    LoadedTile cc = random_crop(tile, 16, c);
    for (int64_t i = 0; i < ca.labels.numel(); ++i)
      if (cc.labels[i] != ca.labels[i]) {
        all_same = false;
        break;
      }
  }
  CHECK(!all_same);

  // Crop contents match the source window.
  Rng d(9);
  LoadedTile cd = random_crop(tile, 40, d);  // full height, random x
  CHECK(cd.labels.dim(0) == 40);
  CHECK_THROWS_AS(random_crop(tile, 64, d), std::runtime_error);

  std::vector<LoadedTile> tiles = {ca, cb};
  tiles[1].id = "u";
  Batch batch = stack_tiles(tiles);
  CHECK(batch.image.dim(0) == 2);
  CHECK(batch.ids[1] == "u");
  for (int64_t i = 0; i < ca.image.numel(); ++i)
    CHECK(batch.image[ca.image.numel() + i] == cb.image[i]);

  LoadedTile other;
  other.id = "v";
  other.image = Tensor<float>({3, 8, 8});
  other.raster = Tensor<float>({1, 8, 8});
  other.labels = Tensor<int32_t>({8, 8});
  std::vector<LoadedTile> bad = {ca, other};
  CHECK_THROWS_AS(stack_tiles(bad), std::invalid_argument);
  CHECK_THROWS_AS(stack_tiles({}), std::invalid_argument);
}

}  // namespace
}  // namespace geosyn
