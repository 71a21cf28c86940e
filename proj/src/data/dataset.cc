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

#include "data/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "data/raster_io.h"

namespace fs = std::filesystem;

namespace geosyn {
namespace {

std::set<std::string> read_test_ids(const std::string& root) {
  std::set<std::string> ids;
  std::ifstream is(root + "/test_ids.txt");
  if (!is)
    throw std::runtime_error("dataset: missing " + root + "/test_ids.txt");
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty() && line[0] != '#') ids.insert(line);
  }
  return ids;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Manifest scan_geonrw(const std::string& root, bool require_sar) {
  Manifest m;
  m.layout = "geonrw";
  m.root = root;
  std::set<std::string> test_ids = read_test_ids(root);
  std::vector<std::string> missing;
  std::vector<std::pair<std::string, TileRecord>> found;  // zone, record

  std::vector<fs::path> zones;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) zones.push_back(e.path());
  std::sort(zones.begin(), zones.end());

  for (const auto& zone : zones) {
    std::string zone_name = zone.filename().string();
    std::set<std::string> tiles;
    for (const auto& e : fs::directory_iterator(zone)) {
      std::string f = e.path().filename().string();
      for (const char* suffix :
           {"_rgb.jp2", "_rgb.png", "_dem.tif", "_seg.tif", "_sar.tif"}) {
        if (ends_with(f, suffix))
          tiles.insert(f.substr(0, f.size() - std::strlen(suffix)));
      }
    }
    for (const auto& tile : tiles) {
      std::string base = zone.string() + "/" + tile;
      TileRecord rec;
      rec.id = zone_name + "/" + tile;
      if (fs::exists(base + "_rgb.jp2"))
        rec.image = base + "_rgb.jp2";
      else if (fs::exists(base + "_rgb.png"))
        rec.image = base + "_rgb.png";
      rec.raster = base + "_dem.tif";
      rec.seg = base + "_seg.tif";
      if (fs::exists(base + "_sar.tif")) rec.sar = base + "_sar.tif";
      bool ok = !rec.image.empty() && fs::exists(rec.raster) &&
                fs::exists(rec.seg);
      if (!ok) {
        missing.push_back(rec.id);
        continue;
      }
      if (require_sar && rec.sar.empty()) continue;
      found.emplace_back(zone_name, rec);
    }
  }
  if (!missing.empty()) {
    std::string msg = "dataset: tiles with missing channels:";
    for (const auto& id : missing) msg += " " + id;
    throw std::runtime_error(msg);
  }
  for (auto& [zone, rec] : found) {
    bool is_test = test_ids.count(zone) > 0 || test_ids.count(rec.id) > 0;
    (is_test ? m.test : m.train).push_back(std::move(rec));
  }
  m.validate();
  return m;
}

Manifest scan_dfc2020(const std::string& root, bool require_sar) {
  (void)require_sar;  // every DFC2020 tile carries Sentinel-1
  Manifest m;
  m.layout = "dfc2020";
  m.root = root;
  std::set<std::string> test_ids = read_test_ids(root);
  std::vector<std::string> missing;

  std::set<std::string> ids;
  for (const char* sub : {"s1", "s2", "lc"}) {
    fs::path dir = fs::path(root) / sub;
    if (!fs::is_directory(dir))
      throw std::runtime_error("dataset: missing directory " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
      std::string f = e.path().filename().string();
      if (ends_with(f, ".tif")) ids.insert(f.substr(0, f.size() - 4));
    }
  }
  for (const auto& id : ids) {
    TileRecord rec;
    rec.id = id;
    rec.raster = root + "/s1/" + id + ".tif";
    rec.image = root + "/s2/" + id + ".tif";
    rec.seg = root + "/lc/" + id + ".tif";
    if (!fs::exists(rec.raster) || !fs::exists(rec.image) ||
        !fs::exists(rec.seg)) {
      missing.push_back(id);
      continue;
    }
    (test_ids.count(id) ? m.test : m.train).push_back(std::move(rec));
  }
  if (!missing.empty()) {
    std::string msg = "dataset: tiles with missing channels:";
    for (const auto& id : missing) msg += " " + id;
    throw std::runtime_error(msg);
  }
  m.validate();
  return m;
}

TileRecord derive_record(const Manifest& m, const std::string& id) {
  TileRecord rec;
  rec.id = id;
  if (m.layout == "geonrw") {
    std::string base = m.root + "/" + id;
    if (fs::exists(base + "_rgb.jp2"))
      rec.image = base + "_rgb.jp2";
    else
      rec.image = base + "_rgb.png";
    rec.raster = base + "_dem.tif";
    rec.seg = base + "_seg.tif";
    if (fs::exists(base + "_sar.tif")) rec.sar = base + "_sar.tif";
  } else {
    rec.raster = m.root + "/s1/" + id + ".tif";
    rec.image = m.root + "/s2/" + id + ".tif";
    rec.seg = m.root + "/lc/" + id + ".tif";
  }
  return rec;
}

}  // namespace

Manifest Manifest::scan(const std::string& root, const std::string& layout,
                        bool require_sar) {
  if (!fs::is_directory(root))
    throw std::runtime_error("dataset: root is not a directory: " + root);
  if (layout == "geonrw") return scan_geonrw(root, require_sar);
  if (layout == "dfc2020") return scan_dfc2020(root, require_sar);
  throw std::invalid_argument("dataset: unknown layout: " + layout);
}

void Manifest::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("manifest: cannot write " + path);
  os << "geosyn-manifest v1\n";
  os << "layout " << layout << "\n";
  os << "root " << root << "\n";
  os << "classes " << num_classes << "\n";
  for (const auto& rec : train) os << "train " << rec.id << "\n";
  for (const auto& rec : test) os << "test " << rec.id << "\n";
  if (!os) throw std::runtime_error("manifest: write failed for " + path);
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("manifest: cannot read " + path);
  std::string line;
  if (!std::getline(is, line) || line != "geosyn-manifest v1")
    throw std::runtime_error("manifest: bad header in " + path);
  Manifest m;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "layout") {
      ss >> m.layout;
    } else if (key == "root") {
      std::string rest;
      std::getline(ss, rest);
      size_t start = rest.find_first_not_of(' ');
      m.root = start == std::string::npos ? "" : rest.substr(start);
    } else if (key == "classes") {
      ss >> m.num_classes;
    } else if (key == "train" || key == "test") {
      std::string id;
      ss >> id;
      (key == "train" ? m.train : m.test).push_back(derive_record(m, id));
    } else {
      throw std::runtime_error("manifest: unknown line '" + line + "' in " +
                               path);
    }
  }
  m.validate();
  return m;
}

void Manifest::validate() const {
  std::set<std::string> train_ids;
  for (const auto& rec : train) {
    if (rec.id.empty())
      throw std::runtime_error("manifest: empty tile id in train split");
    if (!train_ids.insert(rec.id).second)
      throw std::runtime_error("manifest: duplicate tile id " + rec.id);
  }
  for (const auto& rec : test) {
    if (rec.id.empty())
      throw std::runtime_error("manifest: empty tile id in test split");
    if (train_ids.count(rec.id))
      throw std::runtime_error("manifest: tile " + rec.id +
                               " appears in both splits");
  }
}

nlohmann::json LoadOptions::to_json() const {
  return {{"target", target},
          {"image_norm", image_norm.to_json()},
          {"raster_norm", raster_norm.to_json()},
          {"raster_demean", raster_demean},
          {"num_classes", num_classes}};
}

LoadOptions LoadOptions::from_json(const nlohmann::json& j) {
  LoadOptions d;
  d.target = j.value("target", d.target);
  if (j.contains("image_norm"))
    d.image_norm = NormalizationSpec::from_json(j.at("image_norm"));
  if (j.contains("raster_norm"))
    d.raster_norm = NormalizationSpec::from_json(j.at("raster_norm"));
  d.raster_demean = j.value("raster_demean", d.raster_demean);
  d.num_classes = j.value("num_classes", d.num_classes);
  return d;
}

LoadedTile load_tile(const Manifest& m, const TileRecord& rec,
                     const LoadOptions& opt) {
  LoadedTile out;
  out.id = rec.id;

  std::string image_path = rec.image;
  if (opt.target == "sar") {
    if (rec.sar.empty())
      throw std::runtime_error("dataset: tile " + rec.id +
                               " has no SAR channel");
    image_path = rec.sar;
  }
  out.image = read_raster_f32(image_path);
  Tensor<float> raster = read_raster_f32(rec.raster);
  if (raster.dim(0) != 1)
    throw std::runtime_error("dataset: raster for tile " + rec.id +
                             " must be single channel, got " +
                             raster.shape_str());
  out.raster = std::move(raster);
  out.labels = read_labels(rec.seg);

  int64_t h = out.labels.dim(0), w = out.labels.dim(1);
  if (out.image.dim(1) != h || out.image.dim(2) != w ||
      out.raster.dim(1) != h || out.raster.dim(2) != w)
    throw std::runtime_error(
        "dataset: misaligned channels for tile " + rec.id + ": image " +
        out.image.shape_str() + ", raster " + out.raster.shape_str() +
        ", labels " + out.labels.shape_str());

  for (int64_t i = 0; i < out.labels.numel(); ++i) {
    int32_t lab = out.labels[i];
    if (lab < 0 || lab >= opt.num_classes)
      throw std::runtime_error(
          "dataset: tile " + rec.id + " pixel (" + std::to_string(i / w) +
          ", " + std::to_string(i % w) + ") has label " + std::to_string(lab) +
          " outside [0, " + std::to_string(opt.num_classes) + ")");
  }
  for (int64_t i = 0; i < out.raster.numel(); ++i) {
    if (!std::isfinite(out.raster[i]))
      throw std::runtime_error("dataset: non-finite raster sample in tile " +
                               rec.id);
  }

  opt.image_norm.normalize_inplace(&out.image);
  opt.raster_norm.normalize_inplace(&out.raster);
  if (opt.raster_demean) {
    double mean = 0.0;
    for (int64_t i = 0; i < out.raster.numel(); ++i) mean += out.raster[i];
    mean /= static_cast<double>(out.raster.numel());
    for (int64_t i = 0; i < out.raster.numel(); ++i)
      out.raster[i] = static_cast<float>(out.raster[i] - mean);
  }
  return out;
}

LoadedTile random_crop(const LoadedTile& tile, int64_t size, Rng& rng) {
  int64_t h = tile.labels.dim(0), w = tile.labels.dim(1);
  if (h < size || w < size)
    throw std::runtime_error("dataset: tile " + tile.id + " is " +
                             std::to_string(h) + "x" + std::to_string(w) +
                             ", smaller than crop " + std::to_string(size));
  int64_t y0 = h == size ? 0 : rng.uniform_int(h - size + 1);
  int64_t x0 = w == size ? 0 : rng.uniform_int(w - size + 1);

  LoadedTile out;
  out.id = tile.id;
  auto crop_f = [&](const Tensor<float>& src) {
    int64_t c = src.dim(0);
    Tensor<float> dst({c, size, size});
    for (int64_t ci = 0; ci < c; ++ci)
      for (int64_t y = 0; y < size; ++y)
        std::copy(
            src.data() + (ci * h + y0 + y) * w + x0,
            src.data() + (ci * h + y0 + y) * w + x0 + size,
            dst.data() + (ci * size + y) * size);
    return dst;
  };
  out.image = crop_f(tile.image);
  out.raster = crop_f(tile.raster);
  Tensor<int32_t> lab({size, size});
  for (int64_t y = 0; y < size; ++y)
    std::copy(tile.labels.data() + (y0 + y) * w + x0,
              tile.labels.data() + (y0 + y) * w + x0 + size,
              lab.data() + y * size);
  out.labels = std::move(lab);
  return out;
}

Batch stack_tiles(const std::vector<LoadedTile>& tiles) {
  if (tiles.empty()) throw std::invalid_argument("stack_tiles: empty batch");
  int64_t n = static_cast<int64_t>(tiles.size());
  int64_t c = tiles[0].image.dim(0);
  int64_t h = tiles[0].image.dim(1), w = tiles[0].image.dim(2);
  Batch b;
  b.image = Tensor<float>({n, c, h, w});
  b.raster = Tensor<float>({n, 1, h, w});
  b.labels = Tensor<int32_t>({n, h, w});
  for (int64_t i = 0; i < n; ++i) {
    const LoadedTile& t = tiles[i];
    if (t.image.dim(0) != c || t.image.dim(1) != h || t.image.dim(2) != w)
      throw std::invalid_argument("stack_tiles: tile " + t.id +
                                  " shape differs within batch");
    b.ids.push_back(t.id);
    std::copy(t.image.data(), t.image.data() + c * h * w,
              b.image.data() + i * c * h * w);
    std::copy(t.raster.data(), t.raster.data() + h * w,
              b.raster.data() + i * h * w);
    std::copy(t.labels.data(), t.labels.data() + h * w,
              b.labels.data() + i * h * w);
  }
  return b;
}

}  // namespace geosyn
