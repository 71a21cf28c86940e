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

#include "pipeline/pipeline.h"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "data/dataset.h"
#include "data/raster_io.h"
#include "edit/flood.h"
#include "eval/evaluate.h"
#include "seg/segmenter.h"
#include "train/trainer.h"

namespace fs = std::filesystem;

namespace geosyn {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int64_t parse_i64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw UsageError("config: key '" + key + "' expects an integer, got '" +
                     v + "'");
  }
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw UsageError("config: key '" + key + "' expects a number, got '" + v +
                     "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("config: key '" + key + "' expects a boolean (0/1), got '" +
                   v + "'");
}

std::vector<double> parse_f64_list(const std::string& key,
                                   const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw UsageError("config: key '" + key + "' has an empty list entry");
    out.push_back(parse_f64(key, item));
  }
  if (out.empty())
    throw UsageError("config: key '" + key + "' expects a comma-separated "
                     "list of numbers");
  return out;
}

// One experiment usually lives in one config file, so commands ignore keys
// that belong to their siblings (train skips seg_*, and so on). Keys outside
// the schema entirely are typos and rejected up front.
const std::set<std::string>& schema_keys() {
  static const std::set<std::string> keys = {
      // run placement
      "out_dir", "seed",
      // dataset location and loading
      "data_root", "layout", "manifest", "require_sar", "target",
      "image_norm", "raster_norm", "raster_demean", "num_classes",
      // adversarial training
      "variant", "out_channels", "in_raster_channels", "base_width",
      "body_blocks", "disc_scales", "disc_base_width", "lr_g", "lr_d",
      "adam_beta1", "adam_beta2", "lambda_fm", "epochs", "batch_size",
      "crop", "checkpoint_every", "log_every", "hflip", "workers", "resume",
      // synthesis
      "checkpoint", "split", "pad",
      // segmenter training
      "seg_levels", "seg_base_width", "seg_in_channels", "seg_lr",
      "seg_beta1", "seg_beta2", "seg_epochs", "seg_batch_size", "seg_crop",
      "seg_checkpoint_every", "seg_log_every",
      // evaluation
      "segmenter", "fake_root",
      // flood editing
      "dem", "landcover", "h_min", "levels", "radius", "water_class"};
  return keys;
}

// Pulls typed values out of the merged key map, recording everything it
// resolves (including applied defaults) so the run can be replayed from
// config_resolved.cfg alone.
class Resolver {
 public:
  explicit Resolver(const ConfigMap& in) : in_(in) {
    std::string bad;
    for (const auto& [k, v] : in_)
      if (!schema_keys().count(k)) bad += (bad.empty() ? "" : ", ") + k;
    if (!bad.empty())
      throw UsageError("config: unknown key(s): " + bad +
                       "; see the schema in the README");
  }

  bool has(const std::string& key) const {
    auto it = in_.find(key);
    return it != in_.end() && !it->second.empty();
  }

  std::string str(const std::string& key, const std::string& dflt) {
    std::string v = has(key) ? in_.at(key) : dflt;
    resolved_[key] = v;
    return v;
  }

  std::string required(const std::string& key, const std::string& flag,
                       const std::string& what) {
    if (!has(key))
      throw UsageError("missing required " + flag + " (config key '" + key +
                       "'): " + what);
    return str(key, "");
  }

  int64_t i64(const std::string& key, int64_t dflt) {
    if (!has(key)) {
      resolved_[key] = std::to_string(dflt);
      return dflt;
    }
    int64_t v = parse_i64(key, in_.at(key));
    resolved_[key] = std::to_string(v);
    return v;
  }

  double f64(const std::string& key, double dflt) {
    if (!has(key)) {
      std::ostringstream os;
      os.precision(17);
      os << dflt;
      resolved_[key] = os.str();
      return dflt;
    }
    double v = parse_f64(key, in_.at(key));
    resolved_[key] = in_.at(key);
    return v;
  }

  bool flag(const std::string& key, bool dflt) {
    if (!has(key)) {
      resolved_[key] = dflt ? "1" : "0";
      return dflt;
    }
    bool v = parse_bool(key, in_.at(key));
    resolved_[key] = v ? "1" : "0";
    return v;
  }

  // data_root falls back to $GEOSYN_DATA_ROOT below file and flag values.
  std::string data_root() {
    if (has("data_root")) return str("data_root", "");
    const char* env = std::getenv("GEOSYN_DATA_ROOT");
    if (env != nullptr && env[0] != '\0') {
      resolved_["data_root"] = env;
      return env;
    }
    throw UsageError(
        "missing required --data-root (config key 'data_root', environment "
        "GEOSYN_DATA_ROOT): dataset root directory");
  }

  void note(const std::string& key, const std::string& value) {
    resolved_[key] = value;
  }

  const ConfigMap& resolved() const { return resolved_; }

 private:
  const ConfigMap& in_;
  ConfigMap resolved_;
};

void write_resolved(const Resolver& r, const std::string& run_dir) {
  save_config_file(r.resolved(), run_dir + "/config_resolved.cfg");
}

// Loads from the manifest key when present, otherwise scans the tree.
Manifest resolve_manifest(Resolver& r, bool require_sar_default,
                          int64_t num_classes) {
  Manifest m;
  if (r.has("manifest")) {
    m = Manifest::load(r.str("manifest", ""));
    r.note("layout", m.layout);
    r.note("data_root", m.root);
    r.note("require_sar", "");
  } else {
    std::string root = r.data_root();
    std::string layout = r.str("layout", "geonrw");
    bool require_sar = r.flag("require_sar", require_sar_default);
    m = Manifest::scan(root, layout, require_sar);
    r.note("manifest", "");
  }
  m.num_classes = num_classes;
  return m;
}

LoadOptions build_load_options(Resolver& r) {
  LoadOptions opt;
  opt.target = r.str("target", "rgb");
  if (opt.target != "rgb" && opt.target != "sar" && opt.target != "s2")
    throw UsageError("config: target must be rgb, sar or s2, got '" +
                     opt.target + "'");
  try {
    opt.image_norm = NormalizationSpec::preset(
        r.str("image_norm", opt.target == "sar" ? "terrasar" : "geonrw_rgb"));
    opt.raster_norm = NormalizationSpec::preset(r.str("raster_norm", "none"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  opt.raster_demean = r.flag("raster_demean", false);
  opt.num_classes = r.i64("num_classes", 10);
  return opt;
}

std::string iso_stamp_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::string make_run_dir_impl(const std::string& out_dir,
                              const std::string& command, uint64_t seed) {
  fs::create_directories(out_dir);
  std::string base =
      out_dir + "/" + command + "-" + iso_stamp_utc() + "-s" +
      std::to_string(seed);
  std::string dir = base;
  for (int k = 2; fs::exists(dir); ++k) dir = base + "-" + std::to_string(k);
  fs::create_directories(dir);
  return dir;
}

int64_t count_mask(const Tensor<uint8_t>& m) {
  int64_t n = 0;
  for (int64_t i = 0; i < m.numel(); ++i) n += m[i] != 0;
  return n;
}

void copy_channel(const std::string& from, const std::string& to) {
  fs::copy_file(from, to, fs::copy_options::overwrite_existing);
}

// Mirrors the source layout under synth_root: every channel of the tile is
// copied verbatim except the synthesized target, which replaces it. The
// result is a dataset the scanner accepts, so synthesized tiles feed the
// evaluation path exactly like real ones.
void write_synth_tile(const Manifest& m, const TileRecord& rec,
                      const std::string& target, const Tensor<float>& out,
                      const std::string& synth_root) {
  if (m.layout == "geonrw") {
    std::string base = synth_root + "/" + rec.id;
    fs::create_directories(fs::path(base).parent_path());
    copy_channel(rec.raster, base + "_dem.tif");
    copy_channel(rec.seg, base + "_seg.tif");
    if (target == "sar") {
      copy_channel(rec.image,
                   base + "_rgb" + fs::path(rec.image).extension().string());
      write_tiff_f32(base + "_sar.tif", out);
    } else {
      if (!rec.sar.empty()) copy_channel(rec.sar, base + "_sar.tif");
      write_png_rgb8(base + "_rgb.png", out);
    }
  } else {
    for (const char* sub : {"s1", "s2", "lc"})
      fs::create_directories(synth_root + "/" + std::string(sub));
    copy_channel(rec.raster, synth_root + "/s1/" + rec.id + ".tif");
    copy_channel(rec.seg, synth_root + "/lc/" + rec.id + ".tif");
    write_tiff_f32(synth_root + "/s2/" + rec.id + ".tif", out);
  }
}

TrainConfig build_train_config(Resolver& r) {
  TrainConfig cfg;
  cfg.data = build_load_options(r);
  try {
    cfg.gen.variant = variant_from_string(r.str("variant", "fusion"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.gen.num_classes = cfg.data.num_classes;
  cfg.gen.out_channels = r.i64("out_channels", cfg.data.target == "sar" ? 1 : 3);
  cfg.gen.in_raster_channels = r.i64("in_raster_channels", 1);
  cfg.gen.base_width = r.i64("base_width", 64);
  cfg.gen.body_blocks = r.i64("body_blocks", 9);
  cfg.crop = r.i64("crop", 256);
  cfg.gen.train_size = cfg.crop;  // the generator trains on crops
  cfg.disc_scales = r.i64("disc_scales", 0);
  cfg.disc_base_width = r.i64("disc_base_width", 64);
  cfg.lr_g = r.f64("lr_g", 1e-4);
  cfg.lr_d = r.f64("lr_d", 4e-4);
  cfg.adam_beta1 = r.f64("adam_beta1", 0.0);
  cfg.adam_beta2 = r.f64("adam_beta2", 0.9);
  cfg.weights.lambda_fm = r.f64("lambda_fm", 10.0);
  cfg.epochs = r.i64("epochs", 200);
  cfg.batch_size = r.i64("batch_size", 32);
  cfg.seed = static_cast<uint64_t>(r.i64("seed", 1234));
  cfg.checkpoint_every = r.i64("checkpoint_every", 10);
  cfg.log_every = r.i64("log_every", 50);
  cfg.hflip = r.flag("hflip", false);
  cfg.workers = r.i64("workers", 1);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

SegConfig build_seg_config(Resolver& r) {
  SegConfig cfg;
  cfg.data = build_load_options(r);
  cfg.unet.num_classes = cfg.data.num_classes;
  cfg.unet.levels = r.i64("seg_levels", 5);
  cfg.unet.base_width = r.i64("seg_base_width", 64);
  int64_t in_ch = r.i64("seg_in_channels", 0);  // 0 derives from target
  cfg.unet.in_channels = in_ch > 0 ? in_ch : (cfg.data.target == "sar" ? 1 : 3);
  cfg.lr = r.f64("seg_lr", 2e-4);
  cfg.adam_beta1 = r.f64("seg_beta1", 0.9);
  cfg.adam_beta2 = r.f64("seg_beta2", 0.999);
  cfg.epochs = r.i64("seg_epochs", 100);
  cfg.batch_size = r.i64("seg_batch_size", 32);
  cfg.crop = r.i64("seg_crop", 256);
  cfg.seed = static_cast<uint64_t>(r.i64("seed", 1234));
  cfg.checkpoint_every = r.i64("seg_checkpoint_every", 10);
  cfg.log_every = r.i64("seg_log_every", 50);
  cfg.workers = r.i64("workers", 1);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

}  // namespace

ConfigMap load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("config: cannot read file " + path);
  ConfigMap m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw UsageError("config: " + path + ":" + std::to_string(lineno) +
                       ": expected key = value, got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty())
      throw UsageError("config: " + path + ":" + std::to_string(lineno) +
                       ": empty key");
    m[key] = value;
  }
  return m;
}

void save_config_file(const ConfigMap& m, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("config: cannot write " + path);
  os << "# resolved configuration; replaying this file reproduces the run\n";
  for (const auto& [k, v] : m) os << k << " = " << v << "\n";
  if (!os) throw std::runtime_error("config: write failed for " + path);
}

std::string make_run_dir(const ConfigMap& cfg, const std::string& command) {
  auto it = cfg.find("out_dir");
  std::string out_dir =
      it != cfg.end() && !it->second.empty() ? it->second : "runs";
  auto st = cfg.find("seed");
  uint64_t seed = st != cfg.end() && !st->second.empty()
                      ? static_cast<uint64_t>(parse_i64("seed", st->second))
                      : 1234;
  return make_run_dir_impl(out_dir, command, seed);
}

std::string run_prepare_data(const ConfigMap& cfg) {
  Resolver r(cfg);
  int64_t num_classes = r.i64("num_classes", 10);
  std::string root = r.data_root();
  std::string layout = r.str("layout", "geonrw");
  bool require_sar = r.flag("require_sar", false);
  if (r.has("manifest"))
    throw UsageError("prepare-data: 'manifest' is an output here, not an "
                     "input; pass --data-root");
  r.note("manifest", "");

  std::string run_dir = make_run_dir_impl(r.str("out_dir", "runs"),
                                          "prepare-data",
                                          static_cast<uint64_t>(r.i64("seed", 1234)));
  write_resolved(r, run_dir);

  Manifest m = Manifest::scan(root, layout, require_sar);
  m.num_classes = num_classes;
  m.validate();
  m.save(run_dir + "/manifest.txt");
  std::cout << "manifest: " << m.train.size() << " train / " << m.test.size()
            << " test tiles -> " << run_dir << "/manifest.txt\n";
  return run_dir;
}

std::string run_train(const ConfigMap& cfg) {
  Resolver r(cfg);
  TrainConfig tc = build_train_config(r);
  std::string resume = r.str("resume", "");
  Manifest m = resolve_manifest(r, tc.data.target == "sar", tc.data.num_classes);

  std::string run_dir = make_run_dir_impl(r.str("out_dir", "runs"), "train",
                                          tc.seed);
  write_resolved(r, run_dir);

  Trainer t(tc);
  if (!resume.empty()) t.load_checkpoint(resume);
  std::string final_ckpt = t.fit(m, run_dir);
  std::cout << "final checkpoint: " << final_ckpt << "\n";
  return run_dir;
}

std::string run_synthesize(const ConfigMap& cfg) {
  Resolver r(cfg);
  std::string ckpt =
      r.required("checkpoint", "--checkpoint", "trained GAN checkpoint");
  std::string split = r.str("split", "test");
  if (split != "test" && split != "train" && split != "all")
    throw UsageError("config: split must be test, train or all, got '" +
                     split + "'");
  std::string pad = r.str("pad", "error");
  if (pad != "error" && pad != "reflect")
    throw UsageError("config: pad must be error or reflect, got '" + pad +
                     "'");

  auto trainer = Trainer::from_checkpoint(ckpt);
  const LoadOptions& opt = trainer->config().data;
  Manifest m = resolve_manifest(r, opt.target == "sar", opt.num_classes);

  std::string run_dir = make_run_dir_impl(r.str("out_dir", "runs"),
                                          "synthesize", trainer->config().seed);
  r.note("seed", std::to_string(trainer->config().seed));
  write_resolved(r, run_dir);

  std::vector<TileRecord> recs;
  if (split != "test") recs.insert(recs.end(), m.train.begin(), m.train.end());
  if (split != "train") recs.insert(recs.end(), m.test.begin(), m.test.end());
  if (recs.empty())
    throw std::runtime_error("synthesize: the '" + split +
                             "' split of the manifest is empty");

  std::string synth_root = run_dir + "/synth";
  fs::create_directories(synth_root);
  bool label_only = trainer->config().gen.variant == Variant::kLabelOnly;
  bool raster_only = trainer->config().gen.variant == Variant::kRasterOnly;
  std::ofstream ids(synth_root + "/test_ids.txt", std::ios::trunc);
  if (!ids)
    throw std::runtime_error("synthesize: cannot write test_ids.txt under " +
                             synth_root);
  for (const auto& rec : recs) {
    LoadedTile tile = load_tile(m, rec, opt);
    Tensor<float> out = trainer->synthesize(
        label_only ? nullptr : &tile.raster,
        raster_only ? nullptr : &tile.labels, pad);
    write_synth_tile(m, rec, opt.target, out, synth_root);
    ids << rec.id << "\n";
  }
  ids.close();
  std::cout << "synthesized " << recs.size() << " tiles -> " << synth_root
            << "\n";
  return run_dir;
}

std::string run_train_segmenter(const ConfigMap& cfg) {
  Resolver r(cfg);
  SegConfig sc = build_seg_config(r);
  std::string resume = r.str("resume", "");
  Manifest m = resolve_manifest(r, sc.data.target == "sar", sc.data.num_classes);

  std::string run_dir = make_run_dir_impl(r.str("out_dir", "runs"),
                                          "train-segmenter", sc.seed);
  write_resolved(r, run_dir);

  SegTrainer t(sc);
  if (!resume.empty()) t.load_checkpoint(resume);
  std::string final_ckpt = t.fit(m, run_dir);
  std::cout << "final checkpoint: " << final_ckpt << "\n";
  return run_dir;
}

std::string run_evaluate(const ConfigMap& cfg) {
  Resolver r(cfg);
  std::string seg_ckpt = r.required("segmenter", "--segmenter",
                                    "trained segmenter checkpoint");
  std::string fake_root = r.required("fake_root", "--fake-root",
                                     "root of the synthesized dataset");

  auto seg = SegTrainer::from_checkpoint(seg_ckpt);
  const LoadOptions& opt = seg->config().data;
  bool require_sar = opt.target == "sar";
  Manifest real_m = resolve_manifest(r, require_sar, opt.num_classes);
  Manifest fake_m = Manifest::scan(fake_root, real_m.layout, require_sar);
  fake_m.num_classes = opt.num_classes;

  std::string run_dir = make_run_dir_impl(r.str("out_dir", "runs"), "evaluate",
                                          seg->config().seed);
  r.note("seed", std::to_string(seg->config().seed));
  write_resolved(r, run_dir);

  std::vector<EvalTile> tiles = align_for_eval(real_m, fake_m, opt);
  EvalResult result = evaluate_run(tiles, *seg);
  write_report_csv(result, run_dir + "/report.csv");
  std::cout << render_table(result);
  std::cout << "report: " << run_dir << "/report.csv\n";
  return run_dir;
}

std::string run_edit_flood(const ConfigMap& cfg) {
  Resolver r(cfg);
  std::string dem_path =
      r.required("dem", "--dem", "input elevation raster (float GeoTIFF)");
  std::string lc_path =
      r.required("landcover", "--landcover", "input land-cover map");
  if (!r.has("h_min") && !r.has("levels"))
    throw UsageError(
        "missing required --h-min (config key 'h_min'): flood water level in "
        "raster units; or pass --levels for a sweep");

  FloodSpec spec;
  spec.erosion_radius = r.i64("radius", 1);
  int64_t num_classes = r.i64("num_classes", 10);
  int64_t wc = parse_i64("water_class",
                         r.required("water_class", "--water-class",
                                    "land-cover class id written into the "
                                    "flooded region"));
  if (wc < 0 || wc >= num_classes)
    throw UsageError("config: water_class must lie in [0, " +
                     std::to_string(num_classes) + "), got " +
                     std::to_string(wc));
  spec.water_class = static_cast<int32_t>(wc);

  std::vector<double> levels;
  if (r.has("levels")) {
    levels = parse_f64_list("levels", r.str("levels", ""));
    if (r.has("h_min")) r.f64("h_min", 0.0);  // echoed but unused in a sweep
  } else {
    levels.push_back(r.f64("h_min", 0.0));
  }

  std::string run_dir =
      make_run_dir_impl(r.str("out_dir", "runs"), "edit-flood",
                        static_cast<uint64_t>(r.i64("seed", 1234)));
  write_resolved(r, run_dir);

  Tensor<float> dem_chw = read_raster_f32(dem_path);
  if (dem_chw.dim(0) != 1)
    throw std::runtime_error("edit-flood: elevation raster must be single "
                             "channel, got " + dem_chw.shape_str());
  int64_t h = dem_chw.dim(1), w = dem_chw.dim(2);
  Tensor<float> dem = dem_chw.reshaped({h, w});
  Tensor<int32_t> landcover = read_labels(lc_path);

  std::vector<FloodResult> results;
  if (levels.size() == 1) {
    spec.h_min = levels[0];
    results.push_back(flood_edit(dem, landcover, spec));
  } else {
    results = sweep(dem, landcover, levels, spec);
    std::sort(levels.begin(), levels.end());  // sweep reports in this order
  }

  for (size_t k = 0; k < results.size(); ++k) {
    std::string stem = run_dir + "/flood_" + std::to_string(k);
    write_tiff_f32(stem + "_dem.tif", results[k].dem.reshaped({1, h, w}));
    write_labels_u8(stem + "_landcover.tif", results[k].landcover);
    Tensor<int32_t> mask({h, w});
    for (int64_t i = 0; i < mask.numel(); ++i) mask[i] = results[k].mask[i];
    write_labels_u8(stem + "_mask.png", mask);
    std::cout << "level " << k << ": h=" << levels[k]
              << " flooded=" << count_mask(results[k].mask) << " px -> "
              << stem << "_{dem.tif,landcover.tif,mask.png}\n";
  }
  return run_dir;
}

}  // namespace geosyn
