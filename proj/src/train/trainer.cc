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

#include "train/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "core/ops.h"
#include "core/ops_conv.h"
#include "core/version.h"

namespace geosyn {

namespace fs = std::filesystem;

namespace {

nlohmann::json gen_to_json(const GeneratorConfig& g) {
  return {{"variant", to_string(g.variant)},
          {"in_raster_channels", g.in_raster_channels},
          {"num_classes", g.num_classes},
          {"out_channels", g.out_channels},
          {"stages", g.stages},
          {"body_blocks", g.body_blocks},
          {"base_width", g.base_width},
          {"train_size", g.train_size}};
}

GeneratorConfig gen_from_json(const nlohmann::json& j) {
  GeneratorConfig g;
  g.variant = variant_from_string(j.value("variant", "fusion"));
  g.in_raster_channels = j.value("in_raster_channels", g.in_raster_channels);
  g.num_classes = j.value("num_classes", g.num_classes);
  g.out_channels = j.value("out_channels", g.out_channels);
  g.stages = j.value("stages", g.stages);
  g.body_blocks = j.value("body_blocks", g.body_blocks);
  g.base_width = j.value("base_width", g.base_width);
  g.train_size = j.value("train_size", g.train_size);
  return g;
}

double scalar(const Var<float>& v) {
  return static_cast<double>(v->value[0]);
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

// Mirrors the last two axes downward/rightward; used to bring odd-sized
// frames to the generator's stride multiple at synthesis time.
template <typename T>
Tensor<T> pad_reflect_br(const Tensor<T>& t, int64_t ph, int64_t pw) {
  int64_t r = t.rank();
  int64_t h = t.dim(r - 2), w = t.dim(r - 1);
  if (ph > h - 1 || pw > w - 1)
    throw std::invalid_argument(
        "synthesize: frame too small to mirror-pad to a multiple of 16");
  std::vector<int64_t> shape = t.shape();
  shape[r - 2] = h + ph;
  shape[r - 1] = w + pw;
  Tensor<T> y(shape);
  int64_t planes = t.numel() / (h * w);
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = t.data() + p * h * w;
    T* dst = y.data() + p * (h + ph) * (w + pw);
    for (int64_t i = 0; i < h + ph; ++i) {
      int64_t si = i < h ? i : 2 * h - 2 - i;
      for (int64_t j = 0; j < w + pw; ++j) {
        int64_t sj = j < w ? j : 2 * w - 2 - j;
        dst[i * (w + pw) + j] = src[si * w + sj];
      }
    }
  }
  return y;
}

}  // namespace

int64_t TrainConfig::scales() const {
  return disc_scales > 0 ? disc_scales
                         : DiscriminatorConfig::scales_for_size(crop);
}

int64_t TrainConfig::disc_in_channels() const {
  int64_t cond = gen.num_classes;
  if (gen.variant != Variant::kLabelOnly) cond += gen.in_raster_channels;
  return cond + gen.out_channels;
}

void TrainConfig::validate() const {
  gen.validate();
  if (crop < gen.downsample_factor() || crop % gen.downsample_factor() != 0)
    throw std::invalid_argument("train: crop must be a positive multiple of " +
                                std::to_string(gen.downsample_factor()));
  if (batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
  if (epochs < 0) throw std::invalid_argument("train: epochs < 0");
  if (checkpoint_every < 1 || log_every < 1)
    throw std::invalid_argument("train: intervals must be >= 1");
  if (lr_g < 0.0 || lr_d < 0.0)
    throw std::invalid_argument("train: negative learning rate");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 ||
      adam_beta2 >= 1.0)
    throw std::invalid_argument("train: Adam betas must lie in [0, 1)");
  if (workers < 1) throw std::invalid_argument("train: workers < 1");
  if (workers > 1)
    throw std::invalid_argument(
        "train: workers > 1 is not supported; normalization statistics are "
        "computed synchronously over the whole batch, and parallel workers "
        "would break that contract");
  if (disc_scales != 0 && disc_scales != 2 && disc_scales != 3)
    throw std::invalid_argument("train: disc_scales must be 0 (auto), 2 or 3");
  if (disc_base_width < 1)
    throw std::invalid_argument("train: disc_base_width < 1");
  if (data.num_classes != gen.num_classes)
    throw std::invalid_argument(
        "train: data num_classes disagrees with the generator");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"generator", gen_to_json(gen)},
          {"disc_scales", disc_scales},
          {"disc_base_width", disc_base_width},
          {"lr_g", lr_g},
          {"lr_d", lr_d},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"lambda_fm", weights.lambda_fm},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"crop", crop},
          {"seed", seed},
          {"checkpoint_every", checkpoint_every},
          {"log_every", log_every},
          {"hflip", hflip},
          {"workers", workers},
          {"data", data.to_json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("generator")) c.gen = gen_from_json(j.at("generator"));
  c.disc_scales = j.value("disc_scales", c.disc_scales);
  c.disc_base_width = j.value("disc_base_width", c.disc_base_width);
  c.lr_g = j.value("lr_g", c.lr_g);
  c.lr_d = j.value("lr_d", c.lr_d);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.weights.lambda_fm = j.value("lambda_fm", c.weights.lambda_fm);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.crop = j.value("crop", c.crop);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.log_every = j.value("log_every", c.log_every);
  c.hflip = j.value("hflip", c.hflip);
  c.workers = j.value("workers", c.workers);
  if (j.contains("data")) c.data = LoadOptions::from_json(j.at("data"));
  return c;
}

namespace {

TrainConfig validated(TrainConfig c) {
  c.validate();
  return c;
}

DiscriminatorConfig disc_cfg(const TrainConfig& c) {
  DiscriminatorConfig d;
  d.scales = c.scales();
  d.in_channels = c.disc_in_channels();
  d.base_width = c.disc_base_width;
  d.validate();
  return d;
}

StateDict<float> collected_g(Generator<float>& g) {
  StateDict<float> sd;
  g.collect("g", &sd);
  return sd;
}

StateDict<float> collected_d(MultiscaleDiscriminator<float>& d) {
  StateDict<float> sd;
  d.collect("d", &sd);
  return sd;
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(validated(cfg)),
      g_rng_(Rng::derived(cfg_.seed, 1)),
      d_rng_(Rng::derived(cfg_.seed, 2)),
      g_(cfg_.gen, g_rng_),
      d_(disc_cfg(cfg_), d_rng_),
      sd_g_(collected_g(g_)),
      sd_d_(collected_d(d_)),
      opt_g_(sd_g_.params,
             AdamConfig{cfg_.lr_g, cfg_.adam_beta1, cfg_.adam_beta2, 1e-8}),
      opt_d_(sd_d_.params,
             AdamConfig{cfg_.lr_d, cfg_.adam_beta1, cfg_.adam_beta2, 1e-8}) {}

std::unique_ptr<Trainer> Trainer::from_checkpoint(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.metadata.value("kind", "") != "gan")
    throw std::runtime_error("checkpoint " + path + " is not a GAN archive");
  TrainConfig cfg = TrainConfig::from_json(
      ck.metadata.value("config", nlohmann::json::object()));
  auto t = std::make_unique<Trainer>(cfg);
  t->load_checkpoint(path);
  return t;
}

Var<float> Trainer::make_condition(const Batch& batch,
                                   const Tensor<float>& onehot) {
  auto seg = make_var(onehot, false);
  if (cfg_.gen.variant == Variant::kLabelOnly) return seg;
  return concat_channels(make_var(batch.raster, false), seg);
}

StepMetrics Trainer::train_step(const Batch& batch) {
  if (batch.image.dim(1) != cfg_.gen.out_channels)
    throw std::invalid_argument("train: batch image has " +
                                std::to_string(batch.image.dim(1)) +
                                " channels, model outputs " +
                                std::to_string(cfg_.gen.out_channels));
  ForwardCtx ctx{true, global_step_};
  Tensor<float> onehot = one_hot<float>(batch.labels, cfg_.gen.num_classes);
  Var<float> raster = cfg_.gen.variant == Variant::kLabelOnly
                          ? Var<float>()
                          : make_var(batch.raster, false);
  Var<float> real = make_var(batch.image, false);
  Var<float> cond = make_condition(batch, onehot);

  // One generator pass per step; its tape serves the generator update, while
  // the discriminator update sees only the detached copy.
  Var<float> fake = g_.forward(raster, &onehot, ctx);
  Var<float> fake_d = detach(fake);

  auto split = [](const std::vector<PatchDiscriminator<float>::Output>& outs) {
    std::pair<std::vector<Var<float>>, std::vector<std::vector<Var<float>>>> r;
    for (const auto& o : outs) {
      r.first.push_back(o.score);
      r.second.push_back(o.features);
    }
    return r;
  };

  auto [real_scores, real_feats] = split(d_.forward(real, cond, ctx));
  auto [faked_scores, faked_feats] = split(d_.forward(fake_d, cond, ctx));
  (void)real_feats;
  (void)faked_feats;
  Var<float> ld = d_hinge(real_scores, faked_scores);
  double loss_d = scalar(ld);
  if (!std::isfinite(loss_d))
    throw std::runtime_error("train: non-finite discriminator loss at step " +
                             std::to_string(global_step_) + " on batch [" +
                             join_ids(batch.ids) + "]");
  opt_d_.zero_grad();
  backward(ld);
  opt_d_.step();

  // The generator loss reads the freshly updated discriminator. Freezing the
  // discriminator parameters here skips their weight-gradient work; the image
  // gradient still flows back into the generator.
  for (auto& [name, p] : sd_d_.params) p->requires_grad = false;
  auto [r2_scores, r2_feats] = split(d_.forward(real, cond, ctx));
  auto [f2_scores, f2_feats] = split(d_.forward(fake, cond, ctx));
  (void)r2_scores;
  Var<float> fm = feature_match(f2_feats, r2_feats);
  Var<float> lg =
      add(g_hinge(f2_scores), mul_scalar(fm, float(cfg_.weights.lambda_fm)));
  double loss_g = scalar(lg);
  double loss_fm = scalar(fm);
  if (!std::isfinite(loss_g) || !std::isfinite(loss_fm)) {
    for (auto& [name, p] : sd_d_.params) p->requires_grad = true;
    throw std::runtime_error("train: non-finite generator loss at step " +
                             std::to_string(global_step_) + " on batch [" +
                             join_ids(batch.ids) + "]");
  }
  opt_g_.zero_grad();
  backward(lg);
  opt_g_.step();
  for (auto& [name, p] : sd_d_.params) p->requires_grad = true;

  ++global_step_;
  return {loss_d, loss_g, loss_fm};
}

std::string Trainer::fit(const Manifest& manifest, const std::string& run_dir) {
  if (manifest.num_classes != cfg_.gen.num_classes)
    throw std::invalid_argument("train: manifest declares " +
                                std::to_string(manifest.num_classes) +
                                " classes, model expects " +
                                std::to_string(cfg_.gen.num_classes));
  fs::create_directories(run_dir);
  const auto& pool = manifest.train;
  if (epoch_ < cfg_.epochs) {
    if (static_cast<int64_t>(pool.size()) < cfg_.batch_size)
      throw std::invalid_argument(
          "train: " + std::to_string(pool.size()) +
          " training tiles cannot fill a batch of " +
          std::to_string(cfg_.batch_size));
  }

  fs::path curve = fs::path(run_dir) / "curve.csv";
  bool fresh = !fs::exists(curve) || fs::file_size(curve) == 0;
  std::ofstream csv(curve, std::ios::app);
  if (!csv) throw std::runtime_error("train: cannot open " + curve.string());
  if (fresh) csv << "step,loss_d,loss_g,loss_fm\n";
  csv << std::setprecision(10);

  // Each epoch draws its shuffle, crops and flips from a stream derived from
  // (seed, epoch), so resuming at an epoch boundary replays the identical
  // schedule the uninterrupted run would have used.
  while (epoch_ < cfg_.epochs) {
    Rng erng = Rng::derived(cfg_.seed, 1000 + static_cast<uint64_t>(epoch_));
    std::vector<int64_t> order(pool.size());
    std::iota(order.begin(), order.end(), int64_t{0});
    erng.shuffle(order);
    int64_t nb = static_cast<int64_t>(pool.size()) / cfg_.batch_size;
    for (int64_t b = 0; b < nb; ++b) {
      std::vector<LoadedTile> tiles;
      tiles.reserve(cfg_.batch_size);
      for (int64_t i = 0; i < cfg_.batch_size; ++i) {
        const TileRecord& rec = pool[order[b * cfg_.batch_size + i]];
        LoadedTile t = load_tile(manifest, rec, cfg_.data);
        t = random_crop(t, cfg_.crop, erng);
        if (cfg_.hflip && erng.uniform() < 0.5) flip_lr(&t);
        tiles.push_back(std::move(t));
      }
      StepMetrics m = train_step(stack_tiles(tiles));
      if (global_step_ % cfg_.log_every == 0)
        csv << global_step_ << ',' << m.loss_d << ',' << m.loss_g << ','
            << m.loss_fm << '\n'
            << std::flush;
    }
    ++epoch_;
    if (epoch_ % cfg_.checkpoint_every == 0 && epoch_ < cfg_.epochs)
      save_checkpoint((fs::path(run_dir) /
                       ("ckpt_epoch_" + std::to_string(epoch_) + ".geosynck"))
                          .string());
  }
  std::string final_path = (fs::path(run_dir) / "ckpt_final.geosynck").string();
  save_checkpoint(final_path);
  return final_path;
}

void Trainer::save_checkpoint(const std::string& path) {
  Checkpoint ck;
  ck.metadata = {{"geosyn_version", version()},
                 {"kind", "gan"},
                 {"config", cfg_.to_json()},
                 {"epoch", epoch_},
                 {"global_step", global_step_},
                 {"rng", {{"scheme", "per-epoch derived"}, {"seed", cfg_.seed}}}};
  pack_state(sd_g_, &ck);
  pack_state(sd_d_, &ck);
  pack_adam(opt_g_, "opt_g", &ck);
  pack_adam(opt_d_, "opt_d", &ck);
  ck.save(path);
}

void Trainer::load_checkpoint(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.metadata.value("kind", "") != "gan")
    throw std::runtime_error("checkpoint " + path + " is not a GAN archive");
  nlohmann::json mine = cfg_.to_json();
  nlohmann::json theirs = ck.metadata.value("config", nlohmann::json::object());
  // Extending a run is legitimate, so the epoch budget may differ.
  mine.erase("epochs");
  theirs.erase("epochs");
  if (mine != theirs)
    throw std::runtime_error(
        "checkpoint " + path +
        " was written under a different configuration; refusing to resume");
  unpack_state(ck, &sd_g_);
  unpack_state(ck, &sd_d_);
  unpack_adam(ck, "opt_g", &opt_g_);
  unpack_adam(ck, "opt_d", &opt_d_);
  epoch_ = ck.metadata.value("epoch", int64_t{0});
  global_step_ = ck.metadata.value("global_step", int64_t{0});
}

Tensor<float> Trainer::synthesize(const Tensor<float>* raster,
                                  const Tensor<int32_t>* labels,
                                  const std::string& pad) {
  if (pad != "error" && pad != "reflect")
    throw std::invalid_argument("synthesize: pad mode must be error|reflect");
  bool wants_raster = cfg_.gen.variant != Variant::kLabelOnly;
  bool wants_labels = cfg_.gen.variant != Variant::kRasterOnly;
  if (wants_raster && (!raster || !raster->defined()))
    throw std::invalid_argument("synthesize: this model requires a raster");
  if (wants_labels && (!labels || !labels->defined()))
    throw std::invalid_argument("synthesize: this model requires a label map");
  if (!wants_raster && raster && raster->defined())
    throw std::invalid_argument(
        "synthesize: label-only model does not take a raster");

  int64_t h = 0, w = 0;
  if (wants_raster) {
    if (raster->rank() != 3 || raster->dim(0) != cfg_.gen.in_raster_channels)
      throw std::invalid_argument("synthesize: raster must be [" +
                                  std::to_string(cfg_.gen.in_raster_channels) +
                                  ",H,W]");
    h = raster->dim(1);
    w = raster->dim(2);
  }
  if (wants_labels) {
    if (labels->rank() != 2)
      throw std::invalid_argument("synthesize: labels must be [H,W]");
    if (wants_raster && (labels->dim(0) != h || labels->dim(1) != w))
      throw std::invalid_argument(
          "synthesize: raster and label map sizes differ");
    h = labels->dim(0);
    w = labels->dim(1);
  }

  int64_t f = cfg_.gen.downsample_factor();
  // Padded extents must reach 2f so the bottleneck keeps a 2x2 feature map
  // for its reflect-padded convolutions.
  int64_t hp = std::max((h + f - 1) / f * f, 2 * f);
  int64_t wp = std::max((w + f - 1) / f * f, 2 * f);
  if ((hp != h || wp != w) && pad == "error")
    throw std::invalid_argument(
        "synthesize: frame " + std::to_string(h) + "x" + std::to_string(w) +
        " is not a multiple of " + std::to_string(f) + " of at least " +
        std::to_string(2 * f) +
        "; pass pad=reflect to mirror-pad and crop the result back");

  NoGradGuard ng;
  ForwardCtx ctx{false, -1};
  Var<float> rin;
  Tensor<float> onehot;
  if (wants_raster) {
    Tensor<float> r = raster->reshaped(
        {1, cfg_.gen.in_raster_channels, h, w});
    if (hp != h || wp != w) r = pad_reflect_br(r, hp - h, wp - w);
    rin = make_var(r, false);
  }
  if (wants_labels) {
    Tensor<int32_t> l = labels->reshaped({1, h, w});
    if (hp != h || wp != w) l = pad_reflect_br(l, hp - h, wp - w);
    onehot = one_hot<float>(l, cfg_.gen.num_classes);
  }
  Var<float> out =
      g_.forward(rin, wants_labels ? &onehot : nullptr, ctx);

  Tensor<float> img({cfg_.gen.out_channels, h, w});
  const auto& spec = cfg_.data.image_norm;
  float lo = static_cast<float>(std::min(spec.target_lo, spec.target_hi));
  float hi = static_cast<float>(std::max(spec.target_lo, spec.target_hi));
  for (int64_t c = 0; c < cfg_.gen.out_channels; ++c)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        // tanh can overshoot the training target range; saturate before the
        // inverse map, which rejects out-of-range values by contract.
        float v = out->value.at4(0, c, y, x);
        img[(c * h + y) * w + x] = std::clamp(v, lo, hi);
      }
  spec.denormalize_inplace(&img);
  return img;
}

void flip_lr(LoadedTile* tile) {
  auto flip = [](auto* t) {
    int64_t r = t->rank();
    int64_t w = t->dim(r - 1);
    int64_t rows = t->numel() / w;
    auto* p = t->data();
    for (int64_t i = 0; i < rows; ++i)
      std::reverse(p + i * w, p + (i + 1) * w);
  };
  flip(&tile->image);
  flip(&tile->raster);
  flip(&tile->labels);
}

}  // namespace geosyn
