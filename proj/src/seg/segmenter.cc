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

#include "seg/segmenter.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "core/ops.h"
#include "core/version.h"

namespace geosyn {

namespace fs = std::filesystem;

namespace {

nlohmann::json unet_to_json(const UNetConfig& u) {
  return {{"levels", u.levels},
          {"base_width", u.base_width},
          {"num_classes", u.num_classes},
          {"in_channels", u.in_channels}};
}

UNetConfig unet_from_json(const nlohmann::json& j) {
  UNetConfig u;
  u.levels = j.value("levels", u.levels);
  u.base_width = j.value("base_width", u.base_width);
  u.num_classes = j.value("num_classes", u.num_classes);
  u.in_channels = j.value("in_channels", u.in_channels);
  return u;
}

SegConfig validated(SegConfig c) {
  c.validate();
  return c;
}

StateDict<float> collected(UNet<float>& net) {
  StateDict<float> sd;
  net.collect("seg", &sd);
  return sd;
}

}  // namespace

void SegConfig::validate() const {
  unet.validate();
  if (lr <= 0.0) throw std::invalid_argument("segmenter: lr must be > 0");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 ||
      adam_beta2 >= 1.0)
    throw std::invalid_argument("segmenter: Adam betas must lie in [0, 1)");
  if (epochs < 0) throw std::invalid_argument("segmenter: epochs < 0");
  if (batch_size < 1) throw std::invalid_argument("segmenter: batch_size < 1");
  int64_t f = int64_t{1} << (unet.levels - 1);
  if (crop < f || crop % f != 0)
    throw std::invalid_argument("segmenter: crop must be a multiple of " +
                                std::to_string(f));
  if (checkpoint_every < 1 || log_every < 1)
    throw std::invalid_argument("segmenter: intervals must be >= 1");
  if (workers < 1) throw std::invalid_argument("segmenter: workers < 1");
  if (workers > 1)
    throw std::invalid_argument(
        "segmenter: workers > 1 is not supported; normalization statistics "
        "are computed synchronously over the whole batch, and parallel "
        "workers would break that contract");
  if (data.num_classes != unet.num_classes)
    throw std::invalid_argument(
        "segmenter: data num_classes disagrees with the network");
}

nlohmann::json SegConfig::to_json() const {
  return {{"unet", unet_to_json(unet)},
          {"lr", lr},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"crop", crop},
          {"seed", seed},
          {"checkpoint_every", checkpoint_every},
          {"log_every", log_every},
          {"workers", workers},
          {"data", data.to_json()}};
}

SegConfig SegConfig::from_json(const nlohmann::json& j) {
  SegConfig c;
  if (j.contains("unet")) c.unet = unet_from_json(j.at("unet"));
  c.lr = j.value("lr", c.lr);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.crop = j.value("crop", c.crop);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.log_every = j.value("log_every", c.log_every);
  c.workers = j.value("workers", c.workers);
  if (j.contains("data")) c.data = LoadOptions::from_json(j.at("data"));
  return c;
}

SegTrainer::SegTrainer(const SegConfig& cfg)
    : cfg_(validated(cfg)),
      rng_(Rng::derived(cfg_.seed, 3)),
      net_(cfg_.unet, rng_),
      sd_(collected(net_)),
      opt_(sd_.params,
           AdamConfig{cfg_.lr, cfg_.adam_beta1, cfg_.adam_beta2, 1e-8}) {}

std::unique_ptr<SegTrainer> SegTrainer::from_checkpoint(
    const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.metadata.value("kind", "") != "segmenter")
    throw std::runtime_error("checkpoint " + path +
                             " is not a segmenter archive");
  SegConfig cfg = SegConfig::from_json(
      ck.metadata.value("config", nlohmann::json::object()));
  auto t = std::make_unique<SegTrainer>(cfg);
  t->load_checkpoint(path);
  return t;
}

double SegTrainer::train_step(const Batch& batch) {
  if (batch.image.dim(1) != cfg_.unet.in_channels)
    throw std::invalid_argument(
        "segmenter: batch images have " + std::to_string(batch.image.dim(1)) +
        " channels, network expects " +
        std::to_string(cfg_.unet.in_channels));
  ForwardCtx ctx{true, global_step_};
  auto logits = net_.forward(make_var(batch.image, false), ctx);
  auto loss = softmax_cross_entropy(logits, batch.labels);
  double value = static_cast<double>(loss->value[0]);
  if (!std::isfinite(value)) {
    std::string ids;
    for (const auto& id : batch.ids) ids += (ids.empty() ? "" : ", ") + id;
    throw std::runtime_error("segmenter: non-finite loss at step " +
                             std::to_string(global_step_) + " on batch [" +
                             ids + "]");
  }
  opt_.zero_grad();
  backward(loss);
  opt_.step();
  ++global_step_;
  return value;
}

std::string SegTrainer::fit(const Manifest& manifest,
                            const std::string& run_dir) {
  if (manifest.num_classes != cfg_.unet.num_classes)
    throw std::invalid_argument("segmenter: manifest declares " +
                                std::to_string(manifest.num_classes) +
                                " classes, network expects " +
                                std::to_string(cfg_.unet.num_classes));
  fs::create_directories(run_dir);
  const auto& pool = manifest.train;
  if (epoch_ < cfg_.epochs &&
      static_cast<int64_t>(pool.size()) < cfg_.batch_size)
    throw std::invalid_argument("segmenter: " + std::to_string(pool.size()) +
                                " training tiles cannot fill a batch of " +
                                std::to_string(cfg_.batch_size));

  // One pass over the labels up front: a class the training data never
  // shows stays untrained, and its evaluation metric will be undefined.
  std::vector<int64_t> seen(cfg_.unet.num_classes, 0);
  for (const auto& rec : pool) {
    LoadedTile t = load_tile(manifest, rec, cfg_.data);
    for (int64_t i = 0; i < t.labels.numel(); ++i) ++seen[t.labels[i]];
  }
  absent_.clear();
  for (int64_t c = 0; c < cfg_.unet.num_classes; ++c)
    if (seen[c] == 0) absent_.push_back(c);
  if (!absent_.empty()) {
    std::cerr << "warning: classes {";
    for (size_t i = 0; i < absent_.size(); ++i)
      std::cerr << (i ? ", " : "") << absent_[i];
    std::cerr << "} never occur in the training labels; their metrics will "
                 "be undefined\n";
  }

  fs::path curve = fs::path(run_dir) / "curve.csv";
  bool fresh = !fs::exists(curve) || fs::file_size(curve) == 0;
  std::ofstream csv(curve, std::ios::app);
  if (!csv)
    throw std::runtime_error("segmenter: cannot open " + curve.string());
  if (fresh) csv << "step,loss\n";
  csv << std::setprecision(10);

  while (epoch_ < cfg_.epochs) {
    Rng erng = Rng::derived(cfg_.seed, 2000 + static_cast<uint64_t>(epoch_));
    std::vector<int64_t> order(pool.size());
    std::iota(order.begin(), order.end(), int64_t{0});
    erng.shuffle(order);
    int64_t nb = static_cast<int64_t>(pool.size()) / cfg_.batch_size;
    for (int64_t b = 0; b < nb; ++b) {
      std::vector<LoadedTile> tiles;
      tiles.reserve(cfg_.batch_size);
      for (int64_t i = 0; i < cfg_.batch_size; ++i) {
        const TileRecord& rec = pool[order[b * cfg_.batch_size + i]];
        tiles.push_back(
            random_crop(load_tile(manifest, rec, cfg_.data), cfg_.crop, erng));
      }
      double loss = train_step(stack_tiles(tiles));
      if (global_step_ % cfg_.log_every == 0)
        csv << global_step_ << ',' << loss << '\n' << std::flush;
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

void SegTrainer::save_checkpoint(const std::string& path) {
  Checkpoint ck;
  ck.metadata = {{"geosyn_version", version()},
                 {"kind", "segmenter"},
                 {"input_kind", cfg_.data.target},
                 {"config", cfg_.to_json()},
                 {"epoch", epoch_},
                 {"global_step", global_step_}};
  pack_state(sd_, &ck);
  pack_adam(opt_, "opt", &ck);
  ck.save(path);
}

void SegTrainer::load_checkpoint(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.metadata.value("kind", "") != "segmenter")
    throw std::runtime_error("checkpoint " + path +
                             " is not a segmenter archive");
  nlohmann::json mine = cfg_.to_json();
  nlohmann::json theirs = ck.metadata.value("config", nlohmann::json::object());
  mine.erase("epochs");
  theirs.erase("epochs");
  if (mine != theirs)
    throw std::runtime_error(
        "checkpoint " + path +
        " was written under a different configuration; refusing to resume");
  unpack_state(ck, &sd_);
  unpack_adam(ck, "opt", &opt_);
  epoch_ = ck.metadata.value("epoch", int64_t{0});
  global_step_ = ck.metadata.value("global_step", int64_t{0});
}

Tensor<int32_t> SegTrainer::segment(const Tensor<float>& image) {
  bool single = image.rank() == 3;
  Tensor<float> in =
      single ? image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)})
             : image;
  if (in.rank() != 4)
    throw std::invalid_argument("segment: image must be [C,H,W] or [N,C,H,W]");
  NoGradGuard ng;
  ForwardCtx ctx{false, -1};
  auto logits = net_.forward(make_var(in, false), ctx);
  int64_t n = logits->value.dim(0), c = logits->value.dim(1);
  int64_t h = logits->value.dim(2), w = logits->value.dim(3);
  Tensor<int32_t> out({n, h, w});
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        int32_t best = 0;
        float best_v = logits->value.at4(ni, 0, y, x);
        for (int64_t k = 1; k < c; ++k) {
          float v = logits->value.at4(ni, k, y, x);
          if (v > best_v) {
            best_v = v;
            best = static_cast<int32_t>(k);
          }
        }
        out[(ni * h + y) * w + x] = best;
      }
  return single ? out.reshaped({h, w}) : out;
}

Tensor<float> SegTrainer::features(const Tensor<float>& image) {
  Tensor<float> in =
      image.rank() == 3
          ? image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)})
          : image;
  if (in.rank() != 4)
    throw std::invalid_argument(
        "features: image must be [C,H,W] or [N,C,H,W]");
  NoGradGuard ng;
  ForwardCtx ctx{false, -1};
  return net_.extract_features(make_var(in, false), ctx);
}

}  // namespace geosyn
