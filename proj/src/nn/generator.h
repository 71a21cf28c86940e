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

#ifndef GEOSYN_NN_GENERATOR_H_
#define GEOSYN_NN_GENERATOR_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nn/resnet_block.h"

namespace geosyn {

enum class Variant { kFusion, kLabelOnly, kRasterOnly, kConcat };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::kFusion: return "fusion";
    case Variant::kLabelOnly: return "label_only";
    case Variant::kRasterOnly: return "raster_only";
    case Variant::kConcat: return "concat";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "fusion") return Variant::kFusion;
  if (s == "label_only") return Variant::kLabelOnly;
  if (s == "raster_only") return Variant::kRasterOnly;
  if (s == "concat") return Variant::kConcat;
  throw std::invalid_argument("unknown variant: " + s);
}

struct GeneratorConfig {
  Variant variant = Variant::kFusion;
  int64_t in_raster_channels = 1;
  int64_t num_classes = 10;
  int64_t out_channels = 3;
  int64_t stages = 4;
  int64_t body_blocks = 9;
  int64_t base_width = 64;
  int64_t train_size = 256;

  int64_t spade_hidden() const { return 2 * base_width; }
  int64_t downsample_factor() const { return int64_t{1} << stages; }

  void validate() const {
    if (out_channels < 1 || out_channels > 3)
      throw std::invalid_argument("GeneratorConfig: out_channels must be 1..3, got " +
                                  std::to_string(out_channels));
    if (stages != 4)
      throw std::invalid_argument("GeneratorConfig: stages fixed at 4");
    if (body_blocks < 1 || base_width < 1 || num_classes < 2 ||
        in_raster_channels < 1)
      throw std::invalid_argument("GeneratorConfig: invalid field values");
    // The bottleneck's reflect-padded 3x3 convolutions need a 2x2 feature
    // map, so inputs must reach twice the downsampling factor.
    if (train_size < 2 * downsample_factor())
      throw std::invalid_argument(
          "GeneratorConfig: train_size must be at least " +
          std::to_string(2 * downsample_factor()) + ", got " +
          std::to_string(train_size));
  }
};

// Encoder-decoder generator: 7x7 stem, four stride-2 downsampling stages to
// 16x base width, a 9-block residual body, four nearest-upsample + residual
// stages back up, and a tanh head. The fusion and label_only variants use
// SPADE everywhere; raster_only and concat use plain batch normalization.
// label_only has no encoder: the one-hot map is resized to the bottleneck
// resolution and projected by a single conv.
template <typename T>
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.validate();
    int64_t b = cfg.base_width;
    bool spade = use_spade();
    int64_t hidden = cfg.spade_hidden();
    if (cfg.variant == Variant::kLabelOnly) {
      head_.emplace(rng, cfg.num_classes, 16 * b, 3, 1, 1, PadMode::kZero,
                    true, true);
    } else {
      int64_t in_ch = cfg.variant == Variant::kConcat
                          ? cfg.in_raster_channels + cfg.num_classes
                          : cfg.in_raster_channels;
      stem_.emplace(rng, in_ch, b, 7, 1, 3, PadMode::kReflect, true, true);
      for (int64_t k = 0; k < cfg.stages; ++k) {
        EncStage st{Conv2dLayer<T>(rng, b << k, b << (k + 1), 3, 2, 1,
                                   PadMode::kZero, true, true),
                    std::nullopt, std::nullopt};
        if (spade)
          st.spade.emplace(rng, b << (k + 1), cfg.num_classes, hidden, true);
        else
          st.bn.emplace(b << (k + 1));
        enc_.push_back(std::move(st));
      }
    }
    NormMode mode = spade ? NormMode::kSpade : NormMode::kBatch;
    for (int64_t i = 0; i < cfg.body_blocks; ++i)
      body_.emplace_back(rng, 16 * b, 16 * b, mode, cfg.num_classes, hidden);
    for (int64_t k = 0; k < cfg.stages; ++k)
      dec_.emplace_back(rng, 16 * b >> k, 16 * b >> (k + 1), mode,
                        cfg.num_classes, hidden);
    final_.emplace(rng, b, cfg.out_channels, 3, 1, 1, PadMode::kZero, true,
                   true);
  }

  bool use_spade() const {
    return cfg_.variant == Variant::kFusion ||
           cfg_.variant == Variant::kLabelOnly;
  }

  // raster: [N,R,H,W] or null; segmap: one-hot [N,C,H,W] or null, depending
  // on the variant. If bottleneck is non-null it receives the encoder output
  // (16*base channels at H/16 x W/16).
  Var<T> forward(const Var<T>& raster, const Tensor<T>* segmap,
                 const ForwardCtx& ctx, Var<T>* bottleneck = nullptr) {
    const Tensor<T>* seg = use_spade() || cfg_.variant == Variant::kConcat
                               ? segmap
                               : nullptr;
    check_inputs(raster, segmap);
    int64_t f = cfg_.downsample_factor();

    Var<T> x;
    if (cfg_.variant == Variant::kLabelOnly) {
      int64_t h = segmap->dim(2), w = segmap->dim(3);
      auto seg_small = make_var(nearest_resize(*segmap, h / f, w / f), false);
      x = head_->forward(seg_small, ctx);
    } else {
      Var<T> in = raster;
      if (cfg_.variant == Variant::kConcat)
        in = concat_channels(raster, make_var(*segmap, false));
      x = relu(stem_->forward(in, ctx));
      for (auto& st : enc_) {
        x = st.conv.forward(x, ctx);
        x = st.spade ? st.spade->forward(x, *seg, ctx) : st.bn->forward(x, ctx);
        x = relu(x);
      }
    }
    if (bottleneck) *bottleneck = x;

    const Tensor<T>* block_seg = use_spade() ? segmap : nullptr;
    for (auto& blk : body_) x = blk.forward(x, block_seg, ctx);
    for (auto& blk : dec_) {
      x = upsample_nearest2(x);
      x = blk.forward(x, block_seg, ctx);
    }
    return tanh_strict(final_->forward(x, ctx));
  }

  void collect(const std::string& prefix, StateDict<T>* sd) {
    if (head_) head_->collect(prefix + ".head", sd);
    if (stem_) stem_->collect(prefix + ".enc_stem", sd);
    for (size_t k = 0; k < enc_.size(); ++k) {
      std::string p = prefix + ".enc" + std::to_string(k);
      enc_[k].conv.collect(p + ".conv", sd);
      if (enc_[k].spade)
        enc_[k].spade->collect(p + ".norm", sd);
      else
        enc_[k].bn->collect(p + ".norm", sd);
    }
    for (size_t i = 0; i < body_.size(); ++i)
      body_[i].collect(prefix + ".body" + std::to_string(i), sd);
    for (size_t k = 0; k < dec_.size(); ++k)
      dec_[k].collect(prefix + ".dec" + std::to_string(k), sd);
    final_->collect(prefix + ".final", sd);
  }

  const GeneratorConfig& config() const { return cfg_; }
  Conv2dLayer<T>& final_conv() { return *final_; }

 private:
  void check_inputs(const Var<T>& raster, const Tensor<T>* segmap) const {
    bool need_seg = cfg_.variant != Variant::kRasterOnly;
    bool need_raster = cfg_.variant != Variant::kLabelOnly;
    if (cfg_.variant == Variant::kLabelOnly && raster)
      throw std::invalid_argument("generator: label_only takes no raster input");
    if (need_raster && !raster)
      throw std::invalid_argument(std::string("generator: variant ") +
                                  to_string(cfg_.variant) + " requires raster");
    if (need_seg && !segmap)
      throw std::invalid_argument(std::string("generator: variant ") +
                                  to_string(cfg_.variant) + " requires segmap");
    int64_t f = cfg_.downsample_factor();
    int64_t h = -1, w = -1;
    if (raster) {
      if (raster->value.rank() != 4 ||
          raster->value.dim(1) != cfg_.in_raster_channels)
        throw std::invalid_argument(
            "generator: raster must be [N," +
            std::to_string(cfg_.in_raster_channels) + ",H,W], got " +
            raster->value.shape_str());
      h = raster->value.dim(2);
      w = raster->value.dim(3);
    }
    if (need_seg) {
      if (segmap->rank() != 4 || segmap->dim(1) != cfg_.num_classes)
        throw std::invalid_argument("generator: segmap must be [N," +
                                    std::to_string(cfg_.num_classes) +
                                    ",H,W], got " + segmap->shape_str());
      if (h >= 0 && (segmap->dim(2) != h || segmap->dim(3) != w))
        throw std::invalid_argument("generator: raster/segmap size mismatch " +
                                    raster->value.shape_str() + " vs " +
                                    segmap->shape_str());
      h = segmap->dim(2);
      w = segmap->dim(3);
    }
    if (h % f != 0 || w % f != 0)
      throw std::invalid_argument(
          "generator: spatial dims must be divisible by " + std::to_string(f) +
          ", got " + std::to_string(h) + "x" + std::to_string(w));
  }

  struct EncStage {
    Conv2dLayer<T> conv;
    std::optional<SpadeNorm<T>> spade;
    std::optional<BatchNorm2d<T>> bn;
  };

  GeneratorConfig cfg_;
  std::optional<Conv2dLayer<T>> head_;
  std::optional<Conv2dLayer<T>> stem_;
  std::vector<EncStage> enc_;
  std::vector<ResnetBlock<T>> body_;
  std::vector<ResnetBlock<T>> dec_;
  std::optional<Conv2dLayer<T>> final_;
};

}  // namespace geosyn

#endif  // GEOSYN_NN_GENERATOR_H_
