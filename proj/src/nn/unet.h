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

#ifndef GEOSYN_NN_UNET_H_
#define GEOSYN_NN_UNET_H_

#include <stdexcept>
#include <string>
#include <vector>

#include "nn/layers.h"

namespace geosyn {

struct UNetConfig {
  int64_t levels = 5;
  int64_t base_width = 64;
  int64_t num_classes = 10;
  int64_t in_channels = 3;

  int64_t feature_dim() const { return base_width << (levels - 1); }

  void validate() const {
    if (levels < 2) throw std::invalid_argument("UNetConfig: levels must be >= 2");
    if (base_width < 1 || num_classes < 2 || in_channels < 1)
      throw std::invalid_argument("UNetConfig: invalid field values");
  }
};

// U-Net segmenter used for evaluation only: double-conv blocks with
// parameter-free batch normalization, 2x2 max-pool descent, bilinear ascent
// with skip concatenation, and a norm-free 1x1 head. No spectral
// normalization here; that belongs to the adversarial pair.
template <typename T>
class UNet {
 public:
  UNet(const UNetConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.validate();
    int64_t b = cfg.base_width;
    down_.reserve(cfg.levels);
    for (int64_t l = 0; l < cfg.levels; ++l) {
      int64_t in = l == 0 ? cfg.in_channels : b << (l - 1);
      down_.emplace_back(rng, in, b << l);
    }
    for (int64_t l = cfg.levels - 2; l >= 0; --l)
      up_.emplace_back(rng, (b << (l + 1)) + (b << l), b << l);
    head_.emplace(rng, b, cfg.num_classes, 1, 1, 0, PadMode::kZero, true,
                  false);
  }

  // Returns per-pixel class logits [N,C,H,W]. If bottleneck is non-null it
  // receives the deepest encoder activation before upsampling.
  Var<T> forward(const Var<T>& x, const ForwardCtx& ctx,
                 Var<T>* bottleneck = nullptr) {
    if (x->value.rank() != 4 || x->value.dim(1) != cfg_.in_channels)
      throw std::invalid_argument("unet: input must be [N," +
                                  std::to_string(cfg_.in_channels) +
                                  ",H,W], got " + x->value.shape_str());
    int64_t f = int64_t{1} << (cfg_.levels - 1);
    if (x->value.dim(2) % f != 0 || x->value.dim(3) % f != 0)
      throw std::invalid_argument(
          "unet: spatial dims must be divisible by " + std::to_string(f) +
          ", got " + x->value.shape_str());
    std::vector<Var<T>> skips;
    Var<T> h = x;
    for (int64_t l = 0; l < cfg_.levels; ++l) {
      if (l > 0) h = maxpool2(h);
      h = down_[l].forward(h, ctx);
      if (l + 1 < cfg_.levels) skips.push_back(h);
    }
    if (bottleneck) *bottleneck = h;
    for (size_t i = 0; i < up_.size(); ++i) {
      h = upsample_bilinear2(h);
      h = concat_channels(skips[skips.size() - 1 - i], h);
      h = up_[i].forward(h, ctx);
    }
    return head_->forward(h, ctx);
  }

  // Bottleneck activation spatially mean-pooled to [N, feature_dim].
  Tensor<T> extract_features(const Var<T>& x, const ForwardCtx& ctx) {
    Var<T> neck;
    forward(x, ctx, &neck);
    int64_t n = neck->value.dim(0), c = neck->value.dim(1);
    int64_t plane = neck->value.dim(2) * neck->value.dim(3);
    Tensor<T> out({n, c});
    for (int64_t ni = 0; ni < n; ++ni)
      for (int64_t ci = 0; ci < c; ++ci) {
        const T* p = neck->value.data() + (ni * c + ci) * plane;
        T acc = T(0);
        for (int64_t i = 0; i < plane; ++i) acc += p[i];
        out[ni * c + ci] = acc / static_cast<T>(plane);
      }
    return out;
  }

  void collect(const std::string& prefix, StateDict<T>* sd) {
    for (size_t l = 0; l < down_.size(); ++l)
      down_[l].collect(prefix + ".down" + std::to_string(l), sd);
    for (size_t i = 0; i < up_.size(); ++i)
      up_[i].collect(prefix + ".up" + std::to_string(i), sd);
    head_->collect(prefix + ".head", sd);
  }

  const UNetConfig& config() const { return cfg_; }
  Conv2dLayer<T>& head_conv() { return *head_; }

 private:
  // conv3x3 -> bn -> relu, twice.
  struct DoubleConv {
    DoubleConv(Rng& rng, int64_t in, int64_t out)
        : conv_a(rng, in, out, 3, 1, 1, PadMode::kZero, true, false),
          bn_a(out),
          conv_b(rng, out, out, 3, 1, 1, PadMode::kZero, true, false),
          bn_b(out) {}

    Var<T> forward(const Var<T>& x, const ForwardCtx& ctx) {
      auto h = relu(bn_a.forward(conv_a.forward(x, ctx), ctx));
      return relu(bn_b.forward(conv_b.forward(h, ctx), ctx));
    }

    void collect(const std::string& prefix, StateDict<T>* sd) {
      conv_a.collect(prefix + ".conv_a", sd);
      bn_a.collect(prefix + ".bn_a", sd);
      conv_b.collect(prefix + ".conv_b", sd);
      bn_b.collect(prefix + ".bn_b", sd);
    }

    Conv2dLayer<T> conv_a;
    BatchNorm2d<T> bn_a;
    Conv2dLayer<T> conv_b;
    BatchNorm2d<T> bn_b;
  };

  UNetConfig cfg_;
  std::vector<DoubleConv> down_;
  std::vector<DoubleConv> up_;
  std::optional<Conv2dLayer<T>> head_;
};

}  // namespace geosyn

#endif  // GEOSYN_NN_UNET_H_
