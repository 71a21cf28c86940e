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

#ifndef GEOSYN_NN_DISCRIMINATOR_H_
#define GEOSYN_NN_DISCRIMINATOR_H_

#include <stdexcept>
#include <string>
#include <vector>

#include "nn/layers.h"

namespace geosyn {

struct DiscriminatorConfig {
  int64_t scales = 2;        // 2 for 256-px training, 3 for 512-px
  int64_t in_channels = 14;  // image channels + condition channels
  int64_t base_width = 64;

  static int64_t scales_for_size(int64_t size) { return size >= 512 ? 3 : 2; }

  void validate() const {
    if (scales < 2 || scales > 3)
      throw std::invalid_argument("DiscriminatorConfig: scales must be 2 or 3");
    if (in_channels < 1 || base_width < 1)
      throw std::invalid_argument("DiscriminatorConfig: invalid field values");
  }
};

// Patch discriminator: five 4x4 convs (strides 2,2,2,1,1; widths b, 2b, 4b,
// 8b, 1; pad 2), leaky-relu 0.2, instance normalization on all but the first
// and last layers. features holds the four post-activation maps used for
// feature matching; score is the raw output of the last conv.
template <typename T>
class PatchDiscriminator {
 public:
  struct Output {
    std::vector<Var<T>> features;
    Var<T> score;
  };

  PatchDiscriminator(Rng& rng, int64_t in_ch, int64_t b)
      : c1_(rng, in_ch, b, 4, 2, 2, PadMode::kZero, true, true),
        c2_(rng, b, 2 * b, 4, 2, 2, PadMode::kZero, true, true),
        c3_(rng, 2 * b, 4 * b, 4, 2, 2, PadMode::kZero, true, true),
        c4_(rng, 4 * b, 8 * b, 4, 1, 2, PadMode::kZero, true, true),
        c5_(rng, 8 * b, 1, 4, 1, 2, PadMode::kZero, true, true) {}

  Output forward(const Var<T>& x, const ForwardCtx& ctx) {
    Output out;
    auto f = leaky_relu(c1_.forward(x, ctx), T(0.2));
    out.features.push_back(f);
    f = leaky_relu(instance_norm(c2_.forward(f, ctx)), T(0.2));
    out.features.push_back(f);
    f = leaky_relu(instance_norm(c3_.forward(f, ctx)), T(0.2));
    out.features.push_back(f);
    f = leaky_relu(instance_norm(c4_.forward(f, ctx)), T(0.2));
    out.features.push_back(f);
    out.score = c5_.forward(f, ctx);
    return out;
  }

  void collect(const std::string& prefix, StateDict<T>* sd) {
    c1_.collect(prefix + ".c1", sd);
    c2_.collect(prefix + ".c2", sd);
    c3_.collect(prefix + ".c3", sd);
    c4_.collect(prefix + ".c4", sd);
    c5_.collect(prefix + ".c5", sd);
  }

  Conv2dLayer<T>& score_conv() { return c5_; }

 private:
  Conv2dLayer<T> c1_, c2_, c3_, c4_, c5_;
};

// Multiscale wrapper: scale k sees the input downsampled k times by the
// 3x3-stride-2 average pool. The discriminator is conditioned by channel
// concatenation, condition first.
template <typename T>
class MultiscaleDiscriminator {
 public:
  MultiscaleDiscriminator(const DiscriminatorConfig& cfg, Rng& rng)
      : cfg_(cfg) {
    cfg.validate();
    for (int64_t s = 0; s < cfg.scales; ++s)
      nets_.emplace_back(rng, cfg.in_channels, cfg.base_width);
  }

  std::vector<typename PatchDiscriminator<T>::Output> forward(
      const Var<T>& image, const Var<T>& condition, const ForwardCtx& ctx) {
    if (image->value.dim(0) != condition->value.dim(0) ||
        image->value.dim(2) != condition->value.dim(2) ||
        image->value.dim(3) != condition->value.dim(3))
      throw std::invalid_argument(
          "discriminator: image/condition misaligned, " +
          image->value.shape_str() + " vs " + condition->value.shape_str());
    std::vector<typename PatchDiscriminator<T>::Output> outs;
    Var<T> x = concat_channels(condition, image);
    for (size_t s = 0; s < nets_.size(); ++s) {
      outs.push_back(nets_[s].forward(x, ctx));
      if (s + 1 < nets_.size()) x = avgpool_3x3s2(x);
    }
    return outs;
  }

  void collect(const std::string& prefix, StateDict<T>* sd) {
    for (size_t s = 0; s < nets_.size(); ++s)
      nets_[s].collect(prefix + ".scale" + std::to_string(s), sd);
  }

  const DiscriminatorConfig& config() const { return cfg_; }
  PatchDiscriminator<T>& scale(int64_t s) { return nets_[s]; }

 private:
  DiscriminatorConfig cfg_;
  std::vector<PatchDiscriminator<T>> nets_;
};

}  // namespace geosyn

#endif  // GEOSYN_NN_DISCRIMINATOR_H_
