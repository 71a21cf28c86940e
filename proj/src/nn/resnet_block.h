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

#ifndef GEOSYN_NN_RESNET_BLOCK_H_
#define GEOSYN_NN_RESNET_BLOCK_H_

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

#include "nn/layers.h"

namespace geosyn {

enum class NormMode { kSpade, kBatch };

// Residual block with norm -> leaky-relu -> conv twice on the branch and a
// 1x1-projected skip when the channel count changes. Normalization is SPADE
// when a segmap is supplied, plain batch normalization otherwise. The middle
// width is min(cin, cout).
template <typename T>
class ResnetBlock {
 public:
  ResnetBlock(Rng& rng, int64_t cin, int64_t cout, NormMode mode,
              int64_t num_classes, int64_t spade_hidden)
      : mode_(mode),
        learned_shortcut_(cin != cout),
        cmid_(std::min(cin, cout)),
        conv0_(rng, cin, cmid_, 3, 1, 1, PadMode::kZero, true, true),
        conv1_(rng, cmid_, cout, 3, 1, 1, PadMode::kZero, true, true) {
    if (mode == NormMode::kSpade) {
      spade0_.emplace(rng, cin, num_classes, spade_hidden, true);
      spade1_.emplace(rng, cmid_, num_classes, spade_hidden, true);
    } else {
      bn0_.emplace(cin);
      bn1_.emplace(cmid_);
    }
    if (learned_shortcut_) {
      if (mode == NormMode::kSpade)
        spade_s_.emplace(rng, cin, num_classes, spade_hidden, true);
      else
        bn_s_.emplace(cin);
      conv_s_.emplace(rng, cin, cout, 1, 1, 0, PadMode::kZero, false, true);
    }
  }

  Var<T> forward(const Var<T>& x, const Tensor<T>* segmap,
                 const ForwardCtx& ctx) {
    if (mode_ == NormMode::kSpade && segmap == nullptr)
      throw std::invalid_argument("ResnetBlock: SPADE mode requires a segmap");
    auto h = leaky_relu(norm(0, x, segmap, ctx), T(0.2));
    h = conv0_.forward(h, ctx);
    h = leaky_relu(norm(1, h, segmap, ctx), T(0.2));
    h = conv1_.forward(h, ctx);
    Var<T> s = x;
    if (learned_shortcut_) s = conv_s_->forward(norm(2, x, segmap, ctx), ctx);
    return add(s, h);
  }

  void collect(const std::string& prefix, StateDict<T>* sd) {
    if (mode_ == NormMode::kSpade) {
      spade0_->collect(prefix + ".norm0", sd);
      spade1_->collect(prefix + ".norm1", sd);
    } else {
      bn0_->collect(prefix + ".norm0", sd);
      bn1_->collect(prefix + ".norm1", sd);
    }
    conv0_.collect(prefix + ".conv0", sd);
    conv1_.collect(prefix + ".conv1", sd);
    if (learned_shortcut_) {
      if (mode_ == NormMode::kSpade)
        spade_s_->collect(prefix + ".norm_s", sd);
      else
        bn_s_->collect(prefix + ".norm_s", sd);
      conv_s_->collect(prefix + ".conv_s", sd);
    }
  }

  Conv2dLayer<T>& conv0() { return conv0_; }
  Conv2dLayer<T>& conv1() { return conv1_; }

 private:
  Var<T> norm(int which, const Var<T>& x, const Tensor<T>* segmap,
              const ForwardCtx& ctx) {
    if (mode_ == NormMode::kSpade) {
      SpadeNorm<T>& n = which == 0 ? *spade0_ : which == 1 ? *spade1_ : *spade_s_;
      return n.forward(x, *segmap, ctx);
    }
    BatchNorm2d<T>& n = which == 0 ? *bn0_ : which == 1 ? *bn1_ : *bn_s_;
    return n.forward(x, ctx);
  }

  NormMode mode_;
  bool learned_shortcut_;
  int64_t cmid_;
  std::optional<SpadeNorm<T>> spade0_, spade1_, spade_s_;
  std::optional<BatchNorm2d<T>> bn0_, bn1_, bn_s_;
  Conv2dLayer<T> conv0_, conv1_;
  std::optional<Conv2dLayer<T>> conv_s_;
};

}  // namespace geosyn

#endif  // GEOSYN_NN_RESNET_BLOCK_H_
