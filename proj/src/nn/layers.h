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

#ifndef GEOSYN_NN_LAYERS_H_
#define GEOSYN_NN_LAYERS_H_

#include <stdexcept>
#include <string>

#include "core/ops.h"
#include "core/ops_conv.h"
#include "nn/module.h"
#include "nn/spectral.h"

namespace geosyn {

enum class PadMode { kZero, kReflect };

// Convolution layer with optional spectral weight normalization. The left
// singular vector u is a persistent buffer; one power iteration runs per
// training step (deduplicated via ForwardCtx::step), and sigma stays on the
// tape so gradients flow through the raw weight.
template <typename T>
class Conv2dLayer {
 public:
  Conv2dLayer(Rng& rng, int64_t in_ch, int64_t out_ch, int64_t k,
              int64_t stride, int64_t pad, PadMode pad_mode, bool bias,
              bool spectral)
      : stride_(stride),
        pad_(pad),
        pad_mode_(pad_mode),
        spectral_(spectral),
        weight_(make_conv_weight<T>(rng, out_ch, in_ch, k)),
        bias_(bias ? make_zero_bias<T>(out_ch) : Var<T>()),
        u_(spectral ? make_spectral_u<T>(rng, out_ch) : Tensor<T>()) {}

  Var<T> forward(const Var<T>& x, const ForwardCtx& ctx) {
    Var<T> w = effective_weight(ctx);
    if (pad_mode_ == PadMode::kReflect && pad_ > 0)
      return conv2d(pad_reflect(x, pad_), w, bias_, stride_, int64_t{0});
    return conv2d(x, w, bias_, stride_, pad_);
  }

  void collect(const std::string& prefix, StateDict<T>* sd) {
    sd->add_param(prefix + ".weight", weight_);
    if (bias_) sd->add_param(prefix + ".bias", bias_);
    if (spectral_) sd->add_buffer(prefix + ".u", &u_);
  }

  Var<T>& weight() { return weight_; }
  Var<T>& bias() { return bias_; }
  const Tensor<T>& u() const { return u_; }

 private:
  static constexpr T kEps = T(1e-12);

  Var<T> effective_weight(const ForwardCtx& ctx) {
    if (!spectral_) return weight_;
    bool update = ctx.training &&
                  (ctx.step < 0 || ctx.step != last_update_step_);
    Tensor<T> v = spectral_power_iteration(weight_->value, u_, update, kEps);
    if (update && ctx.step >= 0) last_update_step_ = ctx.step;
    auto sigma = matvec_sigma(weight_, u_, v);
    return div_by_scalar(weight_, add_scalar(sigma, kEps));
  }

  int64_t stride_;
  int64_t pad_;
  PadMode pad_mode_;
  bool spectral_;
  Var<T> weight_;
  Var<T> bias_;
  Tensor<T> u_;
  int64_t last_update_step_ = -1;
};

// Parameter-free batch normalization with persistent running statistics.
template <typename T>
class BatchNorm2d {
 public:
  explicit BatchNorm2d(int64_t channels)
      : running_mean_(Tensor<T>({channels})),
        running_var_(Tensor<T>::full({channels}, T(1))) {}

  Var<T> forward(const Var<T>& x, const ForwardCtx& ctx) {
    return batch_norm(x, &running_mean_, &running_var_, ctx.training);
  }

  void collect(const std::string& prefix, StateDict<T>* sd) {
    sd->add_buffer(prefix + ".running_mean", &running_mean_);
    sd->add_buffer(prefix + ".running_var", &running_var_);
  }

 private:
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
};

// Spatially adaptive normalization: parameter-free batch normalization whose
// scale and shift come from a small conv net over the (nearest-resized)
// one-hot segmentation map; out = bn(x) * (1 + gamma) + beta. The modulation
// convs use reflection padding so a spatially uniform segmap yields exactly
// spatially uniform gamma/beta.
template <typename T>
class SpadeNorm {
 public:
  SpadeNorm(Rng& rng, int64_t channels, int64_t num_classes, int64_t hidden,
            bool spectral)
      : channels_(channels),
        num_classes_(num_classes),
        bn_(channels),
        shared_(rng, num_classes, hidden, 3, 1, 1, PadMode::kReflect, true,
                spectral),
        gamma_(rng, hidden, channels, 3, 1, 1, PadMode::kReflect, true,
               spectral),
        beta_(rng, hidden, channels, 3, 1, 1, PadMode::kReflect, true,
              spectral) {}

  // gamma/beta fields for the feature resolution h x w.
  std::pair<Var<T>, Var<T>> modulation(const Tensor<T>& segmap, int64_t n,
                                       int64_t h, int64_t w,
                                       const ForwardCtx& ctx) {
    if (segmap.rank() != 4 || segmap.dim(1) != num_classes_)
      throw std::invalid_argument("SpadeNorm: segmap must be [N," +
                                  std::to_string(num_classes_) + ",H,W], got " +
                                  segmap.shape_str());
    if (segmap.dim(0) != n)
      throw std::invalid_argument(
          "SpadeNorm: batch mismatch, features N=" + std::to_string(n) +
          " segmap N=" + std::to_string(segmap.dim(0)));
    auto seg = make_var(nearest_resize(segmap, h, w), false);
    auto hid = relu(shared_.forward(seg, ctx));
    return {gamma_.forward(hid, ctx), beta_.forward(hid, ctx)};
  }

  Var<T> forward(const Var<T>& x, const Tensor<T>& segmap,
                 const ForwardCtx& ctx) {
    auto [gamma, beta] = modulation(segmap, x->value.dim(0), x->value.dim(2),
                                    x->value.dim(3), ctx);
    auto normalized = bn_.forward(x, ctx);
    return add(mul(normalized, add_scalar(gamma, T(1))), beta);
  }

  void collect(const std::string& prefix, StateDict<T>* sd) {
    bn_.collect(prefix + ".bn", sd);
    shared_.collect(prefix + ".mlp_shared", sd);
    gamma_.collect(prefix + ".mlp_gamma", sd);
    beta_.collect(prefix + ".mlp_beta", sd);
  }

  Conv2dLayer<T>& gamma_conv() { return gamma_; }
  Conv2dLayer<T>& beta_conv() { return beta_; }
  BatchNorm2d<T>& bn() { return bn_; }

 private:
  int64_t channels_;
  int64_t num_classes_;
  BatchNorm2d<T> bn_;
  Conv2dLayer<T> shared_;
  Conv2dLayer<T> gamma_;
  Conv2dLayer<T> beta_;
};

}  // namespace geosyn

#endif  // GEOSYN_NN_LAYERS_H_
