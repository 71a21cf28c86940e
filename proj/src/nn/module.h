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

#ifndef GEOSYN_NN_MODULE_H_
#define GEOSYN_NN_MODULE_H_

#include <string>
#include <utility>
#include <vector>

#include "core/autodiff.h"
#include "core/rng.h"
#include "core/tensor.h"

namespace geosyn {

// Shared forward-pass context. step identifies the optimizer step so that
// per-step work (spectral power iteration) runs exactly once even when a
// layer is evaluated several times within the step.
struct ForwardCtx {
  bool training = false;
  int64_t step = -1;
};

// Flat view of a module tree's state. params are trainable and visible to the
// optimizer; buffers (running statistics, spectral-norm u vectors) persist in
// checkpoints but receive no gradients. Entries point into the live modules,
// so loading writes through them in place.
template <typename T>
struct StateDict {
  std::vector<std::pair<std::string, Var<T>>> params;
  std::vector<std::pair<std::string, Tensor<T>*>> buffers;

  void add_param(const std::string& name, const Var<T>& v) {
    params.emplace_back(name, v);
  }
  void add_buffer(const std::string& name, Tensor<T>* t) {
    buffers.emplace_back(name, t);
  }
};

template <typename T>
Var<T> make_conv_weight(Rng& rng, int64_t out_ch, int64_t in_ch, int64_t k,
                        T stddev = T(0.02)) {
  Tensor<T> w({out_ch, in_ch, k, k});
  rng.fill_normal(w, T(0), stddev);
  return make_var(std::move(w), true);
}

template <typename T>
Var<T> make_zero_bias(int64_t out_ch) {
  return make_var(Tensor<T>({out_ch}), true);
}

}  // namespace geosyn

#endif  // GEOSYN_NN_MODULE_H_
