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

#ifndef GEOSYN_TRAIN_ADAM_H_
#define GEOSYN_TRAIN_ADAM_H_

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core/autodiff.h"

namespace geosyn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are zero until the first step and
// are keyed by parameter name so checkpoints can restore them exactly.
// Parameters whose gradient was never accumulated are skipped for that step.
template <typename T>
class Adam {
 public:
  struct Slot {
    std::string name;
    Var<T> param;
    Tensor<T> m;
    Tensor<T> v;
  };

  Adam(const std::vector<std::pair<std::string, Var<T>>>& params,
       const AdamConfig& cfg)
      : cfg_(cfg) {
    slots_.reserve(params.size());
    for (const auto& [name, var] : params) {
      if (!var) throw std::invalid_argument("Adam: null parameter " + name);
      slots_.push_back(
          {name, var, Tensor<T>(var->value.shape()), Tensor<T>(var->value.shape())});
    }
  }

  void zero_grad() {
    for (auto& s : slots_) s.param->zero_grad();
  }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& s : slots_) {
      if (!s.param->grad.defined()) continue;
      T* p = s.param->value.data();
      const T* g = s.param->grad.data();
      T* m = s.m.data();
      T* v = s.v.data();
      int64_t n = s.param->value.numel();
      for (int64_t i = 0; i < n; ++i) {
        double gi = static_cast<double>(g[i]);
        double mi = cfg_.beta1 * static_cast<double>(m[i]) +
                    (1.0 - cfg_.beta1) * gi;
        double vi = cfg_.beta2 * static_cast<double>(v[i]) +
                    (1.0 - cfg_.beta2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        double update = cfg_.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps);
        p[i] = static_cast<T>(static_cast<double>(p[i]) - update);
      }
    }
  }

  const AdamConfig& config() const { return cfg_; }
  std::vector<Slot>& slots() { return slots_; }
  int64_t& step_count() { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Slot> slots_;
  int64_t t_ = 0;
};

}  // namespace geosyn

#endif  // GEOSYN_TRAIN_ADAM_H_
