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

#ifndef GEOSYN_NN_SPECTRAL_H_
#define GEOSYN_NN_SPECTRAL_H_

#include <cmath>
#include <stdexcept>

#include "core/tensor.h"

namespace geosyn {

namespace detail {

template <typename T>
void normalize_vec(T* x, int64_t n, T eps) {
  T nrm = T(0);
  for (int64_t i = 0; i < n; ++i) nrm += x[i] * x[i];
  nrm = std::sqrt(nrm) + eps;
  for (int64_t i = 0; i < n; ++i) x[i] /= nrm;
}

}  // namespace detail

// One half-step of the power iteration on W viewed as (dim0 x rest):
// v = normalize(W^T u), then (if update) u = normalize(W v). Returns v, the
// vector that pairs with the stored u in sigma = u^T W v.
template <typename T>
Tensor<T> spectral_power_iteration(const Tensor<T>& w, Tensor<T>& u,
                                   bool update, T eps = T(1e-12)) {
  int64_t rows = w.dim(0);
  int64_t cols = w.numel() / rows;
  if (u.numel() != rows)
    throw std::invalid_argument("spectral_power_iteration: u size mismatch");
  Tensor<T> v({cols});
  const T* pw = w.data();
  for (int64_t r = 0; r < rows; ++r) {
    T ur = u[r];
    for (int64_t c = 0; c < cols; ++c) v[c] += pw[r * cols + c] * ur;
  }
  detail::normalize_vec(v.data(), cols, eps);
  if (update) {
    for (int64_t r = 0; r < rows; ++r) {
      T acc = T(0);
      for (int64_t c = 0; c < cols; ++c) acc += pw[r * cols + c] * v[c];
      u[r] = acc;
    }
    detail::normalize_vec(u.data(), rows, eps);
  }
  return v;
}

template <typename T>
T spectral_sigma(const Tensor<T>& w, const Tensor<T>& u, const Tensor<T>& v) {
  int64_t rows = w.dim(0);
  int64_t cols = w.numel() / rows;
  const T* pw = w.data();
  T sigma = T(0);
  for (int64_t r = 0; r < rows; ++r) {
    T acc = T(0);
    for (int64_t c = 0; c < cols; ++c) acc += pw[r * cols + c] * v[c];
    sigma += u[r] * acc;
  }
  return sigma;
}

// One power-iteration update of u (in place) and the spectrally normalized
// weight W / (sigma + eps). The eps guard keeps an all-zero weight at zero
// instead of dividing by zero.
template <typename T>
Tensor<T> spectral_norm_step(const Tensor<T>& w, Tensor<T>& u,
                             T eps = T(1e-12)) {
  Tensor<T> v = spectral_power_iteration(w, u, /*update=*/true, eps);
  T sigma = spectral_sigma(w, u, v) + eps;
  Tensor<T> out(w.shape());
  const T* pw = w.data();
  T* po = out.data();
  for (int64_t i = 0; i < w.numel(); ++i) po[i] = pw[i] / sigma;
  return out;
}

template <typename T>
Tensor<T> make_spectral_u(Rng& rng, int64_t rows) {
  Tensor<T> u({rows});
  rng.fill_normal(u, T(0), T(1));
  detail::normalize_vec(u.data(), rows, T(1e-12));
  return u;
}

}  // namespace geosyn

#endif  // GEOSYN_NN_SPECTRAL_H_
