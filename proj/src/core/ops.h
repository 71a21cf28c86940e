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

#ifndef GEOSYN_CORE_OPS_H_
#define GEOSYN_CORE_OPS_H_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "core/autodiff.h"
#include "core/tensor.h"

namespace geosyn {

namespace detail {

template <typename T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (!a->value.same_shape(b->value))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a->value.shape_str() + " vs " +
                                b->value.shape_str());
}

}  // namespace detail

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a, b, "add");
  Tensor<T> y(a->value.shape());
  const T* pa = a->value.data();
  const T* pb = b->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i) py[i] = pa[i] + pb[i];
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a, b};
    Node<T>* o = out.get();
    out->backward = [o, a, b]() {
      if (a->requires_grad) a->add_grad(o->grad);
      if (b->requires_grad) b->add_grad(o->grad);
    };
  }
  return out;
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a, b, "sub");
  Tensor<T> y(a->value.shape());
  const T* pa = a->value.data();
  const T* pb = b->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i) py[i] = pa[i] - pb[i];
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a, b};
    Node<T>* o = out.get();
    out->backward = [o, a, b]() {
      if (a->requires_grad) a->add_grad(o->grad);
      if (b->requires_grad) {
        b->ensure_grad();
        T* db = b->grad.data();
        const T* g = o->grad.data();
        for (int64_t i = 0; i < o->grad.numel(); ++i) db[i] -= g[i];
      }
    };
  }
  return out;
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a, b, "mul");
  Tensor<T> y(a->value.shape());
  const T* pa = a->value.data();
  const T* pb = b->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i) py[i] = pa[i] * pb[i];
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a, b};
    Node<T>* o = out.get();
    out->backward = [o, a, b]() {
      const T* g = o->grad.data();
      if (a->requires_grad) {
        a->ensure_grad();
        T* da = a->grad.data();
        const T* vb = b->value.data();
        for (int64_t i = 0; i < o->grad.numel(); ++i) da[i] += g[i] * vb[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        T* db = b->grad.data();
        const T* va = a->value.data();
        for (int64_t i = 0; i < o->grad.numel(); ++i) db[i] += g[i] * va[i];
      }
    };
  }
  return out;
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  Tensor<T> y(a->value.shape());
  const T* pa = a->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i) py[i] = pa[i] + s;
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Node<T>* o = out.get();
    out->backward = [o, a]() { a->add_grad(o->grad); };
  }
  return out;
}

template <typename T>
Var<T> mul_scalar(const Var<T>& a, T s) {
  Tensor<T> y(a->value.shape());
  const T* pa = a->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i) py[i] = pa[i] * s;
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Node<T>* o = out.get();
    out->backward = [o, a, s]() {
      a->ensure_grad();
      T* da = a->grad.data();
      const T* g = o->grad.data();
      for (int64_t i = 0; i < o->grad.numel(); ++i) da[i] += g[i] * s;
    };
  }
  return out;
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> y(a->value.shape());
  const T* pa = a->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i) py[i] = pa[i] > T(0) ? pa[i] : T(0);
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Node<T>* o = out.get();
    out->backward = [o, a]() {
      a->ensure_grad();
      T* da = a->grad.data();
      const T* g = o->grad.data();
      const T* x = a->value.data();
      for (int64_t i = 0; i < o->grad.numel(); ++i)
        if (x[i] > T(0)) da[i] += g[i];
    };
  }
  return out;
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
  Tensor<T> y(a->value.shape());
  const T* pa = a->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i)
    py[i] = pa[i] > T(0) ? pa[i] : slope * pa[i];
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Node<T>* o = out.get();
    out->backward = [o, a, slope]() {
      a->ensure_grad();
      T* da = a->grad.data();
      const T* g = o->grad.data();
      const T* x = a->value.data();
      for (int64_t i = 0; i < o->grad.numel(); ++i)
        da[i] += x[i] > T(0) ? g[i] : slope * g[i];
    };
  }
  return out;
}

// tanh with the output clamped to the largest representable value strictly
// inside (-1, 1), so downstream range contracts hold exactly in float.
template <typename T>
Var<T> tanh_strict(const Var<T>& a) {
  const T bound = std::nextafter(T(1), T(0));
  Tensor<T> y(a->value.shape());
  const T* pa = a->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i) {
    T t = std::tanh(pa[i]);
    py[i] = std::min(bound, std::max(-bound, t));
  }
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Node<T>* o = out.get();
    out->backward = [o, a]() {
      a->ensure_grad();
      T* da = a->grad.data();
      const T* g = o->grad.data();
      const T* t = o->value.data();
      for (int64_t i = 0; i < o->grad.numel(); ++i)
        da[i] += g[i] * (T(1) - t[i] * t[i]);
    };
  }
  return out;
}

template <typename T>
Var<T> abs_val(const Var<T>& a) {
  Tensor<T> y(a->value.shape());
  const T* pa = a->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i) py[i] = std::abs(pa[i]);
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Node<T>* o = out.get();
    out->backward = [o, a]() {
      a->ensure_grad();
      T* da = a->grad.data();
      const T* g = o->grad.data();
      const T* x = a->value.data();
      for (int64_t i = 0; i < o->grad.numel(); ++i) {
        if (x[i] > T(0))
          da[i] += g[i];
        else if (x[i] < T(0))
          da[i] -= g[i];
      }
    };
  }
  return out;
}

template <typename T>
Var<T> sum_all(const Var<T>& a) {
  T s = T(0);
  const T* pa = a->value.data();
  for (int64_t i = 0; i < a->value.numel(); ++i) s += pa[i];
  auto out = make_var(Tensor<T>::from({1}, {s}));
  if (any_requires_grad<T>({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Node<T>* o = out.get();
    out->backward = [o, a]() {
      a->ensure_grad();
      T g = o->grad[0];
      T* da = a->grad.data();
      for (int64_t i = 0; i < a->grad.numel(); ++i) da[i] += g;
    };
  }
  return out;
}

template <typename T>
Var<T> mean_all(const Var<T>& a) {
  int64_t n = a->value.numel();
  if (n == 0) throw std::invalid_argument("mean_all: empty tensor");
  T s = T(0);
  const T* pa = a->value.data();
  for (int64_t i = 0; i < n; ++i) s += pa[i];
  auto out = make_var(Tensor<T>::from({1}, {s / static_cast<T>(n)}));
  if (any_requires_grad<T>({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Node<T>* o = out.get();
    out->backward = [o, a, n]() {
      a->ensure_grad();
      T g = o->grad[0] / static_cast<T>(n);
      T* da = a->grad.data();
      for (int64_t i = 0; i < n; ++i) da[i] += g;
    };
  }
  return out;
}

// NCHW concatenation along the channel dimension.
template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const auto& sa = a->value.shape();
  const auto& sb = b->value.shape();
  if (sa.size() != 4 || sb.size() != 4 || sa[0] != sb[0] || sa[2] != sb[2] ||
      sa[3] != sb[3])
    throw std::invalid_argument("concat_channels: incompatible shapes " +
                                a->value.shape_str() + " vs " +
                                b->value.shape_str());
  int64_t n = sa[0], ca = sa[1], cb = sb[1], h = sa[2], w = sa[3];
  Tensor<T> y({n, ca + cb, h, w});
  int64_t plane = h * w;
  for (int64_t i = 0; i < n; ++i) {
    std::copy(a->value.data() + i * ca * plane,
              a->value.data() + (i + 1) * ca * plane,
              y.data() + i * (ca + cb) * plane);
    std::copy(b->value.data() + i * cb * plane,
              b->value.data() + (i + 1) * cb * plane,
              y.data() + (i * (ca + cb) + ca) * plane);
  }
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a, b};
    Node<T>* o = out.get();
    out->backward = [o, a, b, n, ca, cb, plane]() {
      const T* g = o->grad.data();
      if (a->requires_grad) {
        a->ensure_grad();
        T* da = a->grad.data();
        for (int64_t i = 0; i < n; ++i) {
          const T* gs = g + i * (ca + cb) * plane;
          T* ds = da + i * ca * plane;
          for (int64_t j = 0; j < ca * plane; ++j) ds[j] += gs[j];
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        T* db = b->grad.data();
        for (int64_t i = 0; i < n; ++i) {
          const T* gs = g + (i * (ca + cb) + ca) * plane;
          T* ds = db + i * cb * plane;
          for (int64_t j = 0; j < cb * plane; ++j) ds[j] += gs[j];
        }
      }
    };
  }
  return out;
}

template <typename T>
Var<T> reshape(const Var<T>& a, std::vector<int64_t> shape) {
  auto out = make_var(a->value.reshaped(std::move(shape)));
  if (any_requires_grad<T>({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Node<T>* o = out.get();
    out->backward = [o, a]() {
      a->add_grad(o->grad.reshaped(a->value.shape()));
    };
  }
  return out;
}

// Batch normalization without learned affine parameters. Statistics are taken
// over (N, H, W) per channel; this is exactly the synchronized-normalization
// semantics when the step batch is processed in one pass. Running statistics
// are updated in training mode and used verbatim in eval mode.
template <typename T>
Var<T> batch_norm(const Var<T>& x, Tensor<T>* running_mean,
                  Tensor<T>* running_var, bool training, T momentum = T(0.1),
                  T eps = T(1e-5)) {
  const auto& s = x->value.shape();
  if (s.size() != 4) throw std::invalid_argument("batch_norm: expected NCHW");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  int64_t red = n * h * w;
  int64_t plane = h * w;
  Tensor<T> y(s);
  Tensor<T> invstd({c});

  if (training) {
    Tensor<T> mean({c});
    for (int64_t ci = 0; ci < c; ++ci) {
      T sum = T(0);
      for (int64_t ni = 0; ni < n; ++ni) {
        const T* p = x->value.data() + (ni * c + ci) * plane;
        for (int64_t i = 0; i < plane; ++i) sum += p[i];
      }
      T mu = sum / static_cast<T>(red);
      T var = T(0);
      for (int64_t ni = 0; ni < n; ++ni) {
        const T* p = x->value.data() + (ni * c + ci) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          T d = p[i] - mu;
          var += d * d;
        }
      }
      var /= static_cast<T>(red);
      mean[ci] = mu;
      invstd[ci] = T(1) / std::sqrt(var + eps);
      if (running_mean && running_var) {
        T unbiased = red > 1 ? var * static_cast<T>(red) / static_cast<T>(red - 1) : var;
        (*running_mean)[ci] = (T(1) - momentum) * (*running_mean)[ci] + momentum * mu;
        (*running_var)[ci] = (T(1) - momentum) * (*running_var)[ci] + momentum * unbiased;
      }
      for (int64_t ni = 0; ni < n; ++ni) {
        const T* p = x->value.data() + (ni * c + ci) * plane;
        T* q = y.data() + (ni * c + ci) * plane;
        for (int64_t i = 0; i < plane; ++i) q[i] = (p[i] - mu) * invstd[ci];
      }
    }
  } else {
    if (!running_mean || !running_var)
      throw std::invalid_argument("batch_norm: eval mode needs running stats");
    for (int64_t ci = 0; ci < c; ++ci) {
      T mu = (*running_mean)[ci];
      invstd[ci] = T(1) / std::sqrt((*running_var)[ci] + eps);
      for (int64_t ni = 0; ni < n; ++ni) {
        const T* p = x->value.data() + (ni * c + ci) * plane;
        T* q = y.data() + (ni * c + ci) * plane;
        for (int64_t i = 0; i < plane; ++i) q[i] = (p[i] - mu) * invstd[ci];
      }
    }
  }

  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Node<T>* o = out.get();
    if (training) {
      // out->value doubles as xhat since there is no affine stage
      out->backward = [o, x, invstd, n, c, plane, red]() {
        x->ensure_grad();
        const T* g = o->grad.data();
        const T* xh = o->value.data();
        T* dx = x->grad.data();
        for (int64_t ci = 0; ci < c; ++ci) {
          T gsum = T(0), gxsum = T(0);
          for (int64_t ni = 0; ni < n; ++ni) {
            int64_t base = (ni * c + ci) * plane;
            for (int64_t i = 0; i < plane; ++i) {
              gsum += g[base + i];
              gxsum += g[base + i] * xh[base + i];
            }
          }
          T gmean = gsum / static_cast<T>(red);
          T gxmean = gxsum / static_cast<T>(red);
          for (int64_t ni = 0; ni < n; ++ni) {
            int64_t base = (ni * c + ci) * plane;
            for (int64_t i = 0; i < plane; ++i)
              dx[base + i] +=
                  invstd[ci] * (g[base + i] - gmean - xh[base + i] * gxmean);
          }
        }
      };
    } else {
      out->backward = [o, x, invstd, n, c, plane]() {
        x->ensure_grad();
        const T* g = o->grad.data();
        T* dx = x->grad.data();
        for (int64_t ci = 0; ci < c; ++ci)
          for (int64_t ni = 0; ni < n; ++ni) {
            int64_t base = (ni * c + ci) * plane;
            for (int64_t i = 0; i < plane; ++i)
              dx[base + i] += g[base + i] * invstd[ci];
          }
      };
    }
  }
  return out;
}

// Instance normalization without affine parameters; statistics per (n, c)
// over the spatial extent, in training and eval alike.
template <typename T>
Var<T> instance_norm(const Var<T>& x, T eps = T(1e-5)) {
  const auto& s = x->value.shape();
  if (s.size() != 4) throw std::invalid_argument("instance_norm: expected NCHW");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  int64_t plane = h * w;
  Tensor<T> y(s);
  Tensor<T> invstd({n, c});
  for (int64_t k = 0; k < n * c; ++k) {
    const T* p = x->value.data() + k * plane;
    T sum = T(0);
    for (int64_t i = 0; i < plane; ++i) sum += p[i];
    T mu = sum / static_cast<T>(plane);
    T var = T(0);
    for (int64_t i = 0; i < plane; ++i) {
      T d = p[i] - mu;
      var += d * d;
    }
    var /= static_cast<T>(plane);
    T is = T(1) / std::sqrt(var + eps);
    invstd[k] = is;
    T* q = y.data() + k * plane;
    for (int64_t i = 0; i < plane; ++i) q[i] = (p[i] - mu) * is;
  }
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Node<T>* o = out.get();
    out->backward = [o, x, invstd, n, c, plane]() {
      x->ensure_grad();
      const T* g = o->grad.data();
      const T* xh = o->value.data();
      T* dx = x->grad.data();
      for (int64_t k = 0; k < n * c; ++k) {
        int64_t base = k * plane;
        T gsum = T(0), gxsum = T(0);
        for (int64_t i = 0; i < plane; ++i) {
          gsum += g[base + i];
          gxsum += g[base + i] * xh[base + i];
        }
        T gmean = gsum / static_cast<T>(plane);
        T gxmean = gxsum / static_cast<T>(plane);
        for (int64_t i = 0; i < plane; ++i)
          dx[base + i] +=
              invstd[k] * (g[base + i] - gmean - xh[base + i] * gxmean);
      }
    };
  }
  return out;
}

// Mean softmax cross entropy over all pixels; logits [N,C,H,W], labels
// [N,H,W] int32 in [0, C).
template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, const Tensor<int32_t>& labels) {
  const auto& s = logits->value.shape();
  if (s.size() != 4) throw std::invalid_argument("softmax_cross_entropy: expected NCHW logits");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  if (labels.rank() != 3 || labels.dim(0) != n || labels.dim(1) != h ||
      labels.dim(2) != w)
    throw std::invalid_argument("softmax_cross_entropy: label shape mismatch");
  int64_t px = n * h * w;
  int64_t plane = h * w;
  Tensor<T> probs(s);
  double loss = 0.0;
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t i = 0; i < plane; ++i) {
      int32_t lab = labels[ni * plane + i];
      if (lab < 0 || lab >= c)
        throw std::invalid_argument("softmax_cross_entropy: label " +
                                    std::to_string(lab) + " outside [0, " +
                                    std::to_string(c) + ")");
      T m = logits->value[(ni * c) * plane + i];
      for (int64_t ci = 1; ci < c; ++ci)
        m = std::max(m, logits->value[(ni * c + ci) * plane + i]);
      double denom = 0.0;
      for (int64_t ci = 0; ci < c; ++ci)
        denom += std::exp(static_cast<double>(logits->value[(ni * c + ci) * plane + i] - m));
      double lse = static_cast<double>(m) + std::log(denom);
      for (int64_t ci = 0; ci < c; ++ci)
        probs[(ni * c + ci) * plane + i] = static_cast<T>(std::exp(
            static_cast<double>(logits->value[(ni * c + ci) * plane + i]) - lse));
      loss += lse - static_cast<double>(logits->value[(ni * c + lab) * plane + i]);
    }
  }
  auto out = make_var(Tensor<T>::from({1}, {static_cast<T>(loss / px)}));
  if (any_requires_grad<T>({&logits})) {
    out->requires_grad = true;
    out->parents = {logits};
    Node<T>* o = out.get();
    out->backward = [o, logits, labels, probs, n, c, plane, px]() {
      logits->ensure_grad();
      T g = o->grad[0] / static_cast<T>(px);
      T* dl = logits->grad.data();
      for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t i = 0; i < plane; ++i) {
          int32_t lab = labels[ni * plane + i];
          for (int64_t ci = 0; ci < c; ++ci) {
            T p = probs[(ni * c + ci) * plane + i];
            dl[(ni * c + ci) * plane + i] += g * (p - (ci == lab ? T(1) : T(0)));
          }
        }
    };
  }
  return out;
}

// sigma = u^T W v with W viewed as (dim0 x rest); u, v are constants on the
// tape, so gradients flow through W only. Used by spectral normalization.
template <typename T>
Var<T> matvec_sigma(const Var<T>& w, const Tensor<T>& u, const Tensor<T>& v) {
  int64_t rows = w->value.dim(0);
  int64_t cols = w->value.numel() / rows;
  if (u.numel() != rows || v.numel() != cols)
    throw std::invalid_argument("matvec_sigma: u/v sizes do not match W view");
  T sigma = T(0);
  const T* pw = w->value.data();
  for (int64_t r = 0; r < rows; ++r) {
    T acc = T(0);
    for (int64_t cc = 0; cc < cols; ++cc) acc += pw[r * cols + cc] * v[cc];
    sigma += u[r] * acc;
  }
  auto out = make_var(Tensor<T>::from({1}, {sigma}));
  if (any_requires_grad<T>({&w})) {
    out->requires_grad = true;
    out->parents = {w};
    Node<T>* o = out.get();
    out->backward = [o, w, u, v, rows, cols]() {
      w->ensure_grad();
      T g = o->grad[0];
      T* dw = w->grad.data();
      for (int64_t r = 0; r < rows; ++r) {
        T gu = g * u[r];
        for (int64_t cc = 0; cc < cols; ++cc) dw[r * cols + cc] += gu * v[cc];
      }
    };
  }
  return out;
}

// y = w / s where s is a scalar node.
template <typename T>
Var<T> div_by_scalar(const Var<T>& w, const Var<T>& s) {
  if (s->value.numel() != 1)
    throw std::invalid_argument("div_by_scalar: divisor must be scalar");
  T sv = s->value[0];
  Tensor<T> y(w->value.shape());
  const T* pw = w->value.data();
  T* py = y.data();
  for (int64_t i = 0; i < y.numel(); ++i) py[i] = pw[i] / sv;
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&w, &s})) {
    out->requires_grad = true;
    out->parents = {w, s};
    Node<T>* o = out.get();
    out->backward = [o, w, s, sv]() {
      const T* g = o->grad.data();
      if (w->requires_grad) {
        w->ensure_grad();
        T* dw = w->grad.data();
        for (int64_t i = 0; i < o->grad.numel(); ++i) dw[i] += g[i] / sv;
      }
      if (s->requires_grad) {
        s->ensure_grad();
        T acc = T(0);
        const T* py = o->value.data();
        for (int64_t i = 0; i < o->grad.numel(); ++i) acc += g[i] * py[i];
        s->grad[0] -= acc / sv;
      }
    };
  }
  return out;
}

}  // namespace geosyn

#endif  // GEOSYN_CORE_OPS_H_
