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

#ifndef GEOSYN_CORE_OPS_CONV_H_
#define GEOSYN_CORE_OPS_CONV_H_

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "core/autodiff.h"
#include "core/blas.h"
#include "core/tensor.h"

namespace geosyn {

inline int64_t conv_out_dim(int64_t n, int64_t k, int64_t stride, int64_t pad) {
  return (n + 2 * pad - k) / stride + 1;
}

namespace detail {

template <typename T>
void fill_padded(const T* x, T* padded, int64_t c, int64_t h, int64_t w,
                 int64_t p) {
  int64_t hp = h + 2 * p, wp = w + 2 * p;
  std::fill(padded, padded + c * hp * wp, T(0));
  for (int64_t ci = 0; ci < c; ++ci)
    for (int64_t hi = 0; hi < h; ++hi)
      std::memcpy(padded + (ci * hp + hi + p) * wp + p, x + (ci * h + hi) * w,
                  sizeof(T) * w);
}

// Writes im2col rows for output rows [oh0, oh0 + rows) into cols, which is
// (c*k*k) x (rows*wo) row-major.
template <typename T>
void im2col_chunk(const T* padded, T* cols, int64_t c, int64_t hp, int64_t wp,
                  int64_t k, int64_t stride, int64_t wo, int64_t oh0,
                  int64_t rows) {
  int64_t width = rows * wo;
  for (int64_t ci = 0; ci < c; ++ci)
    for (int64_t kh = 0; kh < k; ++kh)
      for (int64_t kw = 0; kw < k; ++kw) {
        T* dst = cols + ((ci * k + kh) * k + kw) * width;
        for (int64_t r = 0; r < rows; ++r) {
          const T* src = padded + (ci * hp + (oh0 + r) * stride + kh) * wp + kw;
          if (stride == 1) {
            std::memcpy(dst + r * wo, src, sizeof(T) * wo);
          } else {
            for (int64_t ow = 0; ow < wo; ++ow)
              dst[r * wo + ow] = src[ow * stride];
          }
        }
      }
}

template <typename T>
void col2im_chunk(const T* cols, T* padded, int64_t c, int64_t hp, int64_t wp,
                  int64_t k, int64_t stride, int64_t wo, int64_t oh0,
                  int64_t rows) {
  int64_t width = rows * wo;
  for (int64_t ci = 0; ci < c; ++ci)
    for (int64_t kh = 0; kh < k; ++kh)
      for (int64_t kw = 0; kw < k; ++kw) {
        const T* src = cols + ((ci * k + kh) * k + kw) * width;
        for (int64_t r = 0; r < rows; ++r) {
          T* dst = padded + (ci * hp + (oh0 + r) * stride + kh) * wp + kw;
          for (int64_t ow = 0; ow < wo; ++ow)
            dst[ow * stride] += src[r * wo + ow];
        }
      }
}

constexpr int64_t kIm2colBudgetBytes = 64ll << 20;

}  // namespace detail

// 2-d convolution, zero padding, square kernel. x [N,Cin,H,W], w
// [Cout,Cin,K,K], optional b [Cout]. Lowered to GEMM through an im2col buffer
// chunked over output rows to bound scratch memory.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b,
              int64_t stride, int64_t pad) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (xs.size() != 4 || ws.size() != 4)
    throw std::invalid_argument("conv2d: expected NCHW input and OIKK weight");
  if (ws[2] != ws[3])
    throw std::invalid_argument("conv2d: kernel must be square, got " +
                                w->value.shape_str());
  if (xs[1] != ws[1])
    throw std::invalid_argument("conv2d: input channels mismatch, input " +
                                x->value.shape_str() + " vs weight " +
                                w->value.shape_str());
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
  int64_t n = xs[0], cin = xs[1], h = xs[2], wd = xs[3];
  int64_t cout = ws[0], k = ws[2];
  if (b && b->value.numel() != cout)
    throw std::invalid_argument("conv2d: bias size mismatch");
  int64_t hp = h + 2 * pad, wp = wd + 2 * pad;
  if (hp < k || wp < k)
    throw std::invalid_argument("conv2d: kernel larger than padded input " +
                                x->value.shape_str());
  int64_t ho = conv_out_dim(h, k, stride, pad);
  int64_t wo = conv_out_dim(wd, k, stride, pad);
  int64_t ckk = cin * k * k;
  int64_t chunk_rows = std::max<int64_t>(
      1, detail::kIm2colBudgetBytes / static_cast<int64_t>(sizeof(T)) /
             std::max<int64_t>(1, ckk * wo));
  chunk_rows = std::min(chunk_rows, ho);

  Tensor<T> y({n, cout, ho, wo});
  {
    std::vector<T> padded(cin * hp * wp);
    std::vector<T> cols(ckk * chunk_rows * wo);
    for (int64_t ni = 0; ni < n; ++ni) {
      detail::fill_padded(x->value.data() + ni * cin * h * wd, padded.data(),
                          cin, h, wd, pad);
      T* ys = y.data() + ni * cout * ho * wo;
      for (int64_t oh0 = 0; oh0 < ho; oh0 += chunk_rows) {
        int64_t rows = std::min(chunk_rows, ho - oh0);
        detail::im2col_chunk(padded.data(), cols.data(), cin, hp, wp, k,
                             stride, wo, oh0, rows);
        gemm(false, false, cout, rows * wo, ckk, T(1), w->value.data(), ckk,
             cols.data(), rows * wo, T(0), ys + oh0 * wo, ho * wo);
      }
      if (b) {
        for (int64_t co = 0; co < cout; ++co) {
          T bv = b->value[co];
          T* row = ys + co * ho * wo;
          for (int64_t i = 0; i < ho * wo; ++i) row[i] += bv;
        }
      }
    }
  }

  auto out = make_var(std::move(y));
  bool need = b ? any_requires_grad<T>({&x, &w, &b})
                : any_requires_grad<T>({&x, &w});
  if (need) {
    out->requires_grad = true;
    out->parents = b ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
    Node<T>* o = out.get();
    out->backward = [o, x, w, b, n, cin, cout, h, wd, hp, wp, k, stride, pad,
                     ho, wo, ckk, chunk_rows]() {
      if (b && b->requires_grad) {
        b->ensure_grad();
        for (int64_t ni = 0; ni < n; ++ni)
          for (int64_t co = 0; co < cout; ++co) {
            const T* row = o->grad.data() + (ni * cout + co) * ho * wo;
            T acc = T(0);
            for (int64_t i = 0; i < ho * wo; ++i) acc += row[i];
            b->grad[co] += acc;
          }
      }
      bool need_dw = w->requires_grad;
      bool need_dx = x->requires_grad;
      if (!need_dw && !need_dx) return;
      if (need_dw) w->ensure_grad();
      if (need_dx) x->ensure_grad();
      std::vector<T> padded(cin * hp * wp);
      std::vector<T> cols(ckk * chunk_rows * wo);
      std::vector<T> dcols(need_dx ? ckk * chunk_rows * wo : 0);
      std::vector<T> dpadded(need_dx ? cin * hp * wp : 0);
      for (int64_t ni = 0; ni < n; ++ni) {
        if (need_dw)
          detail::fill_padded(x->value.data() + ni * cin * h * wd,
                              padded.data(), cin, h, wd, pad);
        if (need_dx) std::fill(dpadded.begin(), dpadded.end(), T(0));
        const T* gy = o->grad.data() + ni * cout * ho * wo;
        for (int64_t oh0 = 0; oh0 < ho; oh0 += chunk_rows) {
          int64_t rows = std::min(chunk_rows, ho - oh0);
          if (need_dw) {
            detail::im2col_chunk(padded.data(), cols.data(), cin, hp, wp, k,
                                 stride, wo, oh0, rows);
            gemm(false, true, cout, ckk, rows * wo, T(1), gy + oh0 * wo,
                 ho * wo, cols.data(), rows * wo, T(1), w->grad.data(), ckk);
          }
          if (need_dx) {
            gemm(true, false, ckk, rows * wo, cout, T(1), w->value.data(), ckk,
                 gy + oh0 * wo, ho * wo, T(0), dcols.data(), rows * wo);
            detail::col2im_chunk(dcols.data(), dpadded.data(), cin, hp, wp, k,
                                 stride, wo, oh0, rows);
          }
        }
        if (need_dx) {
          T* dx = x->grad.data() + ni * cin * h * wd;
          for (int64_t ci = 0; ci < cin; ++ci)
            for (int64_t hi = 0; hi < h; ++hi) {
              const T* src = dpadded.data() + (ci * hp + hi + pad) * wp + pad;
              T* dst = dx + (ci * h + hi) * wd;
              for (int64_t wi = 0; wi < wd; ++wi) dst[wi] += src[wi];
            }
        }
      }
    };
  }
  return out;
}

// Reflection padding that mirrors across the edge without repeating it;
// requires pad <= dim - 1.
template <typename T>
Var<T> pad_reflect(const Var<T>& x, int64_t pad) {
  const auto& s = x->value.shape();
  if (s.size() != 4) throw std::invalid_argument("pad_reflect: expected NCHW");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  if (pad >= h || pad >= w)
    throw std::invalid_argument("pad_reflect: pad too large for " +
                                x->value.shape_str());
  int64_t hp = h + 2 * pad, wp = w + 2 * pad;
  auto reflect = [pad](int64_t j, int64_t dim) {
    int64_t src = j - pad;
    if (src < 0) src = -src;
    if (src >= dim) src = 2 * dim - 2 - src;
    return src;
  };
  Tensor<T> y({n, c, hp, wp});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const T* xs = x->value.data() + nc * h * w;
    T* ys = y.data() + nc * hp * wp;
    for (int64_t hi = 0; hi < hp; ++hi) {
      int64_t sh = reflect(hi, h);
      for (int64_t wi = 0; wi < wp; ++wi)
        ys[hi * wp + wi] = xs[sh * w + reflect(wi, w)];
    }
  }
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Node<T>* o = out.get();
    out->backward = [o, x, reflect, n, c, h, w, hp, wp]() {
      x->ensure_grad();
      for (int64_t nc = 0; nc < n * c; ++nc) {
        const T* gs = o->grad.data() + nc * hp * wp;
        T* dx = x->grad.data() + nc * h * w;
        for (int64_t hi = 0; hi < hp; ++hi) {
          int64_t sh = reflect(hi, h);
          for (int64_t wi = 0; wi < wp; ++wi)
            dx[sh * w + reflect(wi, w)] += gs[hi * wp + wi];
        }
      }
    };
  }
  return out;
}

// Nearest-neighbor upsampling by a factor of 2.
template <typename T>
Var<T> upsample_nearest2(const Var<T>& x) {
  const auto& s = x->value.shape();
  if (s.size() != 4) throw std::invalid_argument("upsample_nearest2: expected NCHW");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  Tensor<T> y({n, c, 2 * h, 2 * w});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const T* xs = x->value.data() + nc * h * w;
    T* ys = y.data() + nc * 4 * h * w;
    for (int64_t oh = 0; oh < 2 * h; ++oh)
      for (int64_t ow = 0; ow < 2 * w; ++ow)
        ys[oh * 2 * w + ow] = xs[(oh / 2) * w + ow / 2];
  }
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Node<T>* o = out.get();
    out->backward = [o, x, n, c, h, w]() {
      x->ensure_grad();
      for (int64_t nc = 0; nc < n * c; ++nc) {
        const T* gs = o->grad.data() + nc * 4 * h * w;
        T* dx = x->grad.data() + nc * h * w;
        for (int64_t oh = 0; oh < 2 * h; ++oh)
          for (int64_t ow = 0; ow < 2 * w; ++ow)
            dx[(oh / 2) * w + ow / 2] += gs[oh * 2 * w + ow];
      }
    };
  }
  return out;
}

namespace detail {

// Index/weight tables for x2 bilinear interpolation with half-pixel centers
// (align_corners=false semantics).
inline void bilinear2_axis(int64_t dim, std::vector<int64_t>* i0,
                           std::vector<int64_t>* i1, std::vector<double>* frac) {
  i0->resize(2 * dim);
  i1->resize(2 * dim);
  frac->resize(2 * dim);
  for (int64_t o = 0; o < 2 * dim; ++o) {
    double src = (o + 0.5) / 2.0 - 0.5;
    src = std::max(0.0, std::min(static_cast<double>(dim - 1), src));
    int64_t lo = static_cast<int64_t>(std::floor(src));
    (*i0)[o] = lo;
    (*i1)[o] = std::min(lo + 1, dim - 1);
    (*frac)[o] = src - lo;
  }
}

}  // namespace detail

// Bilinear upsampling by a factor of 2, half-pixel centers.
template <typename T>
Var<T> upsample_bilinear2(const Var<T>& x) {
  const auto& s = x->value.shape();
  if (s.size() != 4) throw std::invalid_argument("upsample_bilinear2: expected NCHW");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  std::vector<int64_t> h0, h1, w0, w1;
  std::vector<double> fh, fw;
  detail::bilinear2_axis(h, &h0, &h1, &fh);
  detail::bilinear2_axis(w, &w0, &w1, &fw);
  Tensor<T> y({n, c, 2 * h, 2 * w});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const T* xs = x->value.data() + nc * h * w;
    T* ys = y.data() + nc * 4 * h * w;
    for (int64_t oh = 0; oh < 2 * h; ++oh) {
      double a = fh[oh];
      for (int64_t ow = 0; ow < 2 * w; ++ow) {
        double bfr = fw[ow];
        double v = (1 - a) * (1 - bfr) * xs[h0[oh] * w + w0[ow]] +
                   (1 - a) * bfr * xs[h0[oh] * w + w1[ow]] +
                   a * (1 - bfr) * xs[h1[oh] * w + w0[ow]] +
                   a * bfr * xs[h1[oh] * w + w1[ow]];
        ys[oh * 2 * w + ow] = static_cast<T>(v);
      }
    }
  }
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Node<T>* o = out.get();
    out->backward = [o, x, n, c, h, w, h0, h1, w0, w1, fh, fw]() {
      x->ensure_grad();
      for (int64_t nc = 0; nc < n * c; ++nc) {
        const T* gs = o->grad.data() + nc * 4 * h * w;
        T* dx = x->grad.data() + nc * h * w;
        for (int64_t oh = 0; oh < 2 * h; ++oh) {
          double a = fh[oh];
          for (int64_t ow = 0; ow < 2 * w; ++ow) {
            double bfr = fw[ow];
            T g = gs[oh * 2 * w + ow];
            dx[h0[oh] * w + w0[ow]] += static_cast<T>((1 - a) * (1 - bfr)) * g;
            dx[h0[oh] * w + w1[ow]] += static_cast<T>((1 - a) * bfr) * g;
            dx[h1[oh] * w + w0[ow]] += static_cast<T>(a * (1 - bfr)) * g;
            dx[h1[oh] * w + w1[ow]] += static_cast<T>(a * bfr) * g;
          }
        }
      }
    };
  }
  return out;
}

// 2x2 max pooling with stride 2; requires even spatial dims.
template <typename T>
Var<T> maxpool2(const Var<T>& x) {
  const auto& s = x->value.shape();
  if (s.size() != 4) throw std::invalid_argument("maxpool2: expected NCHW");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("maxpool2: spatial dims must be even, got " +
                                x->value.shape_str());
  int64_t ho = h / 2, wo = w / 2;
  Tensor<T> y({n, c, ho, wo});
  Tensor<int32_t> arg({n, c, ho, wo});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const T* xs = x->value.data() + nc * h * w;
    T* ys = y.data() + nc * ho * wo;
    int32_t* as = arg.data() + nc * ho * wo;
    for (int64_t oh = 0; oh < ho; ++oh)
      for (int64_t ow = 0; ow < wo; ++ow) {
        int64_t base = 2 * oh * w + 2 * ow;
        int64_t best = base;
        T bv = xs[base];
        for (int64_t dh = 0; dh < 2; ++dh)
          for (int64_t dw = 0; dw < 2; ++dw) {
            int64_t idx = base + dh * w + dw;
            if (xs[idx] > bv) {
              bv = xs[idx];
              best = idx;
            }
          }
        ys[oh * wo + ow] = bv;
        as[oh * wo + ow] = static_cast<int32_t>(best);
      }
  }
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Node<T>* o = out.get();
    out->backward = [o, x, arg, n, c, h, w, ho, wo]() {
      x->ensure_grad();
      for (int64_t nc = 0; nc < n * c; ++nc) {
        const T* gs = o->grad.data() + nc * ho * wo;
        const int32_t* as = arg.data() + nc * ho * wo;
        T* dx = x->grad.data() + nc * h * w;
        for (int64_t i = 0; i < ho * wo; ++i) dx[as[i]] += gs[i];
      }
    };
  }
  return out;
}

// 3x3 average pooling, stride 2, pad 1, excluding padded cells from the
// divisor. Matches the downsampler used between discriminator scales.
template <typename T>
Var<T> avgpool_3x3s2(const Var<T>& x) {
  const auto& s = x->value.shape();
  if (s.size() != 4) throw std::invalid_argument("avgpool_3x3s2: expected NCHW");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  int64_t ho = conv_out_dim(h, 3, 2, 1), wo = conv_out_dim(w, 3, 2, 1);
  Tensor<T> y({n, c, ho, wo});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const T* xs = x->value.data() + nc * h * w;
    T* ys = y.data() + nc * ho * wo;
    for (int64_t oh = 0; oh < ho; ++oh) {
      int64_t r0 = std::max<int64_t>(0, 2 * oh - 1);
      int64_t r1 = std::min(h, 2 * oh + 2);
      for (int64_t ow = 0; ow < wo; ++ow) {
        int64_t c0 = std::max<int64_t>(0, 2 * ow - 1);
        int64_t c1 = std::min(w, 2 * ow + 2);
        T acc = T(0);
        for (int64_t r = r0; r < r1; ++r)
          for (int64_t cc = c0; cc < c1; ++cc) acc += xs[r * w + cc];
        ys[oh * wo + ow] = acc / static_cast<T>((r1 - r0) * (c1 - c0));
      }
    }
  }
  auto out = make_var(std::move(y));
  if (any_requires_grad<T>({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Node<T>* o = out.get();
    out->backward = [o, x, n, c, h, w, ho, wo]() {
      x->ensure_grad();
      for (int64_t nc = 0; nc < n * c; ++nc) {
        const T* gs = o->grad.data() + nc * ho * wo;
        T* dx = x->grad.data() + nc * h * w;
        for (int64_t oh = 0; oh < ho; ++oh) {
          int64_t r0 = std::max<int64_t>(0, 2 * oh - 1);
          int64_t r1 = std::min(h, 2 * oh + 2);
          for (int64_t ow = 0; ow < wo; ++ow) {
            int64_t c0 = std::max<int64_t>(0, 2 * ow - 1);
            int64_t c1 = std::min(w, 2 * ow + 2);
            T g = gs[oh * wo + ow] / static_cast<T>((r1 - r0) * (c1 - c0));
            for (int64_t r = r0; r < r1; ++r)
              for (int64_t cc = c0; cc < c1; ++cc) dx[r * w + cc] += g;
          }
        }
      }
    };
  }
  return out;
}

// Plain (non-differentiated) nearest-neighbor resize for constant inputs such
// as segmentation maps.
template <typename T>
Tensor<T> nearest_resize(const Tensor<T>& x, int64_t ho, int64_t wo) {
  if (x.rank() != 4) throw std::invalid_argument("nearest_resize: expected NCHW");
  int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (ho < 1 || wo < 1) throw std::invalid_argument("nearest_resize: bad target");
  Tensor<T> y({n, c, ho, wo});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const T* xs = x.data() + nc * h * w;
    T* ys = y.data() + nc * ho * wo;
    for (int64_t oh = 0; oh < ho; ++oh) {
      int64_t sh = std::min(h - 1, oh * h / ho);
      for (int64_t ow = 0; ow < wo; ++ow)
        ys[oh * wo + ow] = xs[sh * w + std::min(w - 1, ow * w / wo)];
    }
  }
  return y;
}

// One-hot encoding of an integer label map [N,H,W] -> [N,C,H,W].
template <typename T>
Tensor<T> one_hot(const Tensor<int32_t>& labels, int64_t num_classes) {
  if (labels.rank() != 3) throw std::invalid_argument("one_hot: expected NHW labels");
  int64_t n = labels.dim(0), h = labels.dim(1), w = labels.dim(2);
  Tensor<T> y({n, num_classes, h, w});
  y.fill(T(0));
  int64_t plane = h * w;
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t i = 0; i < plane; ++i) {
      int32_t lab = labels[ni * plane + i];
      if (lab < 0 || lab >= num_classes)
        throw std::invalid_argument(
            "one_hot: label " + std::to_string(lab) + " outside [0, " +
            std::to_string(num_classes) + ") at sample " + std::to_string(ni) +
            " pixel (" + std::to_string(i / w) + ", " + std::to_string(i % w) +
            ")");
      y[(ni * num_classes + lab) * plane + i] = T(1);
    }
  return y;
}

}  // namespace geosyn

#endif  // GEOSYN_CORE_OPS_CONV_H_
