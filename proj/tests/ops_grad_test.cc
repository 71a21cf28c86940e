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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "core/ops.h"
#include "core/ops_conv.h"
#include "doctest.h"
#include "testutil.h"

namespace geosyn {
namespace {

using testutil::avoid_kinks;
using testutil::check_gradients;
using testutil::rand_var;
using testutil::rand_weights;
using testutil::weighted_sum;

// Direct sliding-window convolution; deliberately a different algorithm from
// the im2col/GEMM path it validates.
Tensor<double> conv2d_direct(const Tensor<double>& x, const Tensor<double>& w,
                             const Tensor<double>* b, int64_t stride,
                             int64_t pad) {
  int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  int64_t cout = w.dim(0), k = w.dim(2);
  int64_t ho = conv_out_dim(h, k, stride, pad);
  int64_t wo = conv_out_dim(wd, k, stride, pad);
  Tensor<double> y({n, cout, ho, wo});
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t co = 0; co < cout; ++co)
      for (int64_t oh = 0; oh < ho; ++oh)
        for (int64_t ow = 0; ow < wo; ++ow) {
          double acc = b ? (*b)[co] : 0.0;
          for (int64_t ci = 0; ci < cin; ++ci)
            for (int64_t kh = 0; kh < k; ++kh)
              for (int64_t kw = 0; kw < k; ++kw) {
                int64_t ih = oh * stride + kh - pad;
                int64_t iw = ow * stride + kw - pad;
                if (ih < 0 || ih >= h || iw < 0 || iw >= wd) continue;
                acc += x.at4(ni, ci, ih, iw) * w.at4(co, ci, kh, kw);
              }
          y.at4(ni, co, oh, ow) = acc;
        }
  return y;
}

TEST_CASE("elementwise forward values") {
  auto a = make_var(Tensor<double>::from({4}, {1.0, -2.0, 0.5, 3.0}));
  auto b = make_var(Tensor<double>::from({4}, {0.5, 1.0, -1.0, 2.0}));
  auto s = add(a, b);
  CHECK(s->value[1] == doctest::Approx(-1.0));
  auto d = sub(a, b);
  CHECK(d->value[3] == doctest::Approx(1.0));
  auto m = mul(a, b);
  CHECK(m->value[0] == doctest::Approx(0.5));
  auto r = relu(a);
  CHECK(r->value[1] == 0.0);
  CHECK(r->value[0] == 1.0);
  auto l = leaky_relu(a, 0.2);
  CHECK(l->value[1] == doctest::Approx(-0.4));
  auto ab = abs_val(a);
  CHECK(ab->value[1] == 2.0);
  CHECK(mean_all(a)->value[0] == doctest::Approx(0.625));
  CHECK(sum_all(a)->value[0] == doctest::Approx(2.5));

  auto big = make_var(Tensor<double>::from({2}, {50.0, -50.0}));
  auto t = tanh_strict(big);
  CHECK(t->value[0] < 1.0);
  CHECK(t->value[1] > -1.0);

  auto bigf = make_var(Tensor<float>::from({2}, {50.0f, -50.0f}));
  auto tf = tanh_strict(bigf);
  CHECK(tf->value[0] < 1.0f);
  CHECK(tf->value[1] > -1.0f);
}

TEST_CASE("elementwise gradients") {
  Rng rng(11);
  auto a = rand_var(rng, {2, 3}, -2.0, 2.0);
  auto b = rand_var(rng, {2, 3}, -2.0, 2.0);
  avoid_kinks(a->value);
  avoid_kinks(b->value);
  auto w = rand_weights(rng, 6);

  check_gradients([&] { return weighted_sum(add(a, b), w); }, {a, b});
  check_gradients([&] { return weighted_sum(sub(a, b), w); }, {a, b});
  check_gradients([&] { return weighted_sum(mul(a, b), w); }, {a, b});
  check_gradients([&] { return weighted_sum(add_scalar(a, 0.7), w); }, {a});
  check_gradients([&] { return weighted_sum(mul_scalar(a, -1.3), w); }, {a});
  check_gradients([&] { return weighted_sum(relu(a), w); }, {a});
  check_gradients([&] { return weighted_sum(leaky_relu(a, 0.2), w); }, {a});
  check_gradients([&] { return weighted_sum(tanh_strict(a), w); }, {a});
  check_gradients([&] { return weighted_sum(abs_val(a), w); }, {a});
  check_gradients([&] { return sum_all(a); }, {a});
  check_gradients([&] { return mean_all(mul(a, b)); }, {a, b});
}

TEST_CASE("concat and reshape") {
  Rng rng(12);
  auto a = rand_var(rng, {2, 3, 2, 2}, -1.0, 1.0);
  auto b = rand_var(rng, {2, 2, 2, 2}, -1.0, 1.0);
  auto c = concat_channels(a, b);
  CHECK(c->value.dim(1) == 5);
  CHECK(c->value.at4(1, 0, 1, 1) == a->value.at4(1, 0, 1, 1));
  CHECK(c->value.at4(1, 4, 0, 1) == b->value.at4(1, 1, 0, 1));
  CHECK_THROWS_AS(concat_channels(a, rand_var(rng, {2, 2, 3, 2}, 0, 1)),
                  std::invalid_argument);

  auto w = rand_weights(rng, 40);
  check_gradients([&] { return weighted_sum(concat_channels(a, b), w); },
                  {a, b});
  auto w2 = rand_weights(rng, 24);
  check_gradients(
      [&] { return weighted_sum(reshape(a, {6, 4}), w2); }, {a});
}

TEST_CASE("batch norm statistics and gradients") {
  Rng rng(13);
  int64_t n = 3, c = 2, h = 4, w = 5;
  auto x = rand_var(rng, {n, c, h, w}, -2.0, 3.0);
  Tensor<double> rm({c});
  Tensor<double> rv({c});
  rm.fill(0.0);
  rv.fill(1.0);

  auto y = batch_norm(x, &rm, &rv, /*training=*/true);
  int64_t red = n * h * w;
  for (int64_t ci = 0; ci < c; ++ci) {
    double mean = 0.0, var = 0.0;
    for (int64_t ni = 0; ni < n; ++ni)
      for (int64_t i = 0; i < h * w; ++i)
        mean += y->value[(ni * c + ci) * h * w + i];
    mean /= red;
    for (int64_t ni = 0; ni < n; ++ni)
      for (int64_t i = 0; i < h * w; ++i) {
        double d = y->value[(ni * c + ci) * h * w + i] - mean;
        var += d * d;
      }
    var /= red;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }

  // Running statistics after one step from (0, 1) with momentum 0.1.
  for (int64_t ci = 0; ci < c; ++ci) {
    double mean = 0.0, var = 0.0;
    for (int64_t ni = 0; ni < n; ++ni)
      for (int64_t i = 0; i < h * w; ++i)
        mean += x->value[(ni * c + ci) * h * w + i];
    mean /= red;
    for (int64_t ni = 0; ni < n; ++ni)
      for (int64_t i = 0; i < h * w; ++i) {
        double d = x->value[(ni * c + ci) * h * w + i] - mean;
        var += d * d;
      }
    var /= red;
    double unbiased = var * red / (red - 1);
    CHECK(rm[ci] == doctest::Approx(0.1 * mean).epsilon(1e-12));
    CHECK(rv[ci] == doctest::Approx(0.9 + 0.1 * unbiased).epsilon(1e-12));
  }

  // Eval mode applies the running statistics verbatim.
  auto ye = batch_norm(x, &rm, &rv, /*training=*/false);
  for (int64_t ci = 0; ci < c; ++ci) {
    double expect = (x->value.at4(0, ci, 1, 2) - rm[ci]) / std::sqrt(rv[ci] + 1e-5);
    CHECK(ye->value.at4(0, ci, 1, 2) == doctest::Approx(expect).epsilon(1e-12));
  }

  auto wts = rand_weights(rng, n * c * h * w);
  check_gradients(
      [&] {
        Tensor<double> m2 = rm.clone(), v2 = rv.clone();
        return weighted_sum(batch_norm(x, &m2, &v2, true), wts);
      },
      {x}, 1e-6, 5e-6);
  check_gradients(
      [&] { return weighted_sum(batch_norm(x, &rm, &rv, false), wts); }, {x});
}

TEST_CASE("instance norm statistics and gradients") {
  Rng rng(14);
  int64_t n = 2, c = 3, h = 4, w = 4;
  auto x = rand_var(rng, {n, c, h, w}, -1.0, 4.0);
  auto y = instance_norm(x);
  for (int64_t k = 0; k < n * c; ++k) {
    double mean = 0.0, var = 0.0;
    for (int64_t i = 0; i < h * w; ++i) mean += y->value[k * h * w + i];
    mean /= h * w;
    for (int64_t i = 0; i < h * w; ++i) {
      double d = y->value[k * h * w + i] - mean;
      var += d * d;
    }
    var /= h * w;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
  auto wts = rand_weights(rng, n * c * h * w);
  check_gradients([&] { return weighted_sum(instance_norm(x), wts); }, {x},
                  1e-6, 5e-6);
}

TEST_CASE("softmax cross entropy") {
  Rng rng(15);
  int64_t n = 2, c = 4, h = 3, w = 3;
  auto logits = rand_var(rng, {n, c, h, w}, -2.0, 2.0);
  Tensor<int32_t> labels({n, h, w});
  for (int64_t i = 0; i < labels.numel(); ++i)
    labels[i] = static_cast<int32_t>(rng.uniform_int(c));

  auto loss = softmax_cross_entropy(logits, labels);
  double expect = 0.0;
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t i = 0; i < h * w; ++i) {
      double denom = 0.0;
      for (int64_t ci = 0; ci < c; ++ci)
        denom += std::exp(logits->value[(ni * c + ci) * h * w + i]);
      double p = std::exp(logits->value[(ni * c + labels[ni * h * w + i]) * h * w + i]) / denom;
      expect += -std::log(p);
    }
  expect /= n * h * w;
  CHECK(loss->value[0] == doctest::Approx(expect).epsilon(1e-12));

  auto uniform = make_var(Tensor<double>({1, 5, 2, 2}), true);
  uniform->value.fill(0.3);
  Tensor<int32_t> lab2({1, 2, 2});
  lab2.fill(2);
  CHECK(softmax_cross_entropy(uniform, lab2)->value[0] ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));

  Tensor<int32_t> bad({n, h, w});
  bad.fill(static_cast<int32_t>(c));
  CHECK_THROWS_AS(softmax_cross_entropy(logits, bad), std::invalid_argument);

  check_gradients([&] { return softmax_cross_entropy(logits, labels); },
                  {logits});
}

TEST_CASE("matvec sigma and div by scalar") {
  Rng rng(16);
  auto w = rand_var(rng, {3, 2, 2, 2}, -1.0, 1.0);
  Tensor<double> u({3});
  Tensor<double> v({8});
  rng.fill_uniform(u, -1.0, 1.0);
  rng.fill_uniform(v, -1.0, 1.0);

  auto sig = matvec_sigma(w, u, v);
  double expect = 0.0;
  for (int64_t r = 0; r < 3; ++r)
    for (int64_t cc = 0; cc < 8; ++cc)
      expect += u[r] * w->value[r * 8 + cc] * v[cc];
  CHECK(sig->value[0] == doctest::Approx(expect).epsilon(1e-12));

  check_gradients([&] { return matvec_sigma(w, u, v); }, {w});

  auto s = make_var(Tensor<double>::from({1}, {1.7}), true);
  auto wts = rand_weights(rng, 24);
  check_gradients([&] { return weighted_sum(div_by_scalar(w, s), wts); },
                  {w, s});
  // Chained as in spectral normalization: y = w / (u^T w v).
  check_gradients(
      [&] { return weighted_sum(div_by_scalar(w, matvec_sigma(w, u, v)), wts); },
      {w});
}

TEST_CASE("conv2d forward matches direct convolution") {
  Rng rng(17);
  struct Cfg {
    std::vector<int64_t> xs, ws;
    int64_t stride, pad;
  };
  std::vector<Cfg> cfgs = {
      {{2, 3, 6, 7}, {4, 3, 3, 3}, 1, 1},
      {{1, 2, 9, 8}, {3, 2, 4, 4}, 2, 2},
      {{1, 1, 8, 8}, {2, 1, 7, 7}, 1, 3},
      {{2, 4, 5, 5}, {3, 4, 1, 1}, 1, 0},
      {{1, 2, 7, 7}, {2, 2, 3, 3}, 2, 1},
  };
  for (const auto& cfg : cfgs) {
    auto x = rand_var(rng, cfg.xs, -1.0, 1.0, false);
    auto w = rand_var(rng, cfg.ws, -1.0, 1.0, false);
    auto b = rand_var(rng, {cfg.ws[0]}, -0.5, 0.5, false);
    auto y = conv2d(x, w, b, cfg.stride, cfg.pad);
    Tensor<double> ref = conv2d_direct(x->value, w->value, &b->value,
                                       cfg.stride, cfg.pad);
    REQUIRE(y->value.same_shape(ref));
    for (int64_t i = 0; i < ref.numel(); ++i)
      CHECK(y->value[i] == doctest::Approx(ref[i]).epsilon(1e-10));
  }

  // 1x1 identity kernel passes the input through.
  auto x = rand_var(rng, {1, 1, 4, 4}, -1.0, 1.0, false);
  auto wid = make_var(Tensor<double>::from({1, 1, 1, 1}, {1.0}));
  auto y = conv2d(x, wid, Var<double>(), 1, 0);
  for (int64_t i = 0; i < 16; ++i) CHECK(y->value[i] == x->value[i]);

  auto wbad = rand_var(rng, {2, 3, 3, 3}, -1.0, 1.0, false);
  CHECK_THROWS_AS(conv2d(x, wbad, Var<double>(), 1, 1), std::invalid_argument);
}

TEST_CASE("conv2d gradients") {
  Rng rng(18);
  struct Cfg {
    std::vector<int64_t> xs, ws;
    int64_t stride, pad;
    bool bias;
  };
  std::vector<Cfg> cfgs = {
      {{2, 3, 5, 6}, {4, 3, 3, 3}, 1, 1, true},
      {{1, 2, 7, 6}, {3, 2, 4, 4}, 2, 2, true},
      {{2, 4, 4, 4}, {3, 4, 1, 1}, 1, 0, false},
      {{1, 1, 7, 7}, {2, 1, 7, 7}, 1, 3, true},
  };
  for (const auto& cfg : cfgs) {
    auto x = rand_var(rng, cfg.xs, -1.0, 1.0);
    auto w = rand_var(rng, cfg.ws, -1.0, 1.0);
    auto b = cfg.bias ? rand_var(rng, {cfg.ws[0]}, -0.5, 0.5) : Var<double>();
    auto y0 = conv2d(x, w, b, cfg.stride, cfg.pad);
    auto wts = rand_weights(rng, y0->value.numel());
    std::vector<Var<double>> inputs = {x, w};
    if (b) inputs.push_back(b);
    check_gradients(
        [&] { return weighted_sum(conv2d(x, w, b, cfg.stride, cfg.pad), wts); },
        inputs, 1e-6, 5e-6);
  }
}

TEST_CASE("pad reflect") {
  auto x = make_var(
      Tensor<double>::from({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}), true);
  auto y = pad_reflect(x, 1);
  REQUIRE(y->value.dim(2) == 5);
  CHECK(y->value.at4(0, 0, 0, 0) == 5.0);
  CHECK(y->value.at4(0, 0, 0, 1) == 4.0);
  CHECK(y->value.at4(0, 0, 1, 0) == 2.0);
  CHECK(y->value.at4(0, 0, 4, 4) == 5.0);
  CHECK(y->value.at4(0, 0, 2, 2) == 5.0);
  CHECK_THROWS_AS(pad_reflect(x, 3), std::invalid_argument);

  Rng rng(19);
  auto x2 = rand_var(rng, {1, 2, 4, 5}, -1.0, 1.0);
  for (int64_t p : {1, 2}) {
    auto y2 = pad_reflect(x2, p);
    auto wts = rand_weights(rng, y2->value.numel());
    check_gradients([&] { return weighted_sum(pad_reflect(x2, p), wts); },
                    {x2});
  }
}

TEST_CASE("upsampling") {
  auto x = make_var(Tensor<double>::from({1, 1, 2, 2}, {1, 2, 3, 4}), true);
  auto yn = upsample_nearest2(x);
  CHECK(yn->value.at4(0, 0, 0, 1) == 1.0);
  CHECK(yn->value.at4(0, 0, 1, 2) == 2.0);
  CHECK(yn->value.at4(0, 0, 3, 3) == 4.0);

  auto yb = upsample_bilinear2(x);
  CHECK(yb->value.at4(0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(yb->value.at4(0, 0, 0, 1) == doctest::Approx(1.25));
  CHECK(yb->value.at4(0, 0, 0, 2) == doctest::Approx(1.75));
  CHECK(yb->value.at4(0, 0, 0, 3) == doctest::Approx(2.0));
  CHECK(yb->value.at4(0, 0, 1, 1) == doctest::Approx(1.75));

  Rng rng(20);
  auto x2 = rand_var(rng, {2, 3, 3, 4}, -1.0, 1.0);
  auto wts = rand_weights(rng, 2 * 3 * 6 * 8);
  check_gradients([&] { return weighted_sum(upsample_nearest2(x2), wts); },
                  {x2});
  check_gradients([&] { return weighted_sum(upsample_bilinear2(x2), wts); },
                  {x2});
}

TEST_CASE("maxpool2") {
  auto x = make_var(
      Tensor<double>::from({1, 1, 2, 4}, {1, 5, 2, 0, 3, 4, 1, 7}), true);
  auto y = maxpool2(x);
  CHECK(y->value.at4(0, 0, 0, 0) == 5.0);
  CHECK(y->value.at4(0, 0, 0, 1) == 7.0);
  auto odd = make_var(Tensor<double>({1, 1, 3, 4}));
  CHECK_THROWS_AS(maxpool2(odd), std::invalid_argument);

  Rng rng(21);
  auto x2 = rand_var(rng, {2, 2, 4, 6}, -1.0, 1.0);
  auto wts = rand_weights(rng, 2 * 2 * 2 * 3);
  check_gradients([&] { return weighted_sum(maxpool2(x2), wts); }, {x2});
}

TEST_CASE("avgpool 3x3 stride 2") {
  Rng rng(22);
  for (auto dims : std::vector<std::vector<int64_t>>{{1, 2, 5, 6}, {2, 1, 4, 4},
                                                     {1, 1, 7, 9}}) {
    auto x = rand_var(rng, dims, -1.0, 1.0);
    auto y = avgpool_3x3s2(x);
    int64_t h = dims[2], w = dims[3];
    int64_t ho = conv_out_dim(h, 3, 2, 1), wo = conv_out_dim(w, 3, 2, 1);
    REQUIRE(y->value.dim(2) == ho);
    REQUIRE(y->value.dim(3) == wo);
    // Independent recompute with explicit window clipping.
    for (int64_t nc = 0; nc < dims[0] * dims[1]; ++nc)
      for (int64_t oh = 0; oh < ho; ++oh)
        for (int64_t ow = 0; ow < wo; ++ow) {
          double acc = 0.0;
          int64_t cnt = 0;
          for (int64_t r = 2 * oh - 1; r <= 2 * oh + 1; ++r)
            for (int64_t cc = 2 * ow - 1; cc <= 2 * ow + 1; ++cc) {
              if (r < 0 || r >= h || cc < 0 || cc >= w) continue;
              acc += x->value[nc * h * w + r * w + cc];
              ++cnt;
            }
          CHECK(y->value[nc * ho * wo + oh * wo + ow] ==
                doctest::Approx(acc / cnt).epsilon(1e-12));
        }
    auto wts = rand_weights(rng, y->value.numel());
    check_gradients([&] { return weighted_sum(avgpool_3x3s2(x), wts); }, {x});
  }
  // The corner window covers exactly 4 in-bounds cells.
  auto x4 = make_var(Tensor<double>::from({1, 1, 2, 2}, {1, 2, 3, 4}), false);
  CHECK(avgpool_3x3s2(x4)->value[0] == doctest::Approx(2.5));
}

TEST_CASE("nearest resize and one hot") {
  Tensor<double> x({1, 1, 4, 4});
  for (int64_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i);
  Tensor<double> y = nearest_resize(x, 2, 2);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 2.0);
  CHECK(y[2] == 8.0);
  CHECK(y[3] == 10.0);
  Tensor<double> up = nearest_resize(x, 8, 8);
  CHECK(up.at4(0, 0, 7, 7) == 15.0);
  CHECK(up.at4(0, 0, 1, 0) == 0.0);

  Tensor<int32_t> labels({1, 2, 2});
  labels[0] = 0;
  labels[1] = 2;
  labels[2] = 1;
  labels[3] = 2;
  Tensor<float> oh = one_hot<float>(labels, 3);
  CHECK(oh.at4(0, 0, 0, 0) == 1.0f);
  CHECK(oh.at4(0, 2, 0, 1) == 1.0f);
  CHECK(oh.at4(0, 1, 1, 0) == 1.0f);
  CHECK(oh.at4(0, 0, 1, 1) == 0.0f);
  float colsum = oh.at4(0, 0, 1, 1) + oh.at4(0, 1, 1, 1) + oh.at4(0, 2, 1, 1);
  CHECK(colsum == 1.0f);
  labels[0] = 3;
  CHECK_THROWS_AS(one_hot<float>(labels, 3), std::invalid_argument);
}

TEST_CASE("backward accumulates across shared subexpressions") {
  // y = a*a + a, dy/da = 2a + 1.
  auto a = make_var(Tensor<double>::from({1}, {3.0}), true);
  auto y = add(mul(a, a), a);
  backward(y);
  CHECK(a->grad[0] == doctest::Approx(7.0));

  // Detached branches contribute no gradient.
  a->zero_grad();
  auto y2 = mul(a, detach(a));
  backward(y2);
  CHECK(a->grad[0] == doctest::Approx(3.0));
}

}  // namespace
}  // namespace geosyn
