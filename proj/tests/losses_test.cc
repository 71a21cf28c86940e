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

#include "doctest.h"
#include "losses/losses.h"
#include "nn/layers.h"
#include "testutil.h"

namespace geosyn {
namespace {

using testutil::check_gradients;
using testutil::rand_var;

Var<double> const_scores(double v) {
  return make_var(Tensor<double>::full({2, 1, 5, 5}, v), false);
}

TEST_CASE("hinge losses match their closed forms") {
  auto real_good = const_scores(1.0);
  auto fake_good = const_scores(-1.0);
  auto zeros = const_scores(0.0);
  auto real_bad = const_scores(-1.0);
  auto fake_bad = const_scores(1.0);

  CHECK(std::abs(d_hinge<double>({real_good}, {fake_good})->value[0]) <= 1e-12);
  CHECK(std::abs(d_hinge<double>({zeros}, {zeros})->value[0] - 2.0) <= 1e-12);
  CHECK(std::abs(d_hinge<double>({real_bad}, {fake_bad})->value[0] - 4.0) <=
        1e-12);

  CHECK(std::abs(g_hinge<double>({zeros})->value[0]) <= 1e-12);
  CHECK(std::abs(g_hinge<double>({const_scores(2.0)})->value[0] + 2.0) <=
        1e-12);

  // Mixed per-element margins: mean(max(0, 1 - s)) over {2, 0} is 0.5.
  auto mixed = make_var(Tensor<double>::from({2}, {2.0, 0.0}), false);
  CHECK(std::abs(d_hinge<double>({mixed}, {fake_good})->value[0] - 0.5) <=
        1e-12);
  CHECK(d_hinge<double>({real_bad}, {fake_bad})->value[0] >= 0.0);
}

TEST_CASE("losses average over scales, so duplication is a no-op") {
  Rng rng(41);
  auto r = rand_var(rng, {1, 1, 7, 7}, -2.0, 2.0, false);
  auto f = rand_var(rng, {1, 1, 7, 7}, -2.0, 2.0, false);
  double d1 = d_hinge<double>({r}, {f})->value[0];
  double d2 = d_hinge<double>({r, r}, {f, f})->value[0];
  CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
  double g1 = g_hinge<double>({f})->value[0];
  double g2 = g_hinge<double>({f, f, f})->value[0];
  CHECK(g1 == doctest::Approx(g2).epsilon(1e-12));
}

TEST_CASE("feature matching distance and the combined objective") {
  Rng rng(42);
  auto a = rand_var(rng, {2, 4, 6, 6}, -1.0, 1.0, false);
  auto same = make_var(a->value.clone(), false);
  CHECK(feature_match<double>({{a}}, {{same}})->value[0] == 0.0);

  auto shifted = make_var(a->value.clone(), false);
  for (int64_t i = 0; i < shifted->value.numel(); ++i)
    shifted->value[i] += 0.5;
  CHECK(std::abs(feature_match<double>({{shifted}}, {{a}})->value[0] - 0.5) <=
        1e-12);

  // Two layers with offsets 1.0 and 0.0 average to 0.5.
  auto far = make_var(a->value.clone(), false);
  for (int64_t i = 0; i < far->value.numel(); ++i) far->value[i] += 1.0;
  CHECK(std::abs(feature_match<double>({{far, a}}, {{a, a}})->value[0] - 0.5) <=
        1e-12);

  // Zero-score fakes plus a 0.5 offset at weight 10 puts the total at 5.
  LossWeights w;
  auto total = g_total<double>({const_scores(0.0)}, {{shifted}}, {{a}}, w);
  CHECK(std::abs(total->value[0] - 5.0) <= 1e-12);
}

TEST_CASE("losses reject empty or mismatched structures") {
  auto s = const_scores(0.0);
  CHECK_THROWS_AS(d_hinge<double>({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(d_hinge<double>({s}, {}), std::invalid_argument);
  CHECK_THROWS_AS(g_hinge<double>({}), std::invalid_argument);
  CHECK_THROWS_AS(feature_match<double>({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(feature_match<double>({{s}}, {{s}, {s}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(feature_match<double>({{s, s}}, {{s}}),
                  std::invalid_argument);
}

// Two stacked convolutions standing in for a patch critic.
struct ToyCritic {
  struct Out {
    std::vector<Var<double>> features;
    Var<double> score;
  };

  ToyCritic(Rng& rng)
      : c1(rng, 2, 4, 3, 1, 1, PadMode::kZero, true, false),
        c2(rng, 4, 1, 3, 1, 1, PadMode::kZero, true, false) {}

  Out run(const Var<double>& x, const ForwardCtx& ctx) {
    auto h = leaky_relu(c1.forward(x, ctx), 0.2);
    Out out;
    out.features.push_back(h);
    out.score = c2.forward(h, ctx);
    return out;
  }

  Conv2dLayer<double> c1, c2;
};

TEST_CASE("finite differences validate both objectives end to end") {
  Rng rng(43);
  ToyCritic critic(rng);
  ForwardCtx eval;
  auto xr = rand_var(rng, {1, 2, 6, 6}, -1.0, 1.0);
  auto xf = rand_var(rng, {1, 2, 6, 6}, -1.0, 1.0);
  testutil::avoid_kinks(xr->value);
  testutil::avoid_kinks(xf->value);

  std::vector<Var<double>> params = {xr, xf, critic.c1.weight(),
                                     critic.c1.bias(), critic.c2.weight(),
                                     critic.c2.bias()};

  check_gradients(
      [&] {
        auto r = critic.run(xr, eval);
        auto f = critic.run(xf, eval);
        return d_hinge<double>({r.score}, {f.score});
      },
      params, 1e-6, 1e-6);

  // The real branch is a detached target, so freeze it as a constant; a
  // finite-difference probe would otherwise see the value dependence that the
  // tape deliberately ignores.
  auto r = critic.run(xr, eval);
  std::vector<Var<double>> target;
  for (const auto& feat : r.features)
    target.push_back(make_var(feat->value.clone(), false));
  std::vector<Var<double>> gen_params = {xf, critic.c1.weight(),
                                         critic.c1.bias(), critic.c2.weight(),
                                         critic.c2.bias()};
  LossWeights w;
  check_gradients(
      [&] {
        auto f = critic.run(xf, eval);
        return g_total<double>({f.score}, {f.features}, {target}, w);
      },
      gen_params, 1e-6, 1e-6);
}

}  // namespace
}  // namespace geosyn
