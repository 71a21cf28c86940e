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
#include <iostream>
#include <sstream>
#include <vector>

#include "core/rng.h"
#include "doctest.h"
#include "metrics/metrics.h"

namespace geosyn {
namespace {

Tensor<int32_t> labels_from(std::vector<int32_t> v, int64_t h, int64_t w) {
  return Tensor<int32_t>::from({h, w}, std::move(v));
}

Tensor<int32_t> random_labels(Rng& rng, int64_t hw, int64_t classes) {
  Tensor<int32_t> t({hw, hw});
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<int32_t>(rng.uniform_int(classes));
  return t;
}

TEST_CASE("confusion: hand count, diagonal, errors") {
  ConfusionMatrix cm(2);
  cm.add(labels_from({0, 0, 1, 1}, 2, 2), labels_from({0, 1, 1, 1}, 2, 2));
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(1, 0) == 1);
  CHECK(cm.at(1, 1) == 2);
  CHECK(cm.at(0, 1) == 0);
  CHECK(cm.total() == 4);

  ConfusionMatrix diag(3);
  Rng rng(71);
  auto same = random_labels(rng, 8, 3);
  diag.add(same, same);
  for (int64_t r = 0; r < 3; ++r)
    for (int64_t p = 0; p < 3; ++p)
      if (r != p) CHECK(diag.at(r, p) == 0);
  CHECK(diag.total() == 64);

  ConfusionMatrix empty(4);
  CHECK(empty.total() == 0);
  CHECK_THROWS_AS(iou_miou_pixacc(empty), std::invalid_argument);

  CHECK_THROWS_AS(cm.add(labels_from({0}, 1, 1), labels_from({0, 0}, 1, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(cm.add(labels_from({5}, 1, 1), labels_from({0}, 1, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(ConfusionMatrix(0), std::invalid_argument);
}

TEST_CASE("iou and pixel accuracy: worked example, perfect, disjoint") {
  ConfusionMatrix cm(2);
  cm.add(labels_from({0, 0, 1, 1}, 1, 4), labels_from({0, 1, 1, 1}, 1, 4));
  SegScores s = iou_miou_pixacc(cm);
  CHECK(s.per_class[0].defined);
  CHECK(s.per_class[0].iou == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.per_class[1].iou == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(s.miou == doctest::Approx(7.0 / 12.0).epsilon(1e-12));
  CHECK(s.pix_acc == doctest::Approx(0.75).epsilon(1e-12));

  ConfusionMatrix perfect(3);
  Rng rng(72);
  auto same = random_labels(rng, 16, 3);
  perfect.add(same, same);
  SegScores ps = iou_miou_pixacc(perfect);
  CHECK(ps.miou == 1.0);
  CHECK(ps.pix_acc == 1.0);
  for (auto& k : ps.per_class)
    if (k.defined) CHECK(k.iou == 1.0);

  ConfusionMatrix disjoint(2);
  disjoint.add(labels_from({0, 0, 0, 0}, 2, 2),
               labels_from({1, 1, 1, 1}, 2, 2));
  SegScores ds = iou_miou_pixacc(disjoint);
  CHECK(ds.per_class[0].iou == 0.0);
  CHECK(ds.per_class[1].iou == 0.0);
  CHECK(ds.miou == 0.0);
  CHECK(ds.pix_acc == 0.0);
}

TEST_CASE("iou: zero-union classes are excluded, not zeroed") {
  // Class 2 never occurs on either side: undefined and left out of mIoU.
  ConfusionMatrix cm(3);
  cm.add(labels_from({0, 0, 1, 1}, 1, 4), labels_from({0, 1, 1, 1}, 1, 4));
  SegScores s = iou_miou_pixacc(cm);
  CHECK_FALSE(s.per_class[2].defined);
  CHECK(s.miou == doctest::Approx(7.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("dataset-level iou equals brute-force global counting") {
  const int64_t classes = 6;
  Rng rng(73);
  ConfusionMatrix cm(classes);
  std::vector<int64_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  int64_t correct = 0, pixels = 0;
  std::vector<ConfusionMatrix> parts;
  for (int round = 0; round < 1000; ++round) {
    auto pred = random_labels(rng, 16, classes);
    auto ref = random_labels(rng, 16, classes);
    cm.add(pred, ref);
    ConfusionMatrix one(classes);
    one.add(pred, ref);
    parts.push_back(one);
    for (int64_t i = 0; i < pred.numel(); ++i) {
      ++pixels;
      if (pred[i] == ref[i]) {
        ++correct;
        ++tp[pred[i]];
      } else {
        ++fp[pred[i]];
        ++fn[ref[i]];
      }
    }
  }
  SegScores s = iou_miou_pixacc(cm);
  double miou_oracle = 0.0;
  for (int64_t c = 0; c < classes; ++c) {
    REQUIRE(s.per_class[c].defined);
    double iou = static_cast<double>(tp[c]) /
                 static_cast<double>(tp[c] + fp[c] + fn[c]);
    CHECK(s.per_class[c].iou == iou);
    miou_oracle += iou;
  }
  CHECK(s.miou == miou_oracle / classes);
  CHECK(s.pix_acc ==
        static_cast<double>(correct) / static_cast<double>(pixels));

  // Accumulation commutes: reversing the tile order gives identical counts.
  ConfusionMatrix rev(classes);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it)
    rev.accumulate(*it);
  for (size_t i = 0; i < cm.counts.size(); ++i)
    CHECK(rev.counts[i] == cm.counts[i]);
}

TEST_CASE("scores are invariant under consistent class permutation") {
  const int64_t classes = 5;
  Rng rng(74);
  auto pred = random_labels(rng, 16, classes);
  auto ref = random_labels(rng, 16, classes);
  std::vector<int32_t> perm{3, 0, 4, 1, 2};

  ConfusionMatrix cm(classes), pm(classes);
  cm.add(pred, ref);
  auto mapped = [&](const Tensor<int32_t>& t) {
    Tensor<int32_t> out = t.clone();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = perm[out[i]];
    return out;
  };
  pm.add(mapped(pred), mapped(ref));
  SegScores a = iou_miou_pixacc(cm);
  SegScores b = iou_miou_pixacc(pm);
  CHECK(a.pix_acc == b.pix_acc);
  CHECK(a.miou == doctest::Approx(b.miou).epsilon(1e-12));
  for (int64_t c = 0; c < classes; ++c)
    CHECK(a.per_class[c].iou == b.per_class[perm[c]].iou);
}

TEST_CASE("moments: ddof=1 oracle and rank-deficiency warning") {
  auto feats = Tensor<float>::from({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
  Moments m = feature_moments(feats);
  CHECK(m.samples == 2);
  CHECK(m.mean[0] == 2.0);
  CHECK(m.mean[1] == 3.0);
  CHECK(m.cov[0] == 2.0);
  CHECK(m.cov[1] == 2.0);
  CHECK(m.cov[2] == 2.0);
  CHECK(m.cov[3] == 2.0);

  std::ostringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  auto thin = Tensor<float>::from({1, 3}, {1.0f, 2.0f, 3.0f});
  Moments tm = feature_moments(thin);
  std::cerr.rdbuf(old);
  CHECK(captured.str().find("rank deficient") != std::string::npos);
  for (int64_t i = 0; i < 9; ++i) CHECK(tm.cov[i] == 0.0);

  CHECK_THROWS_AS(feature_moments(Tensor<float>({0, 3})),
                  std::invalid_argument);
}

TEST_CASE("frechet distance: analytic values, symmetry, errors") {
  // Identical moments.
  auto mu = Tensor<double>::from({3}, {0.5, -1.0, 2.0});
  Tensor<double> cov({3, 3});
  cov[0] = 2.0;
  cov[4] = 1.0;
  cov[8] = 0.5;
  cov[1] = cov[3] = 0.3;
  CHECK(frechet_distance(mu, cov, mu, cov) <= 1e-6);

  // 1-D: N(0,1) vs N(1,1).
  auto m0 = Tensor<double>::from({1}, {0.0});
  auto m1 = Tensor<double>::from({1}, {1.0});
  auto c1 = Tensor<double>::from({1, 1}, {1.0});
  CHECK(frechet_distance(m0, c1, m1, c1) == doctest::Approx(1.0).epsilon(1e-12));

  // d-dim diagonal case: (0, I) vs (0, 4I) -> d.
  const int64_t d = 5;
  Tensor<double> zero({d});
  Tensor<double> eye({d, d}), four({d, d});
  for (int64_t i = 0; i < d; ++i) {
    eye[i * d + i] = 1.0;
    four[i * d + i] = 4.0;
  }
  CHECK(frechet_distance(zero, eye, zero, four) ==
        doctest::Approx(static_cast<double>(d)).epsilon(1e-9));

  // Symmetry on random positive semi-definite pairs.
  Rng rng(75);
  for (int rep = 0; rep < 5; ++rep) {
    const int64_t k = 4;
    Tensor<double> a({k, k}), b({k, k});
    Tensor<double> ra({k, k}), rb({k, k});
    rng.fill_normal(ra, 0.0, 1.0);
    rng.fill_normal(rb, 0.0, 1.0);
    for (int64_t i = 0; i < k; ++i)
      for (int64_t j = 0; j < k; ++j)
        for (int64_t t = 0; t < k; ++t) {
          a[i * k + j] += ra[i * k + t] * ra[j * k + t];
          b[i * k + j] += rb[i * k + t] * rb[j * k + t];
        }
    Tensor<double> ma({k}), mb({k});
    rng.fill_normal(ma, 0.0, 1.0);
    rng.fill_normal(mb, 0.0, 1.0);
    double ab = frechet_distance(ma, a, mb, b);
    double ba = frechet_distance(mb, b, ma, a);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
  }

  auto m2 = Tensor<double>::from({2}, {0.0, 0.0});
  auto c2 = Tensor<double>::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
  CHECK_THROWS_AS(frechet_distance(m0, c1, m2, c2), std::invalid_argument);
  CHECK_THROWS_AS(frechet_distance(m2, c1, m2, c2), std::invalid_argument);
}

}  // namespace
}  // namespace geosyn
