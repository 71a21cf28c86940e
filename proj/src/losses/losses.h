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

#ifndef GEOSYN_LOSSES_LOSSES_H_
#define GEOSYN_LOSSES_LOSSES_H_

#include <stdexcept>
#include <string>
#include <vector>

#include "core/ops.h"

namespace geosyn {

struct LossWeights {
  double lambda_fm = 10.0;
};

// Hinge discriminator loss, minimized form:
// mean_scales(mean(max(0, 1 - real))) + mean_scales(mean(max(0, 1 + fake))).
// Scores are one tensor per discriminator scale.
template <typename T>
Var<T> d_hinge(const std::vector<Var<T>>& real_scores,
               const std::vector<Var<T>>& fake_scores) {
  if (real_scores.empty() || fake_scores.empty())
    throw std::invalid_argument("d_hinge: empty score lists");
  Var<T> acc;
  for (const auto& r : real_scores) {
    auto term = mean_all(relu(add_scalar(mul_scalar(r, T(-1)), T(1))));
    acc = acc ? add(acc, term) : term;
  }
  acc = mul_scalar(acc, T(1) / static_cast<T>(real_scores.size()));
  Var<T> accf;
  for (const auto& f : fake_scores) {
    auto term = mean_all(relu(add_scalar(f, T(1))));
    accf = accf ? add(accf, term) : term;
  }
  accf = mul_scalar(accf, T(1) / static_cast<T>(fake_scores.size()));
  return add(acc, accf);
}

// Hinge generator term, minimized form: -mean over scales of mean(fake).
template <typename T>
Var<T> g_hinge(const std::vector<Var<T>>& fake_scores) {
  if (fake_scores.empty())
    throw std::invalid_argument("g_hinge: empty score list");
  Var<T> acc;
  for (const auto& f : fake_scores) {
    auto term = mean_all(f);
    acc = acc ? add(acc, term) : term;
  }
  return mul_scalar(acc, T(-1) / static_cast<T>(fake_scores.size()));
}

// Mean over all (scale, layer) pairs of the mean absolute difference between
// fake and real discriminator features. Real features are detached here, so
// the gradient reaches the generator only.
template <typename T>
Var<T> feature_match(const std::vector<std::vector<Var<T>>>& feats_fake,
                     const std::vector<std::vector<Var<T>>>& feats_real) {
  if (feats_fake.size() != feats_real.size())
    throw std::invalid_argument(
        "feature_match: scale count mismatch, fake " +
        std::to_string(feats_fake.size()) + " vs real " +
        std::to_string(feats_real.size()));
  if (feats_fake.empty())
    throw std::invalid_argument("feature_match: empty feature lists");
  Var<T> acc;
  int64_t terms = 0;
  for (size_t s = 0; s < feats_fake.size(); ++s) {
    if (feats_fake[s].size() != feats_real[s].size())
      throw std::invalid_argument(
          "feature_match: layer count mismatch at scale " + std::to_string(s) +
          ", fake " + std::to_string(feats_fake[s].size()) + " vs real " +
          std::to_string(feats_real[s].size()));
    for (size_t l = 0; l < feats_fake[s].size(); ++l) {
      auto term =
          mean_all(abs_val(sub(feats_fake[s][l], detach(feats_real[s][l]))));
      acc = acc ? add(acc, term) : term;
      ++terms;
    }
  }
  if (terms == 0)
    throw std::invalid_argument("feature_match: no feature layers");
  return mul_scalar(acc, T(1) / static_cast<T>(terms));
}

// Full generator objective: g_hinge + lambda_fm * feature_match.
template <typename T>
Var<T> g_total(const std::vector<Var<T>>& fake_scores,
               const std::vector<std::vector<Var<T>>>& feats_fake,
               const std::vector<std::vector<Var<T>>>& feats_real,
               const LossWeights& w) {
  auto fm = feature_match(feats_fake, feats_real);
  return add(g_hinge(fake_scores), mul_scalar(fm, static_cast<T>(w.lambda_fm)));
}

}  // namespace geosyn

#endif  // GEOSYN_LOSSES_LOSSES_H_
