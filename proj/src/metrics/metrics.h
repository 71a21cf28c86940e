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

#ifndef GEOSYN_METRICS_METRICS_H_
#define GEOSYN_METRICS_METRICS_H_

#include <cstdint>
#include <vector>

#include "core/tensor.h"

namespace geosyn {

// Pixel counts accumulated over a whole dataset; rows index the reference
// label, columns the prediction. Metrics are computed from the accumulated
// matrix, not averaged per tile.
struct ConfusionMatrix {
  int64_t classes = 0;
  std::vector<int64_t> counts;  // row-major classes x classes

  explicit ConfusionMatrix(int64_t c);

  // Element-wise count update from one prediction/reference pair of any
  // common shape. Throws on shape mismatch or labels outside [0, classes).
  void add(const Tensor<int32_t>& pred, const Tensor<int32_t>& ref);
  void accumulate(const ConfusionMatrix& other);

  int64_t at(int64_t ref, int64_t pred) const {
    return counts[ref * classes + pred];
  }
  int64_t total() const;
};

// IoU of a class whose union is empty is undefined and excluded from the
// mean rather than counted as zero.
struct ClassIou {
  bool defined = false;
  double iou = 0.0;
};

struct SegScores {
  std::vector<ClassIou> per_class;
  double miou = 0.0;
  double pix_acc = 0.0;
};

// Throws when the matrix is empty or every class is undefined.
SegScores iou_miou_pixacc(const ConfusionMatrix& cm);

// Sample mean and unbiased covariance (ddof = 1) of row-vector features.
struct Moments {
  Tensor<double> mean;  // [d]
  Tensor<double> cov;   // [d,d]
  int64_t samples = 0;
};

// feats: [N,d]. Warns to stderr when N < d (rank-deficient covariance);
// a single sample yields a zero covariance.
Moments feature_moments(const Tensor<float>& feats);

// ||mu1-mu2||^2 + Tr(S1 + S2 - 2 sqrt(S1 S2)). Covariances are symmetrized
// on input; the square root comes from the eigendecomposition of the
// symmetrized product with negative eigenvalues clamped at zero. A tiny
// negative total is clamped to zero, with a warning if it falls below -1e-6.
double frechet_distance(const Tensor<double>& mu1, const Tensor<double>& cov1,
                        const Tensor<double>& mu2, const Tensor<double>& cov2);
double frechet_distance(const Moments& a, const Moments& b);

}  // namespace geosyn

#endif  // GEOSYN_METRICS_METRICS_H_
