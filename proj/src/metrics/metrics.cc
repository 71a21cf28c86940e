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

#include "metrics/metrics.h"

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

namespace geosyn {

ConfusionMatrix::ConfusionMatrix(int64_t c) : classes(c) {
  if (c < 1) throw std::invalid_argument("confusion: classes < 1");
  counts.assign(static_cast<size_t>(c * c), 0);
}

void ConfusionMatrix::add(const Tensor<int32_t>& pred,
                          const Tensor<int32_t>& ref) {
  if (!pred.same_shape(ref))
    throw std::invalid_argument("confusion: prediction shape " +
                                pred.shape_str() + " does not match reference " +
                                ref.shape_str());
  for (int64_t i = 0; i < pred.numel(); ++i) {
    int32_t p = pred[i], r = ref[i];
    if (p < 0 || p >= classes || r < 0 || r >= classes)
      throw std::invalid_argument("confusion: label outside [0, " +
                                  std::to_string(classes) + ")");
    ++counts[static_cast<size_t>(r) * classes + p];
  }
}

void ConfusionMatrix::accumulate(const ConfusionMatrix& other) {
  if (other.classes != classes)
    throw std::invalid_argument("confusion: class count mismatch");
  for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

int64_t ConfusionMatrix::total() const {
  int64_t t = 0;
  for (int64_t c : counts) t += c;
  return t;
}

SegScores iou_miou_pixacc(const ConfusionMatrix& cm) {
  int64_t c = cm.classes;
  SegScores s;
  s.per_class.resize(static_cast<size_t>(c));
  double sum = 0.0;
  int64_t defined = 0;
  int64_t diag = 0;
  for (int64_t k = 0; k < c; ++k) {
    int64_t tp = cm.at(k, k);
    diag += tp;
    int64_t fp = 0, fn = 0;
    for (int64_t j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += cm.at(j, k);
      fn += cm.at(k, j);
    }
    int64_t uni = tp + fp + fn;
    if (uni > 0) {
      s.per_class[k].defined = true;
      s.per_class[k].iou = static_cast<double>(tp) / static_cast<double>(uni);
      sum += s.per_class[k].iou;
      ++defined;
    }
  }
  if (defined == 0)
    throw std::invalid_argument(
        "metrics: every class has an empty union; nothing to score");
  s.miou = sum / static_cast<double>(defined);
  s.pix_acc = static_cast<double>(diag) / static_cast<double>(cm.total());
  return s;
}

Moments feature_moments(const Tensor<float>& feats) {
  if (feats.rank() != 2)
    throw std::invalid_argument("moments: features must be [N,d]");
  int64_t n = feats.dim(0), d = feats.dim(1);
  if (n < 1) throw std::invalid_argument("moments: no samples");
  if (n < d)
    std::cerr << "warning: " << n << " samples for " << d
              << "-dimensional features; covariance is rank deficient\n";
  Moments m;
  m.samples = n;
  m.mean = Tensor<double>({d});
  m.cov = Tensor<double>({d, d});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j)
      m.mean[j] += static_cast<double>(feats[i * d + j]);
  for (int64_t j = 0; j < d; ++j) m.mean[j] /= static_cast<double>(n);
  double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t a = 0; a < d; ++a) {
      double da = static_cast<double>(feats[i * d + a]) - m.mean[a];
      for (int64_t b = a; b < d; ++b) {
        double db = static_cast<double>(feats[i * d + b]) - m.mean[b];
        m.cov[a * d + b] += da * db / denom;
      }
    }
  for (int64_t a = 0; a < d; ++a)
    for (int64_t b = 0; b < a; ++b) m.cov[a * d + b] = m.cov[b * d + a];
  return m;
}

double frechet_distance(const Tensor<double>& mu1, const Tensor<double>& cov1,
                        const Tensor<double>& mu2, const Tensor<double>& cov2) {
  if (mu1.rank() != 1 || mu2.rank() != 1 || cov1.rank() != 2 ||
      cov2.rank() != 2)
    throw std::invalid_argument("frechet: means are [d], covariances [d,d]");
  int64_t d = mu1.dim(0);
  if (mu2.dim(0) != d || cov1.dim(0) != d || cov1.dim(1) != d ||
      cov2.dim(0) != d || cov2.dim(1) != d)
    throw std::invalid_argument(
        "frechet: dimension mismatch between the two moment sets");

  using Mat = Eigen::MatrixXd;
  Eigen::Map<const Mat> c1(cov1.data(), d, d), c2(cov2.data(), d, d);
  Mat s1 = (c1 + c1.transpose()) / 2.0;
  Mat s2 = (c2 + c2.transpose()) / 2.0;
  Mat prod = s1 * s2;
  Mat sym = (prod + prod.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("frechet: eigendecomposition failed");
  double tr_sqrt = 0.0;
  for (int64_t i = 0; i < d; ++i) {
    double ev = eig.eigenvalues()(i);
    if (ev > 0.0) tr_sqrt += std::sqrt(ev);
  }
  double mean_term = 0.0;
  for (int64_t i = 0; i < d; ++i) {
    double diff = mu1[i] - mu2[i];
    mean_term += diff * diff;
  }
  double total = mean_term + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
  if (total < 0.0) {
    if (total < -1e-6)
      std::cerr << "warning: Frechet distance " << total
                << " clamped to zero; moments are numerically inconsistent\n";
    total = 0.0;
  }
  return total;
}

double frechet_distance(const Moments& a, const Moments& b) {
  return frechet_distance(a.mean, a.cov, b.mean, b.cov);
}

}  // namespace geosyn
