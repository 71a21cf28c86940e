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

#ifndef GEOSYN_SEG_SEGMENTER_H_
#define GEOSYN_SEG_SEGMENTER_H_

#include <memory>
#include <string>
#include <vector>

#include "data/dataset.h"
#include "io/checkpoint.h"
#include "nn/unet.h"
#include "train/adam.h"

namespace geosyn {

// Evaluation-side U-Net: trained on real images with cross entropy, then
// used for inference and for the intermediate features behind the Frechet
// distance. It never touches the adversarial machinery.
struct SegConfig {
  UNetConfig unet;
  double lr = 2e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int64_t epochs = 100;
  int64_t batch_size = 32;
  int64_t crop = 256;
  uint64_t seed = 1234;
  int64_t checkpoint_every = 10;  // epochs
  int64_t log_every = 50;        // steps
  int64_t workers = 1;
  LoadOptions data;

  void validate() const;
  nlohmann::json to_json() const;
  static SegConfig from_json(const nlohmann::json& j);
};

class SegTrainer {
 public:
  explicit SegTrainer(const SegConfig& cfg);

  SegTrainer(const SegTrainer&) = delete;
  SegTrainer& operator=(const SegTrainer&) = delete;

  static std::unique_ptr<SegTrainer> from_checkpoint(const std::string& path);

  // One cross-entropy step; returns the batch loss.
  double train_step(const Batch& batch);

  // Trains the remaining epochs on the manifest's train split, appending to
  // <run_dir>/curve.csv; returns the path of <run_dir>/ckpt_final.geosynck.
  std::string fit(const Manifest& manifest, const std::string& run_dir);

  void save_checkpoint(const std::string& path);
  void load_checkpoint(const std::string& path);

  // Per-pixel argmax. Accepts [C,H,W] -> [H,W] or [N,C,H,W] -> [N,H,W];
  // frozen statistics, so the result is independent of batch packing.
  Tensor<int32_t> segment(const Tensor<float>& image);

  // Mean-pooled bottleneck activations, [N, feature_dim] (a lone [C,H,W]
  // image yields [1, feature_dim]).
  Tensor<float> features(const Tensor<float>& image);

  const SegConfig& config() const { return cfg_; }
  UNet<float>& net() { return net_; }
  int64_t epoch() const { return epoch_; }
  int64_t global_step() const { return global_step_; }
  // Classes never seen in the training labels, filled in by fit().
  const std::vector<int64_t>& absent_classes() const { return absent_; }

 private:
  SegConfig cfg_;
  Rng rng_;
  UNet<float> net_;
  StateDict<float> sd_;
  Adam<float> opt_;
  int64_t epoch_ = 0;
  int64_t global_step_ = 0;
  std::vector<int64_t> absent_;
};

}  // namespace geosyn

#endif  // GEOSYN_SEG_SEGMENTER_H_
