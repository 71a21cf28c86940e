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

#ifndef GEOSYN_TRAIN_TRAINER_H_
#define GEOSYN_TRAIN_TRAINER_H_

#include <memory>
#include <string>

#include "data/dataset.h"
#include "io/checkpoint.h"
#include "losses/losses.h"
#include "nn/discriminator.h"
#include "nn/generator.h"
#include "train/adam.h"

namespace geosyn {

struct TrainConfig {
  GeneratorConfig gen;
  int64_t disc_scales = 0;  // 0 derives the count from the crop size
  int64_t disc_base_width = 64;
  double lr_g = 1e-4;
  double lr_d = 4e-4;  // two-timescale rule, 4x the generator rate
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.9;
  LossWeights weights;
  int64_t epochs = 200;
  int64_t batch_size = 32;
  int64_t crop = 256;
  uint64_t seed = 1234;
  int64_t checkpoint_every = 10;  // epochs
  int64_t log_every = 50;        // steps
  bool hflip = false;
  int64_t workers = 1;
  LoadOptions data;

  int64_t scales() const;
  int64_t disc_in_channels() const;
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct StepMetrics {
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_fm = 0.0;
};

// Horizontal flip of image, raster and labels; the only augmentation besides
// the random crop.
void flip_lr(LoadedTile* tile);

// One generator/discriminator pair with its two Adam instances. A step is one
// discriminator update on (real, detached fake) followed by one generator
// update through a fresh pass of the just-updated discriminator; the
// generator forward runs once per step and its tape is shared by both halves.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  // The state dict points into layer storage, so instances must stay put.
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // Rebuilds the trainer from the configuration echoed in the archive and
  // restores its full state.
  static std::unique_ptr<Trainer> from_checkpoint(const std::string& path);

  StepMetrics train_step(const Batch& batch);

  // Runs the remaining epochs, appending to <run_dir>/curve.csv and writing
  // periodic checkpoints plus <run_dir>/ckpt_final.geosynck, whose path is
  // returned. epochs = 0 emits the initialization checkpoint only.
  std::string fit(const Manifest& manifest, const std::string& run_dir);

  void save_checkpoint(const std::string& path);
  void load_checkpoint(const std::string& path);

  // Eval-mode synthesis in native units: the generator output is clamped to
  // the normalization target range and inverse-mapped. pad is "error" or
  // "reflect" (mirror up to the next multiple of 16, then crop back).
  Tensor<float> synthesize(const Tensor<float>* raster,
                           const Tensor<int32_t>* labels,
                           const std::string& pad = "error");

  const TrainConfig& config() const { return cfg_; }
  Generator<float>& generator() { return g_; }
  MultiscaleDiscriminator<float>& discriminator() { return d_; }
  int64_t epoch() const { return epoch_; }
  int64_t global_step() const { return global_step_; }

 private:
  Var<float> make_condition(const Batch& batch, const Tensor<float>& onehot);

  TrainConfig cfg_;
  Rng g_rng_, d_rng_;
  Generator<float> g_;
  MultiscaleDiscriminator<float> d_;
  StateDict<float> sd_g_, sd_d_;
  Adam<float> opt_g_, opt_d_;
  int64_t epoch_ = 0;
  int64_t global_step_ = 0;
};

}  // namespace geosyn

#endif  // GEOSYN_TRAIN_TRAINER_H_
