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

// Command-line front end. Flags are collected as strings and handed to the
// C API, which owns parsing, validation and defaults; the file given through
// --config is loaded first so that flags override it. Exit codes: 0 success,
// 1 runtime failure, 2 usage error.

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "geosyn/geosyn.h"

namespace {

struct CommandArgs {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;
  geosyn_status (*run)(const geosyn_options*, char*, size_t) = nullptr;
  std::string name;
};

// Registers a flag that forwards its raw string value to a config key.
void add_kv(CLI::App* cmd, CommandArgs* args, const std::string& flag,
            const std::string& key, const std::string& desc) {
  cmd->add_option_function<std::string>(
      flag,
      [args, key](const std::string& v) { args->overrides.emplace_back(key, v); },
      desc);
}

void add_switch(CLI::App* cmd, CommandArgs* args, const std::string& flag,
                const std::string& key, const std::string& desc) {
  cmd->add_flag_function(
      flag,
      [args, key](int64_t) { args->overrides.emplace_back(key, "1"); }, desc);
}

void add_common(CLI::App* cmd, CommandArgs* args) {
  cmd->add_option("--config", args->config_file,
                  "flat key = value configuration file; flags override it");
  add_kv(cmd, args, "--out-dir", "out_dir",
         "directory run folders are created under (default: runs)");
  add_kv(cmd, args, "--seed", "seed", "RNG seed (default: 1234)");
  cmd->add_option_function<std::vector<std::string>>(
      "--set",
      [args](const std::vector<std::string>& kvs) {
        for (const auto& kv : kvs) {
          size_t eq = kv.find('=');
          if (eq == std::string::npos)
            throw CLI::ValidationError("--set expects key=value, got '" + kv +
                                       "'");
          args->overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
        }
      },
      "extra key=value override; see the configuration schema in the README");
}

void add_data(CLI::App* cmd, CommandArgs* args) {
  add_kv(cmd, args, "--data-root", "data_root",
         "dataset root (default: $GEOSYN_DATA_ROOT)");
  add_kv(cmd, args, "--layout", "layout",
         "dataset layout, geonrw or dfc2020 (default: geonrw)");
  add_kv(cmd, args, "--manifest", "manifest",
         "manifest file from prepare-data; replaces scanning");
  add_switch(cmd, args, "--require-sar", "require_sar",
             "keep only tiles that carry a SAR channel");
}

void add_load(CLI::App* cmd, CommandArgs* args) {
  add_kv(cmd, args, "--target", "target",
         "channel to synthesize, rgb | sar | s2 (default: rgb)");
  add_kv(cmd, args, "--image-norm", "image_norm",
         "image normalization preset (default: geonrw_rgb; terrasar for sar)");
  add_kv(cmd, args, "--raster-norm", "raster_norm",
         "conditioning raster normalization preset (default: none)");
  add_switch(cmd, args, "--raster-demean", "raster_demean",
             "subtract the per-tile mean from the conditioning raster");
  add_kv(cmd, args, "--num-classes", "num_classes",
         "number of land-cover classes (default: 10)");
}

int report(const CommandArgs& args) {
  geosyn_options* opts = geosyn_options_create();
  if (!args.config_file.empty() &&
      geosyn_options_load_file(opts, args.config_file.c_str()) != GEOSYN_OK) {
    std::fprintf(stderr, "geosyn %s: %s\n", args.name.c_str(),
                 geosyn_last_error());
    geosyn_options_destroy(opts);
    return 2;
  }
  for (const auto& [k, v] : args.overrides)
    geosyn_options_set(opts, k.c_str(), v.c_str());

  char run_dir[4096] = {0};
  geosyn_status st = args.run(opts, run_dir, sizeof(run_dir));
  if (st != GEOSYN_OK)
    std::fprintf(stderr, "geosyn %s: %s\n", args.name.c_str(),
                 geosyn_last_error());
  else
    std::printf("run_dir=%s\n", run_dir);
  geosyn_options_destroy(opts);
  return st == GEOSYN_OK ? 0 : (st == GEOSYN_INVALID_ARGUMENT ? 2 : 1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "geosyn " + std::string(geosyn_version()) +
      " - land-cover conditioned synthesis of optical and SAR imagery.\n"
      "Precedence: $GEOSYN_DATA_ROOT < --config file < flags. Every command\n"
      "writes into a fresh run directory and echoes the resolved settings\n"
      "to config_resolved.cfg there."};
  app.require_subcommand(1);
  std::vector<CommandArgs> all(6);

  {
    CommandArgs& a = all[0];
    a.name = "prepare-data";
    a.run = geosyn_prepare_data;
    CLI::App* c = app.add_subcommand(
        "prepare-data", "Scan a dataset tree and write a split manifest");
    add_common(c, &a);
    add_data(c, &a);
    add_kv(c, &a, "--num-classes", "num_classes",
           "number of land-cover classes (default: 10)");
    c->callback([&a]() { std::exit(report(a)); });
  }
  {
    CommandArgs& a = all[1];
    a.name = "train";
    a.run = geosyn_train;
    CLI::App* c = app.add_subcommand(
        "train", "Train the conditional GAN on the manifest's train split");
    add_common(c, &a);
    add_data(c, &a);
    add_load(c, &a);
    add_kv(c, &a, "--variant", "variant",
           "generator conditioning: fusion | label_only | raster_only | "
           "concat (default: fusion)");
    add_kv(c, &a, "--out-channels", "out_channels",
           "synthesized channels, 1..3 (default: 3; 1 for sar)");
    add_kv(c, &a, "--in-raster-channels", "in_raster_channels",
           "conditioning raster channels (default: 1)");
    add_kv(c, &a, "--base-width", "base_width",
           "generator stem width (default: 64)");
    add_kv(c, &a, "--body-blocks", "body_blocks",
           "residual blocks in the generator body (default: 9)");
    add_kv(c, &a, "--disc-scales", "disc_scales",
           "discriminator scales, 2 or 3; 0 picks by crop size (default: 0)");
    add_kv(c, &a, "--disc-base-width", "disc_base_width",
           "discriminator first-layer width (default: 64)");
    add_kv(c, &a, "--lr-g", "lr_g", "generator learning rate (default: 1e-4)");
    add_kv(c, &a, "--lr-d", "lr_d",
           "discriminator learning rate (default: 4e-4)");
    add_kv(c, &a, "--adam-beta1", "adam_beta1", "Adam beta1 (default: 0)");
    add_kv(c, &a, "--adam-beta2", "adam_beta2", "Adam beta2 (default: 0.9)");
    add_kv(c, &a, "--lambda-fm", "lambda_fm",
           "feature-matching loss weight (default: 10)");
    add_kv(c, &a, "--epochs", "epochs", "training epochs (default: 200)");
    add_kv(c, &a, "--batch-size", "batch_size", "batch size (default: 32)");
    add_kv(c, &a, "--crop", "crop",
           "square training crop, multiple of 16 (default: 256)");
    add_kv(c, &a, "--checkpoint-every", "checkpoint_every",
           "checkpoint period in epochs (default: 10)");
    add_kv(c, &a, "--log-every", "log_every",
           "CSV logging period in steps (default: 50)");
    add_switch(c, &a, "--hflip", "hflip",
               "random horizontal flip augmentation");
    add_kv(c, &a, "--workers", "workers", "data workers, must be 1 (default)");
    add_kv(c, &a, "--resume", "resume", "checkpoint to resume from");
    c->callback([&a]() { std::exit(report(a)); });
  }
  {
    CommandArgs& a = all[2];
    a.name = "synthesize";
    a.run = geosyn_synthesize;
    CLI::App* c = app.add_subcommand(
        "synthesize",
        "Run a trained generator over a split and write a dataset of "
        "synthesized tiles");
    add_common(c, &a);
    add_data(c, &a);
    add_kv(c, &a, "--checkpoint", "checkpoint",
           "trained GAN checkpoint (required)");
    add_kv(c, &a, "--split", "split",
           "tiles to synthesize: test | train | all (default: test)");
    add_kv(c, &a, "--pad", "pad",
           "when a tile is not a multiple of 16: error | reflect "
           "(default: error)");
    c->callback([&a]() { std::exit(report(a)); });
  }
  {
    CommandArgs& a = all[3];
    a.name = "train-segmenter";
    a.run = geosyn_train_segmenter;
    CLI::App* c = app.add_subcommand(
        "train-segmenter",
        "Train the evaluation U-Net on real imagery from the train split");
    add_common(c, &a);
    add_data(c, &a);
    add_load(c, &a);
    add_kv(c, &a, "--seg-levels", "seg_levels",
           "U-Net depth in levels (default: 5)");
    add_kv(c, &a, "--seg-base-width", "seg_base_width",
           "U-Net first-level width (default: 64)");
    add_kv(c, &a, "--seg-in-channels", "seg_in_channels",
           "input channels; 0 derives from target (default: 0)");
    add_kv(c, &a, "--seg-lr", "seg_lr", "learning rate (default: 2e-4)");
    add_kv(c, &a, "--seg-beta1", "seg_beta1", "Adam beta1 (default: 0.9)");
    add_kv(c, &a, "--seg-beta2", "seg_beta2", "Adam beta2 (default: 0.999)");
    add_kv(c, &a, "--seg-epochs", "seg_epochs",
           "training epochs (default: 100)");
    add_kv(c, &a, "--seg-batch-size", "seg_batch_size",
           "batch size (default: 32)");
    add_kv(c, &a, "--seg-crop", "seg_crop",
           "square crop, multiple of 2^(levels-1) (default: 256)");
    add_kv(c, &a, "--seg-checkpoint-every", "seg_checkpoint_every",
           "checkpoint period in epochs (default: 10)");
    add_kv(c, &a, "--seg-log-every", "seg_log_every",
           "CSV logging period in steps (default: 50)");
    add_kv(c, &a, "--workers", "workers", "data workers, must be 1 (default)");
    add_kv(c, &a, "--resume", "resume", "checkpoint to resume from");
    c->callback([&a]() { std::exit(report(a)); });
  }
  {
    CommandArgs& a = all[4];
    a.name = "evaluate";
    a.run = geosyn_evaluate;
    CLI::App* c = app.add_subcommand(
        "evaluate",
        "Score synthesized tiles against ground truth and real "
        "segmentations, plus the feature-space Frechet distance");
    add_common(c, &a);
    add_data(c, &a);
    add_kv(c, &a, "--segmenter", "segmenter",
           "trained segmenter checkpoint (required)");
    add_kv(c, &a, "--fake-root", "fake_root",
           "root of the synthesized dataset from `synthesize` (required)");
    c->callback([&a]() { std::exit(report(a)); });
  }
  {
    CommandArgs& a = all[5];
    a.name = "edit-flood";
    a.run = geosyn_edit_flood;
    CLI::App* c = app.add_subcommand(
        "edit-flood",
        "Raise the water level: relabel and flatten pixels at or below a "
        "threshold elevation");
    add_common(c, &a);
    add_kv(c, &a, "--dem", "dem",
           "input elevation raster, float GeoTIFF (required)");
    add_kv(c, &a, "--landcover", "landcover",
           "input land-cover map (required)");
    add_kv(c, &a, "--h-min", "h_min", "flood water level in raster units");
    add_kv(c, &a, "--levels", "levels",
           "comma-separated water levels for a sweep; overrides --h-min");
    add_kv(c, &a, "--radius", "radius",
           "erosion radius in pixels (default: 1)");
    add_kv(c, &a, "--water-class", "water_class",
           "land-cover class id written into flooded pixels (required)");
    add_kv(c, &a, "--num-classes", "num_classes",
           "number of land-cover classes (default: 10)");
    c->callback([&a]() { std::exit(report(a)); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}
