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

#ifndef GEOSYN_PIPELINE_PIPELINE_H_
#define GEOSYN_PIPELINE_PIPELINE_H_

#include <map>
#include <stdexcept>
#include <string>

namespace geosyn {

// Configuration is a flat key=value map: a config file is read first, then
// command-line overrides are applied on top, and GEOSYN_DATA_ROOT fills
// data_root last if nothing else did. Every runner validates its keys before
// touching data, writes the fully resolved map to config_resolved.cfg inside
// a fresh run directory (named by command, timestamp and seed), confines all
// outputs to that directory, and returns its path.
using ConfigMap = std::map<std::string, std::string>;

// Bad flags, unknown or unparsable keys, missing required keys. The CLI
// turns this into exit code 2; anything else that escapes a runner is a
// runtime failure (exit code 1).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Lines are "key = value"; blank lines and '#' comments are skipped.
ConfigMap load_config_file(const std::string& path);
void save_config_file(const ConfigMap& m, const std::string& path);

// Builds <out_dir>/<command>-<UTC stamp>-s<seed>, suffixed if it already
// exists, and creates it.
std::string make_run_dir(const ConfigMap& cfg, const std::string& command);

std::string run_prepare_data(const ConfigMap& cfg);
std::string run_train(const ConfigMap& cfg);
std::string run_synthesize(const ConfigMap& cfg);
std::string run_train_segmenter(const ConfigMap& cfg);
std::string run_evaluate(const ConfigMap& cfg);
std::string run_edit_flood(const ConfigMap& cfg);

}  // namespace geosyn

#endif  // GEOSYN_PIPELINE_PIPELINE_H_
