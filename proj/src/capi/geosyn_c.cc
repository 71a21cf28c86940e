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

#include "geosyn/geosyn.h"

#include <cstring>
#include <string>

#include "core/version.h"
#include "pipeline/pipeline.h"

struct geosyn_options {
  geosyn::ConfigMap values;
};

namespace {

thread_local std::string t_last_error;

void set_error(const std::string& msg) { t_last_error = msg; }

void copy_out(const std::string& s, char* out, size_t cap) {
  if (out == nullptr || cap == 0) return;
  size_t n = s.size() < cap - 1 ? s.size() : cap - 1;
  std::memcpy(out, s.data(), n);
  out[n] = '\0';
}

using Runner = std::string (*)(const geosyn::ConfigMap&);

geosyn_status dispatch(Runner run, const geosyn_options* opts,
                       char* run_dir_out, size_t run_dir_cap) {
  if (opts == nullptr) {
    set_error("null options handle");
    return GEOSYN_INVALID_ARGUMENT;
  }
  try {
    std::string run_dir = run(opts->values);
    copy_out(run_dir, run_dir_out, run_dir_cap);
    t_last_error.clear();
    return GEOSYN_OK;
  } catch (const geosyn::UsageError& e) {
    set_error(e.what());
    return GEOSYN_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    set_error(e.what());
    return GEOSYN_RUNTIME_ERROR;
  }
}

}  // namespace

extern "C" {

geosyn_options* geosyn_options_create(void) { return new geosyn_options(); }

void geosyn_options_destroy(geosyn_options* opts) { delete opts; }

geosyn_status geosyn_options_load_file(geosyn_options* opts,
                                       const char* path) {
  if (opts == nullptr || path == nullptr) {
    set_error("null argument to geosyn_options_load_file");
    return GEOSYN_INVALID_ARGUMENT;
  }
  try {
    for (auto& [k, v] : geosyn::load_config_file(path))
      opts->values[k] = v;
    t_last_error.clear();
    return GEOSYN_OK;
  } catch (const geosyn::UsageError& e) {
    set_error(e.what());
    return GEOSYN_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    set_error(e.what());
    return GEOSYN_RUNTIME_ERROR;
  }
}

geosyn_status geosyn_options_set(geosyn_options* opts, const char* key,
                                 const char* value) {
  if (opts == nullptr || key == nullptr || value == nullptr ||
      key[0] == '\0') {
    set_error("null or empty argument to geosyn_options_set");
    return GEOSYN_INVALID_ARGUMENT;
  }
  opts->values[key] = value;
  return GEOSYN_OK;
}

const char* geosyn_options_get(const geosyn_options* opts, const char* key) {
  if (opts == nullptr || key == nullptr) return nullptr;
  auto it = opts->values.find(key);
  return it == opts->values.end() ? nullptr : it->second.c_str();
}

geosyn_status geosyn_prepare_data(const geosyn_options* opts,
                                  char* run_dir_out, size_t run_dir_cap) {
  return dispatch(geosyn::run_prepare_data, opts, run_dir_out, run_dir_cap);
}

geosyn_status geosyn_train(const geosyn_options* opts, char* run_dir_out,
                           size_t run_dir_cap) {
  return dispatch(geosyn::run_train, opts, run_dir_out, run_dir_cap);
}

geosyn_status geosyn_synthesize(const geosyn_options* opts, char* run_dir_out,
                                size_t run_dir_cap) {
  return dispatch(geosyn::run_synthesize, opts, run_dir_out, run_dir_cap);
}

geosyn_status geosyn_train_segmenter(const geosyn_options* opts,
                                     char* run_dir_out, size_t run_dir_cap) {
  return dispatch(geosyn::run_train_segmenter, opts, run_dir_out, run_dir_cap);
}

geosyn_status geosyn_evaluate(const geosyn_options* opts, char* run_dir_out,
                              size_t run_dir_cap) {
  return dispatch(geosyn::run_evaluate, opts, run_dir_out, run_dir_cap);
}

geosyn_status geosyn_edit_flood(const geosyn_options* opts, char* run_dir_out,
                                size_t run_dir_cap) {
  return dispatch(geosyn::run_edit_flood, opts, run_dir_out, run_dir_cap);
}

const char* geosyn_last_error(void) { return t_last_error.c_str(); }

const char* geosyn_version(void) { return geosyn::version(); }

}  // extern "C"
