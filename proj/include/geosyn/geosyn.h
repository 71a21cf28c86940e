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

/* C interface to the geosyn pipeline.
 *
 * An options handle holds a flat key=value configuration. Load a file first,
 * then apply overrides with geosyn_options_set; values set later win. The
 * environment variable GEOSYN_DATA_ROOT supplies data_root when neither file
 * nor overrides do. Each command creates a fresh run directory under the
 * out_dir key (default "runs"), confines all of its outputs to it, writes
 * the fully resolved configuration to config_resolved.cfg inside it, and
 * copies the directory path into run_dir_out.
 *
 * Every entry point returns a status code; on anything but GEOSYN_OK a
 * human-readable message is available from geosyn_last_error() until the next
 * call on the same thread.
 */

#ifndef GEOSYN_GEOSYN_H_
#define GEOSYN_GEOSYN_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum geosyn_status {
  GEOSYN_OK = 0,
  /* bad flag, unknown or malformed key, missing required key */
  GEOSYN_INVALID_ARGUMENT = 1,
  /* failure during the run: I/O, bad data, numerical abort */
  GEOSYN_RUNTIME_ERROR = 2
} geosyn_status;

typedef struct geosyn_options geosyn_options;

/* Never returns NULL; free with geosyn_options_destroy. */
geosyn_options* geosyn_options_create(void);
void geosyn_options_destroy(geosyn_options* opts);

/* Merges keys from a config file ("key = value" lines, '#' comments). */
geosyn_status geosyn_options_load_file(geosyn_options* opts, const char* path);

/* Sets one key, overriding any earlier value. */
geosyn_status geosyn_options_set(geosyn_options* opts, const char* key,
                                 const char* value);

/* Returns the stored value or NULL when the key is absent. The pointer is
 * invalidated by the next set or load on the same handle. */
const char* geosyn_options_get(const geosyn_options* opts, const char* key);

/* Commands. run_dir_out (may be NULL) receives the NUL-terminated run
 * directory path, truncated to run_dir_cap - 1 characters. */
geosyn_status geosyn_prepare_data(const geosyn_options* opts,
                                  char* run_dir_out, size_t run_dir_cap);
geosyn_status geosyn_train(const geosyn_options* opts, char* run_dir_out,
                           size_t run_dir_cap);
geosyn_status geosyn_synthesize(const geosyn_options* opts, char* run_dir_out,
                                size_t run_dir_cap);
geosyn_status geosyn_train_segmenter(const geosyn_options* opts,
                                     char* run_dir_out, size_t run_dir_cap);
geosyn_status geosyn_evaluate(const geosyn_options* opts, char* run_dir_out,
                              size_t run_dir_cap);
geosyn_status geosyn_edit_flood(const geosyn_options* opts, char* run_dir_out,
                                size_t run_dir_cap);

/* Message for the most recent failing call on this thread; empty string if
 * none. The buffer is thread-local and owned by the library. */
const char* geosyn_last_error(void);

/* Library version, e.g. "0.1.0". */
const char* geosyn_version(void);

#ifdef __cplusplus
}
#endif

#endif /* GEOSYN_GEOSYN_H_ */
