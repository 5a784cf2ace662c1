/*
 * Copyright 2026 The ACS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACS_ACS_H_
#define ACS_ACS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ACS_BUILDING_LIBRARY)
#define ACS_API __attribute__((visibility("default")))
#else
#define ACS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum acs_status {
  ACS_OK = 0,
  ACS_ERR_USAGE = 1,      /* bad argument, config key or value */
  ACS_ERR_IO = 2,         /* unreadable or unwritable file */
  ACS_ERR_FORMAT = 3,     /* malformed checkpoint, dataset or record */
  ACS_ERR_TRAINING = 4,   /* training failed at some epoch */
  ACS_ERR_NUMERIC = 5,    /* non-finite values, failed attack or selection */
  ACS_ERR_INTERNAL = 6
} acs_status;

typedef struct acs_config acs_config;
typedef struct acs_dataset acs_dataset;
typedef struct acs_model acs_model;

/* Receives one progress line (no trailing newline). */
typedef void (*acs_log_fn)(const char* line, void* user);

/* Process exit code for a status: 0 ok, 2 usage, 1 anything else. */
ACS_API int acs_exit_code(acs_status status);
ACS_API const char* acs_status_name(acs_status status);
/* Message of the last failed call on this thread; "" when none. */
ACS_API const char* acs_last_error(void);
ACS_API const char* acs_version(void);
/* Frees strings returned through char** out-parameters. */
ACS_API void acs_string_free(char* s);

/* Configuration. */
ACS_API acs_status acs_config_default(acs_config** out);
ACS_API acs_status acs_config_load(const char* path, acs_config** out);
ACS_API acs_status acs_config_parse(const char* text, acs_config** out);
ACS_API acs_status acs_config_set(acs_config* config, const char* key, const char* value);
/* "--section.key=value" or "section.key=value". */
ACS_API acs_status acs_config_override(acs_config* config, const char* assignment);
ACS_API acs_status acs_config_get(const acs_config* config, const char* key, char** out);
ACS_API acs_status acs_config_text(const acs_config* config, char** out);
/* Checks every typed value without running anything. */
ACS_API acs_status acs_config_validate(const acs_config* config);
ACS_API const char* acs_default_config_text(void);
ACS_API void acs_config_free(acs_config* config);

/* Datasets by URI (blobs:..., moons:..., idx:...). */
ACS_API acs_status acs_dataset_open(const char* uri, acs_dataset** out);
ACS_API size_t acs_dataset_size(const acs_dataset* dataset);
ACS_API size_t acs_dataset_dim(const acs_dataset* dataset);
ACS_API size_t acs_dataset_classes(const acs_dataset* dataset);
ACS_API void acs_dataset_free(acs_dataset* dataset);

/* Models from checkpoints. */
ACS_API acs_status acs_model_load(const char* checkpoint, acs_model** out);
ACS_API size_t acs_model_param_count(const acs_model* model);
ACS_API acs_status acs_model_clean_accuracy(const acs_model* model, const acs_dataset* dataset,
                                            double* out);
ACS_API acs_status acs_model_robust_accuracy(const acs_model* model, const acs_dataset* dataset,
                                             const char* norm, double epsilon, double step_size,
                                             int iters, int restarts, int random_init,
                                             uint64_t seed, double* out);
ACS_API void acs_model_free(acs_model* model);

/* Runs. Output strings are JSON unless noted. */
/* Trains into <output root>/<run.name>; out gets the run summary. */
ACS_API acs_status acs_train(const acs_config* config, acs_log_fn log, void* user, char** out);
/* Writes the report to `output` when non-null. */
ACS_API acs_status acs_evaluate(const char* checkpoint, const char* dataset_uri, const char* norm,
                                double epsilon, double step_size, int iters, int restarts,
                                int random_init, uint64_t seed, const char* output, char** out);
/* `paths` are run directories or metrics files; out gets the aligned table,
   out_json (may be null) the records. */
ACS_API acs_status acs_compare(const char* const* paths, size_t count, char** out, char** out_json);
/* out gets the aligned table. */
ACS_API acs_status acs_sweep(const acs_config* config, const char* axis, const char* const* values,
                             size_t count, acs_log_fn log, void* user, char** out);
/* Line-delimited selection records of a run directory. */
ACS_API acs_status acs_select_trace(const char* run_dir, char** out);
/* Hex SHA-256 of a file. */
ACS_API acs_status acs_file_digest(const char* path, char** out);

#ifdef __cplusplus
}
#endif

#endif /* ACS_ACS_H_ */
