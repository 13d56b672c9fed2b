/* Copyright 2026 The Relimp Authors. All Rights Reserved.

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

/* C interface to the relimp library. All handles are opaque; every call
 * returns a relimp_status and, on failure, leaves a message retrievable with
 * relimp_last_error() on the calling thread. */
#ifndef RELIMP_RELIMP_H_
#define RELIMP_RELIMP_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define RELIMP_API __attribute__((visibility("default")))
#else
#define RELIMP_API
#endif

typedef enum relimp_status {
  RELIMP_OK = 0,
  RELIMP_ERR_INVALID_ARGUMENT = 1,
  RELIMP_ERR_IO = 2,
  RELIMP_ERR_CONFIG = 3,
  RELIMP_ERR_DATA = 4,
  RELIMP_ERR_DIVERGED = 5,
  RELIMP_ERR_UNDEFINED = 6,
  RELIMP_ERR_INTERNAL = 7
} relimp_status;

typedef enum relimp_mode {
  RELIMP_MODE_SUPERVISED = 0,
  RELIMP_MODE_SSL = 1
} relimp_mode;

typedef struct relimp_config relimp_config;
typedef struct relimp_dataset relimp_dataset;
typedef struct relimp_model relimp_model;

RELIMP_API const char* relimp_last_error(void);
RELIMP_API const char* relimp_status_name(relimp_status status);

/* Configuration. */
RELIMP_API relimp_status relimp_config_default(relimp_config** out);
RELIMP_API relimp_status relimp_config_load(const char* path, relimp_config** out);
RELIMP_API relimp_status relimp_config_parse(const char* json_text, relimp_config** out);
/* Sets generator, training and experiment seeds together. */
RELIMP_API relimp_status relimp_config_set_seed(relimp_config* config, uint64_t seed);
RELIMP_API relimp_status relimp_config_set_mode(relimp_config* config, relimp_mode mode);
RELIMP_API relimp_status relimp_config_set_grid(relimp_config* config, const double* alpha1, size_t n_alpha1,
                                                const double* alpha2, size_t n_alpha2);
/* Caller frees the string with relimp_string_free. */
RELIMP_API relimp_status relimp_config_to_json(const relimp_config* config, char** out);
RELIMP_API void relimp_config_free(relimp_config* config);

/* Datasets (JSON Lines). */
RELIMP_API relimp_status relimp_dataset_generate(const relimp_config* config, relimp_dataset** out);
RELIMP_API relimp_status relimp_dataset_load(const char* path, relimp_dataset** out);
RELIMP_API relimp_status relimp_dataset_save(const relimp_dataset* dataset, const char* path);
RELIMP_API relimp_status relimp_dataset_size(const relimp_dataset* dataset, size_t* labeled, size_t* unlabeled);
RELIMP_API void relimp_dataset_free(relimp_dataset* dataset);

/* Trains on the training split of the dataset under the config's mode. The
 * log path may be NULL. */
RELIMP_API relimp_status relimp_train(const relimp_config* config, const relimp_dataset* dataset,
                                      relimp_model** out, const char* log_csv_path);
RELIMP_API relimp_status relimp_model_save(const relimp_model* model, const char* path);
/* Input widths come from the dataset, everything else from the config. */
RELIMP_API relimp_status relimp_model_load(const relimp_config* config, const relimp_dataset* dataset,
                                           const char* path, relimp_model** out);
/* Importance scores of one labeled scene, in object order. Writes up to
 * `capacity` values and the object count to `count`. */
RELIMP_API relimp_status relimp_model_scores(const relimp_model* model, const relimp_dataset* dataset,
                                             size_t scene_index, double* scores, size_t capacity, size_t* count);
RELIMP_API void relimp_model_free(relimp_model* model);

/* Evaluation on the test split; writes a metrics CSV. */
RELIMP_API relimp_status relimp_evaluate(const relimp_config* config, const relimp_model* model,
                                         const relimp_dataset* dataset, int include_baselines, const char* out_csv);
/* Runs the experiment's ablation configs over its seeds. Writes the per-seed
 * metrics CSV to out_csv and the mean/stddev table to table_csv (may be NULL). */
RELIMP_API relimp_status relimp_ablate(const relimp_config* config, const relimp_dataset* dataset,
                                       const char* out_csv, const char* table_csv);
RELIMP_API relimp_status relimp_sweep(const relimp_config* config, const relimp_dataset* dataset,
                                      const char* out_csv);
/* Plain-text summary table of one or more metrics CSV files. */
RELIMP_API relimp_status relimp_report(const char* const* csv_paths, size_t n_paths, char** out_text);
RELIMP_API relimp_status relimp_icc_file(const relimp_config* config, const char* ratings_csv, double* out);
/* ratings[r * n_subjects + s]. form: 1 one-way, 2 two-way random, 3 two-way mixed. */
RELIMP_API relimp_status relimp_icc(const double* ratings, size_t n_raters, size_t n_subjects, int form,
                                    double* out);

/* Progress lines from long runs; NULL disables. */
typedef void (*relimp_log_fn)(const char* line, void* user);
RELIMP_API void relimp_set_log(relimp_log_fn fn, void* user);

RELIMP_API void relimp_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* RELIMP_RELIMP_H_ */
