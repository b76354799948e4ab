/*
 * Copyright 2026 The fnorm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FNORM_H_
#define FNORM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(FNORM_BUILDING_LIBRARY)
#define FNORM_API __attribute__((visibility("default")))
#else
#define FNORM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fnorm_status {
  FNORM_OK = 0,
  FNORM_ERR_VALIDATION = 1,
  FNORM_ERR_SHAPE = 2,
  FNORM_ERR_IO = 3,
  FNORM_ERR_NUMERICAL = 4,
  FNORM_ERR_UNSUPPORTED = 5,
  /* A diagnostic check failed; the report is still produced. */
  FNORM_ERR_CHECK_FAILED = 6,
  FNORM_ERR_INTERNAL = 7
} fnorm_status;

/* Message of the last failure on the calling thread ("" if none). */
FNORM_API const char* fnorm_last_error(void);
FNORM_API const char* fnorm_status_name(fnorm_status status);
FNORM_API const char* fnorm_version(void);

/* Log callback; level 0 = info, 1 = warning. NULL restores the default
 * (warnings to stderr). The callback may be invoked from worker threads. */
typedef void (*fnorm_log_fn)(int level, const char* message, void* user);
FNORM_API void fnorm_set_log_callback(fnorm_log_fn fn, void* user);

/* Owned JSON text returned by the run functions. */
typedef struct fnorm_report fnorm_report;
FNORM_API const char* fnorm_report_json(const fnorm_report* report);
FNORM_API void fnorm_report_free(fnorm_report* report);

/* ---- temporal edge lists and snapshot stores ---- */
typedef struct fnorm_edge_list fnorm_edge_list;
typedef struct fnorm_snapshots fnorm_snapshots;

FNORM_API fnorm_status fnorm_edge_list_load(const char* path,
                                            fnorm_edge_list** out);
FNORM_API size_t fnorm_edge_list_num_records(const fnorm_edge_list* edges);
FNORM_API size_t fnorm_edge_list_num_nodes(const fnorm_edge_list* edges);
FNORM_API void fnorm_edge_list_free(fnorm_edge_list* edges);

/* max_steps = 0 means unlimited. */
FNORM_API fnorm_status fnorm_slice(const fnorm_edge_list* edges,
                                   size_t target_edges, int day_boundary_rule,
                                   size_t max_steps, fnorm_snapshots** out);
FNORM_API fnorm_status fnorm_snapshots_save(const fnorm_snapshots* seq,
                                            const char* dir);
FNORM_API fnorm_status fnorm_snapshots_load(const char* dir,
                                            fnorm_snapshots** out);
FNORM_API size_t fnorm_snapshots_count(const fnorm_snapshots* seq);
/* step is 0-based. Any output pointer may be NULL. */
FNORM_API fnorm_status fnorm_snapshots_step_info(const fnorm_snapshots* seq,
                                                 size_t step,
                                                 size_t* num_nodes,
                                                 size_t* num_records,
                                                 size_t* num_links);
FNORM_API void fnorm_snapshots_free(fnorm_snapshots* seq);

/* ---- experiment configuration ---- */
typedef struct fnorm_config fnorm_config;

FNORM_API fnorm_status fnorm_config_new(fnorm_config** out);
FNORM_API fnorm_status fnorm_config_from_json(const char* json,
                                              fnorm_config** out);
FNORM_API fnorm_status fnorm_config_load(const char* path, fnorm_config** out);
/* Keys are the kebab-case option names, e.g. "norm", "epochs", "seeds". */
FNORM_API fnorm_status fnorm_config_set(fnorm_config* cfg, const char* key,
                                        const char* value);
FNORM_API fnorm_status fnorm_config_validate(const fnorm_config* cfg);
FNORM_API fnorm_status fnorm_config_to_json(const fnorm_config* cfg,
                                            fnorm_report** out);
/* 16 hex digits plus NUL; buffer must hold 17 bytes. */
FNORM_API fnorm_status fnorm_config_hash(const fnorm_config* cfg, char* out);
FNORM_API void fnorm_config_free(fnorm_config* cfg);

/* ---- runs; every output lands under the configured out-dir ---- */
FNORM_API fnorm_status fnorm_train(const fnorm_config* cfg, fnorm_report** out);
FNORM_API fnorm_status fnorm_eval(const fnorm_config* cfg, fnorm_report** out);
/* frameworks: comma-separated list ("dyn_gcn,gru_gcn"); NULL = both. */
FNORM_API fnorm_status fnorm_compare_norms(const fnorm_config* cfg,
                                           const char* frameworks,
                                           fnorm_report** out);
/* options_json may be NULL. Keys: out-dir, dataset, seed, theorem-trials,
 * trace-sequences, trace-steps, scaling, scaling-n, scaling-dim.
 * Returns FNORM_ERR_CHECK_FAILED (with *out set) when a check fails. */
FNORM_API fnorm_status fnorm_diagnose(const char* options_json,
                                      fnorm_report** out);

/* ---- numeric helpers ---- */
FNORM_API fnorm_status fnorm_auc(const double* pos, size_t num_pos,
                                 const double* neg, size_t num_neg,
                                 double* out);
FNORM_API fnorm_status fnorm_average_precision(const double* pos,
                                               size_t num_pos,
                                               const double* neg,
                                               size_t num_neg, double* out);
/* Row-major rows x cols; out may alias in. */
FNORM_API fnorm_status fnorm_feature_norm(const double* in, size_t rows,
                                          size_t cols, double* out);

#ifdef __cplusplus
}
#endif

#endif /* FNORM_H_ */
