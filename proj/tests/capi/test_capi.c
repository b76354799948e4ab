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

/* Exercises the C interface from plain C against the shared library. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "fnorm.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, \
              #cond, fnorm_last_error());                              \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static int warnings = 0;
static void on_log(int level, const char* message, void* user) {
  (void)message;
  if (level == 1) ++*(int*)user;
}

static void test_helpers(void) {
  const double pos[] = {0.9, 0.4};
  const double neg[] = {0.5, 0.1};
  double v = 0.0;
  EXPECT(fnorm_auc(pos, 2, neg, 2, &v) == FNORM_OK && v == 0.75);
  EXPECT(fnorm_average_precision(pos, 2, neg, 2, &v) == FNORM_OK &&
         fabs(v - 5.0 / 6.0) < 1e-15);
  EXPECT(fnorm_auc(pos, 0, neg, 2, &v) == FNORM_ERR_VALIDATION);
  EXPECT(strlen(fnorm_last_error()) > 0);
  EXPECT(strcmp(fnorm_status_name(FNORM_ERR_IO), "io") == 0 ||
         strlen(fnorm_status_name(FNORM_ERR_IO)) > 0);
  EXPECT(strcmp(fnorm_version(), "0.1.0") == 0);

  double m[] = {3, 4, 0, 5, -3, 4};
  EXPECT(fnorm_feature_norm(m, 3, 2, m) == FNORM_OK);
  for (int i = 0; i < 3; ++i)
    EXPECT(fabs(m[2 * i] * m[2 * i] + m[2 * i + 1] * m[2 * i + 1] - 1.0) < 1e-12);

  double same[] = {1, 1, 1, 1};
  fnorm_set_log_callback(on_log, &warnings);
  EXPECT(fnorm_feature_norm(same, 2, 2, same) == FNORM_OK);
  fnorm_set_log_callback(NULL, NULL);
  EXPECT(warnings == 1);
}

static void test_snapshots(const char* tmp) {
  fnorm_edge_list* edges = NULL;
  EXPECT(fnorm_edge_list_load(FNORM_FIXTURE_DIR "/tiny.edges", &edges) == FNORM_OK);
  EXPECT(fnorm_edge_list_num_records(edges) == 8);
  EXPECT(fnorm_edge_list_num_nodes(edges) == 6);
  fnorm_snapshots* seq = NULL;
  EXPECT(fnorm_slice(edges, 4, 1, 0, &seq) == FNORM_OK);
  EXPECT(fnorm_snapshots_count(seq) == 2);
  size_t nodes = 0, records = 0;
  EXPECT(fnorm_snapshots_step_info(seq, 0, &nodes, &records, NULL) == FNORM_OK);
  EXPECT(records == 4);
  EXPECT(fnorm_snapshots_step_info(seq, 2, NULL, NULL, NULL) == FNORM_ERR_VALIDATION);
  EXPECT(fnorm_snapshots_save(seq, tmp) == FNORM_OK);
  fnorm_snapshots* back = NULL;
  EXPECT(fnorm_snapshots_load(tmp, &back) == FNORM_OK);
  EXPECT(fnorm_snapshots_count(back) == 2);
  fnorm_snapshots_free(back);
  fnorm_snapshots_free(seq);
  fnorm_edge_list_free(edges);

  fnorm_edge_list* missing = NULL;
  EXPECT(fnorm_edge_list_load("/nonexistent/file.edges", &missing) == FNORM_ERR_IO);
  EXPECT(missing == NULL);
}

static void test_config(void) {
  fnorm_config* cfg = NULL;
  EXPECT(fnorm_config_new(&cfg) == FNORM_OK);
  EXPECT(fnorm_config_set(cfg, "norm", "fn") == FNORM_OK);
  EXPECT(fnorm_config_set(cfg, "nope", "1") == FNORM_ERR_VALIDATION);
  EXPECT(fnorm_config_validate(cfg) == FNORM_OK);
  char hash[17];
  EXPECT(fnorm_config_hash(cfg, hash) == FNORM_OK && strlen(hash) == 16);
  fnorm_report* json = NULL;
  EXPECT(fnorm_config_to_json(cfg, &json) == FNORM_OK);
  fnorm_config* copy = NULL;
  EXPECT(fnorm_config_from_json(fnorm_report_json(json), &copy) == FNORM_OK);
  char hash2[17];
  EXPECT(fnorm_config_hash(copy, hash2) == FNORM_OK && strcmp(hash, hash2) == 0);
  fnorm_report_free(json);
  fnorm_config_free(copy);
  fnorm_config_free(cfg);
  EXPECT(fnorm_config_from_json("{\"bogus\": 1}", &copy) == FNORM_ERR_VALIDATION);
}

static void test_runs(const char* tmp) {
  char store[1024], out[1024], opts[2048];
  snprintf(store, sizeof store, "%s/blocks_store", tmp);
  snprintf(out, sizeof out, "%s/run", tmp);
  fnorm_edge_list* edges = NULL;
  fnorm_snapshots* seq = NULL;
  EXPECT(fnorm_edge_list_load(FNORM_FIXTURE_DIR "/two_blocks.edges", &edges) == FNORM_OK);
  EXPECT(fnorm_slice(edges, 45, 1, 0, &seq) == FNORM_OK);
  EXPECT(fnorm_snapshots_save(seq, store) == FNORM_OK);
  fnorm_snapshots_free(seq);
  fnorm_edge_list_free(edges);

  fnorm_config* cfg = NULL;
  fnorm_config_new(&cfg);
  fnorm_config_set(cfg, "dataset", store);
  fnorm_config_set(cfg, "out-dir", out);
  fnorm_config_set(cfg, "epochs", "3");
  fnorm_config_set(cfg, "dim", "8");
  fnorm_config_set(cfg, "seeds", "1");
  fnorm_report* r = NULL;
  EXPECT(fnorm_train(cfg, &r) == FNORM_OK);
  EXPECT(r != NULL && strstr(fnorm_report_json(r), "run-id") != NULL);
  fnorm_report_free(r);
  r = NULL;
  EXPECT(fnorm_eval(cfg, &r) == FNORM_OK);
  EXPECT(r != NULL && strstr(fnorm_report_json(r), "auc") != NULL);
  fnorm_report_free(r);
  r = NULL;
  EXPECT(fnorm_compare_norms(cfg, "dyn_gcn", &r) == FNORM_OK);
  fnorm_report_free(r);
  r = NULL;
  EXPECT(fnorm_compare_norms(cfg, "lstm", &r) == FNORM_ERR_VALIDATION);
  fnorm_config_set(cfg, "dataset", "/nonexistent/store");
  EXPECT(fnorm_train(cfg, &r) == FNORM_ERR_IO);
  fnorm_config_free(cfg);

  snprintf(opts, sizeof opts,
           "{\"out-dir\": \"%s/diag\", \"theorem-trials\": 10, "
           "\"trace-sequences\": 2, \"scaling\": false}",
           tmp);
  r = NULL;
  EXPECT(fnorm_diagnose(opts, &r) == FNORM_OK);
  EXPECT(r != NULL && strstr(fnorm_report_json(r), "theorem1") != NULL);
  fnorm_report_free(r);
  EXPECT(fnorm_diagnose("{\"unknown\": 1}", &r) == FNORM_ERR_VALIDATION);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s <scratch-dir>\n", argv[0]);
    return 2;
  }
  test_helpers();
  test_snapshots(argv[1]);
  test_config();
  test_runs(argv[1]);
  if (failures == 0) printf("capi: all checks passed\n");
  return failures == 0 ? 0 : 1;
}
