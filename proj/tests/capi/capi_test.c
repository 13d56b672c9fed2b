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

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "relimp/relimp.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond);  \
      ++failures;                                                 \
    }                                                             \
  } while (0)

#define EXPECT_OK(call)                                                                \
  do {                                                                                 \
    relimp_status st_ = (call);                                                        \
    if (st_ != RELIMP_OK) {                                                            \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,              \
              relimp_status_name(st_), relimp_last_error());                           \
      ++failures;                                                                      \
    }                                                                                  \
  } while (0)

static const char* kConfig =
    "{\"generator\": {\"scene_count\": 24, \"unlabeled_count\": 8, \"max_objects\": 4},"
    " \"model\": {\"preset\": \"desk\"},"
    " \"train\": {\"epochs\": 2, \"batch_size\": 8, \"lr\": 0.001},"
    " \"experiment\": {\"split_ratio\": 0.75, \"seeds\": [1]}}";

static void log_sink(const char* line, void* user) {
  (void)line;
  ++*(int*)user;
}

static char* slurp(const char* path) {
  FILE* f = fopen(path, "rb");
  if (!f) return NULL;
  fseek(f, 0, SEEK_END);
  long n = ftell(f);
  fseek(f, 0, SEEK_SET);
  char* buf = malloc((size_t)n + 1);
  size_t got = fread(buf, 1, (size_t)n, f);
  buf[got] = '\0';
  fclose(f);
  return buf;
}

static void test_errors(void) {
  relimp_config* c = NULL;
  EXPECT(relimp_config_parse("{", &c) == RELIMP_ERR_CONFIG);
  EXPECT(c == NULL);
  EXPECT(strstr(relimp_last_error(), "malformed") != NULL);
  EXPECT(relimp_config_parse("{\"train\": {\"nope\": 1}}", &c) == RELIMP_ERR_CONFIG);
  EXPECT(relimp_config_load("/nonexistent/x.json", &c) == RELIMP_ERR_IO);
  EXPECT(relimp_config_parse(kConfig, NULL) == RELIMP_ERR_INVALID_ARGUMENT);

  relimp_dataset* d = NULL;
  EXPECT(relimp_dataset_load("/nonexistent/x.jsonl", &d) == RELIMP_ERR_IO);

  double r[4] = {1, 1, 1, 1};
  double v = 0;
  EXPECT(relimp_icc(r, 2, 2, 2, &v) == RELIMP_ERR_UNDEFINED);
  EXPECT(relimp_icc(r, 2, 2, 9, &v) == RELIMP_ERR_INVALID_ARGUMENT);
  EXPECT(strcmp(relimp_status_name(RELIMP_OK), "ok") == 0 || strlen(relimp_status_name(RELIMP_OK)) > 0);
}

static void test_icc(void) {
  /* Two raters agreeing exactly. */
  double r[6] = {1, 2, 3, 1, 2, 3};
  double v = 0;
  EXPECT_OK(relimp_icc(r, 2, 3, 2, &v));
  EXPECT(fabs(v - 1.0) < 1e-12);
}

static void test_pipeline(void) {
  relimp_config* c = NULL;
  EXPECT_OK(relimp_config_parse(kConfig, &c));
  EXPECT_OK(relimp_config_set_seed(c, 5));
  EXPECT_OK(relimp_config_set_mode(c, RELIMP_MODE_SSL));
  char* json = NULL;
  EXPECT_OK(relimp_config_to_json(c, &json));
  EXPECT(json && strstr(json, "\"ssl\"") != NULL);
  relimp_string_free(json);

  relimp_dataset* d = NULL;
  EXPECT_OK(relimp_dataset_generate(c, &d));
  size_t nl = 0, nu = 0;
  EXPECT_OK(relimp_dataset_size(d, &nl, &nu));
  EXPECT(nl == 24 && nu == 8);

  const char* data_path = "capi_data.jsonl";
  EXPECT_OK(relimp_dataset_save(d, data_path));
  relimp_dataset* d2 = NULL;
  EXPECT_OK(relimp_dataset_load(data_path, &d2));
  EXPECT_OK(relimp_dataset_size(d2, &nl, &nu));
  EXPECT(nl == 24 && nu == 8);

  int lines = 0;
  relimp_set_log(log_sink, &lines);
  relimp_model* m = NULL;
  EXPECT_OK(relimp_train(c, d2, &m, "capi_log.csv"));
  relimp_set_log(NULL, NULL);
  EXPECT(lines > 0);
  char* log = slurp("capi_log.csv");
  EXPECT(log && strncmp(log, "epoch,L_labeled,L_unlabeled,gamma,val_accuracy,val_F1", 52) == 0);
  free(log);

  double s1[16], s2[16];
  size_t n1 = 0, n2 = 0;
  EXPECT_OK(relimp_model_scores(m, d2, 0, s1, 16, &n1));
  EXPECT(n1 > 0 && n1 <= 4);
  for (size_t i = 0; i < n1; ++i) EXPECT(s1[i] > 0 && s1[i] < 1);
  EXPECT(relimp_model_scores(m, d2, 1000, s1, 16, &n1) == RELIMP_ERR_INVALID_ARGUMENT);

  EXPECT_OK(relimp_model_save(m, "capi_model.ckpt"));
  relimp_model* m2 = NULL;
  EXPECT_OK(relimp_model_load(c, d2, "capi_model.ckpt", &m2));
  EXPECT_OK(relimp_model_scores(m2, d2, 0, s2, 16, &n2));
  EXPECT(n1 == n2);
  for (size_t i = 0; i < n2; ++i) EXPECT(s1[i] == s2[i]);

  EXPECT_OK(relimp_evaluate(c, m2, d2, 1, "capi_metrics.csv"));
  char* metrics = slurp("capi_metrics.csv");
  EXPECT(metrics && strncmp(metrics, "slice,config,seed,accuracy,f1,n_scenes,n_objects", 48) == 0);
  EXPECT(metrics && strstr(metrics, "B-3") != NULL);
  free(metrics);

  const char* paths[1] = {"capi_metrics.csv"};
  char* text = NULL;
  EXPECT_OK(relimp_report(paths, 1, &text));
  EXPECT(text && strstr(text, "overall") != NULL);
  relimp_string_free(text);

  relimp_model_free(m);
  relimp_model_free(m2);
  relimp_dataset_free(d);
  relimp_dataset_free(d2);
  relimp_config_free(c);
}

int main(void) {
  test_errors();
  test_icc();
  test_pipeline();
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
