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

#include "relimp/relimp.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "relimp/config.hpp"
#include "relimp/experiments.hpp"

struct relimp_config {
  relimp::AppConfig app;
};

struct relimp_dataset {
  relimp::Dataset data;
};

struct relimp_model {
  std::unique_ptr<relimp::ImportanceModel> model;
  std::uint64_t seed = 0;
};

namespace {

thread_local std::string g_last_error;
relimp_log_fn g_log = nullptr;
void* g_log_user = nullptr;

relimp_status fail(relimp_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps the exception in flight to a status. Config parsing reports invalid
// arguments as config errors.
relimp_status translate(bool config_context = false) {
  try {
    throw;
  } catch (const relimp::ValidationError& e) {
    return fail(RELIMP_ERR_DATA, e.what());
  } catch (const relimp::DivergenceError& e) {
    return fail(RELIMP_ERR_DIVERGED, e.what());
  } catch (const std::domain_error& e) {
    return fail(RELIMP_ERR_UNDEFINED, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(config_context ? RELIMP_ERR_CONFIG : RELIMP_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(RELIMP_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::runtime_error& e) {
    return fail(RELIMP_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(RELIMP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RELIMP_ERR_INTERNAL, "unknown error");
  }
}

#define RELIMP_GUARD(ctx, ...)   \
  try {                          \
    g_last_error.clear();        \
    __VA_ARGS__;                 \
    return RELIMP_OK;            \
  } catch (...) {                \
    return translate(ctx);       \
  }

#define RELIMP_REQUIRE(cond, what) \
  if (!(cond)) return fail(RELIMP_ERR_INVALID_ARGUMENT, what)

bool readable(const char* path) {
  std::ifstream in(path);
  return static_cast<bool>(in);
}

relimp_status unreadable(const char* path) {
  return fail(RELIMP_ERR_IO, std::string("cannot read file '") + path + "'");
}

void write_text(const char* path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(std::string("cannot write file '") + path + "'");
  out << text;
  if (!out) throw std::runtime_error(std::string("write failed for '") + path + "'");
}

std::string read_text(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(std::string("cannot read file '") + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

relimp::ProgressFn progress() {
  if (g_log == nullptr) return {};
  return [](const std::string& line) { g_log(line.c_str(), g_log_user); };
}

relimp::BenchmarkSplit split_of(const relimp::AppConfig& app, const relimp::Dataset& data) {
  const auto& e = app.experiment;
  return relimp::prepare_benchmark(data, e.split_ratio, e.split_seed, e.label_fraction);
}

}  // namespace

extern "C" {

const char* relimp_last_error(void) { return g_last_error.c_str(); }

const char* relimp_status_name(relimp_status status) {
  switch (status) {
    case RELIMP_OK:
      return "ok";
    case RELIMP_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case RELIMP_ERR_IO:
      return "i/o error";
    case RELIMP_ERR_CONFIG:
      return "invalid config";
    case RELIMP_ERR_DATA:
      return "invalid data";
    case RELIMP_ERR_DIVERGED:
      return "training diverged";
    case RELIMP_ERR_UNDEFINED:
      return "undefined result";
    case RELIMP_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

relimp_status relimp_config_default(relimp_config** out) {
  RELIMP_REQUIRE(out, "config: null output handle");
  RELIMP_GUARD(true, *out = new relimp_config{relimp::parse_config("{}")});
}

relimp_status relimp_config_load(const char* path, relimp_config** out) {
  RELIMP_REQUIRE(path && out, "config: null argument");
  if (!readable(path)) return unreadable(path);
  RELIMP_GUARD(true, *out = new relimp_config{relimp::load_config(path)});
}

relimp_status relimp_config_parse(const char* json_text, relimp_config** out) {
  RELIMP_REQUIRE(json_text && out, "config: null argument");
  RELIMP_GUARD(true, *out = new relimp_config{relimp::parse_config(json_text)});
}

relimp_status relimp_config_set_seed(relimp_config* config, uint64_t seed) {
  RELIMP_REQUIRE(config, "config: null handle");
  config->app.generator.seed = seed;
  config->app.train.seed = seed;
  config->app.model.init_seed = seed;
  config->app.experiment.seeds = {seed};
  return RELIMP_OK;
}

relimp_status relimp_config_set_mode(relimp_config* config, relimp_mode mode) {
  RELIMP_REQUIRE(config, "config: null handle");
  RELIMP_REQUIRE(mode == RELIMP_MODE_SUPERVISED || mode == RELIMP_MODE_SSL, "config: unknown mode");
  config->app.train.mode =
      mode == RELIMP_MODE_SSL ? relimp::TrainMode::kSemiSupervised : relimp::TrainMode::kSupervised;
  return RELIMP_OK;
}

relimp_status relimp_config_set_grid(relimp_config* config, const double* alpha1, size_t n_alpha1,
                                     const double* alpha2, size_t n_alpha2) {
  RELIMP_REQUIRE(config, "config: null handle");
  RELIMP_REQUIRE((alpha1 || n_alpha1 == 0) && (alpha2 || n_alpha2 == 0), "config: null grid");
  RELIMP_GUARD(true, {
    auto& e = config->app.experiment;
    std::vector<double> a1(alpha1, alpha1 + n_alpha1), a2(alpha2, alpha2 + n_alpha2);
    if (!a1.empty()) e.grid_alpha1 = a1;
    if (!a2.empty()) e.grid_alpha2 = a2;
    for (double x : e.grid_alpha1)
      for (double y : e.grid_alpha2) relimp::PseudoLabelConfig{x, y, true}.validate();
  });
}

relimp_status relimp_config_to_json(const relimp_config* config, char** out) {
  RELIMP_REQUIRE(config && out, "config: null argument");
  RELIMP_GUARD(true, *out = dup_string(relimp::config_to_json(config->app)));
}

void relimp_config_free(relimp_config* config) { delete config; }

relimp_status relimp_dataset_generate(const relimp_config* config, relimp_dataset** out) {
  RELIMP_REQUIRE(config && out, "generate: null argument");
  RELIMP_GUARD(false, *out = new relimp_dataset{relimp::synth::generate_dataset(config->app.generator)});
}

relimp_status relimp_dataset_load(const char* path, relimp_dataset** out) {
  RELIMP_REQUIRE(path && out, "dataset: null argument");
  if (!readable(path)) return unreadable(path);
  RELIMP_GUARD(false, *out = new relimp_dataset{relimp::load_dataset(path)});
}

relimp_status relimp_dataset_save(const relimp_dataset* dataset, const char* path) {
  RELIMP_REQUIRE(dataset && path, "dataset: null argument");
  RELIMP_GUARD(false, relimp::save_dataset(dataset->data, path));
}

relimp_status relimp_dataset_size(const relimp_dataset* dataset, size_t* labeled, size_t* unlabeled) {
  RELIMP_REQUIRE(dataset, "dataset: null handle");
  if (labeled) *labeled = dataset->data.labeled.size();
  if (unlabeled) *unlabeled = dataset->data.unlabeled.size();
  return RELIMP_OK;
}

void relimp_dataset_free(relimp_dataset* dataset) { delete dataset; }

relimp_status relimp_train(const relimp_config* config, const relimp_dataset* dataset, relimp_model** out,
                           const char* log_csv_path) {
  RELIMP_REQUIRE(config && dataset && out, "train: null argument");
  RELIMP_GUARD(false, {
    const auto& app = config->app;
    const relimp::BenchmarkSplit split = split_of(app, dataset->data);
    relimp::ModelConfig mc = relimp::model_config_for(app.model, split.train.front());
    mc.init_seed = app.train.seed;
    auto model = std::make_unique<relimp::ImportanceModel>(mc);
    static const std::vector<relimp::Scene> kNone;
    const bool ssl = app.train.mode == relimp::TrainMode::kSemiSupervised;
    auto log = progress();
    relimp::TrainResult r = relimp::train(*model, split.train, ssl ? split.unlabeled : kNone, app.train,
                                          [&](const relimp::EpochLog& e) {
                                            if (log) {
                                              char buf[160];
                                              std::snprintf(buf, sizeof buf,
                                                            "epoch %zu L_labeled %.5f L_unlabeled %.5f val_F1 %.2f",
                                                            e.epoch, e.l_labeled, e.l_unlabeled, e.val_f1);
                                              log(buf);
                                            }
                                          });
    if (log_csv_path) write_text(log_csv_path, relimp::training_log_csv(r.log));
    *out = new relimp_model{std::move(model), app.train.seed};
  });
}

relimp_status relimp_model_save(const relimp_model* model, const char* path) {
  RELIMP_REQUIRE(model && path, "model: null argument");
  RELIMP_GUARD(false, relimp::save_checkpoint(model->model->params(), path));
}

relimp_status relimp_model_load(const relimp_config* config, const relimp_dataset* dataset, const char* path,
                                relimp_model** out) {
  RELIMP_REQUIRE(config && dataset && path && out, "model: null argument");
  if (!readable(path)) return unreadable(path);
  RELIMP_GUARD(false, {
    const auto& d = dataset->data;
    const relimp::Scene* sample = !d.labeled.empty() ? &d.labeled.front() : !d.unlabeled.empty() ? &d.unlabeled.front() : nullptr;
    if (sample == nullptr) throw std::invalid_argument("model: dataset is empty");
    auto model = std::make_unique<relimp::ImportanceModel>(relimp::model_config_for(config->app.model, *sample));
    relimp::load_checkpoint_into(model->params(), path);
    *out = new relimp_model{std::move(model), config->app.train.seed};
  });
}

relimp_status relimp_model_scores(const relimp_model* model, const relimp_dataset* dataset, size_t scene_index,
                                  double* scores, size_t capacity, size_t* count) {
  RELIMP_REQUIRE(model && dataset && count, "scores: null argument");
  RELIMP_REQUIRE(scene_index < dataset->data.labeled.size(), "scores: scene index out of range");
  RELIMP_REQUIRE(scores || capacity == 0, "scores: null buffer");
  RELIMP_GUARD(false, {
    const auto s = model->model->predict_scores(std::span(&dataset->data.labeled[scene_index], 1));
    *count = s.front().size();
    for (size_t i = 0; i < std::min(capacity, s.front().size()); ++i) scores[i] = s.front()[i];
  });
}

void relimp_model_free(relimp_model* model) { delete model; }

relimp_status relimp_evaluate(const relimp_config* config, const relimp_model* model, const relimp_dataset* dataset,
                              int include_baselines, const char* out_csv) {
  RELIMP_REQUIRE(config && model && dataset && out_csv, "evaluate: null argument");
  RELIMP_GUARD(false, {
    const relimp::BenchmarkSplit split = split_of(config->app, dataset->data);
    std::vector<relimp::MetricsReport> reports{relimp::evaluate_model(*model->model, split.test, "model", model->seed)};
    if (include_baselines) {
      for (auto& r : relimp::baseline_reports(split.test, model->seed)) reports.push_back(std::move(r));
    }
    write_text(out_csv, relimp::metrics_csv(reports));
  });
}

relimp_status relimp_ablate(const relimp_config* config, const relimp_dataset* dataset, const char* out_csv,
                            const char* table_csv) {
  RELIMP_REQUIRE(config && dataset && out_csv, "ablate: null argument");
  RELIMP_GUARD(false, {
    const auto& app = config->app;
    std::vector<relimp::AblationConfig> configs;
    if (app.experiment.configs.empty()) {
      configs = relimp::ablation_configs();
    } else {
      for (const auto& name : app.experiment.configs) configs.push_back(relimp::find_ablation(name));
    }
    const relimp::BenchmarkSplit split = split_of(app, dataset->data);
    auto reports = relimp::run_ablation(split, configs, app.experiment.seeds, app.model, app.train, progress());
    write_text(out_csv, relimp::metrics_csv(reports));
    if (table_csv) write_text(table_csv, relimp::summary_table_csv(reports));
  });
}

relimp_status relimp_sweep(const relimp_config* config, const relimp_dataset* dataset, const char* out_csv) {
  RELIMP_REQUIRE(config && dataset && out_csv, "sweep: null argument");
  RELIMP_GUARD(false, {
    const auto& app = config->app;
    const relimp::BenchmarkSplit split = split_of(app, dataset->data);
    auto cells = relimp::sweep_thresholds(split, app.experiment.grid_alpha1, app.experiment.grid_alpha2,
                                          app.experiment.seeds, app.model, app.train, progress());
    write_text(out_csv, relimp::sweep_csv(cells));
  });
}

relimp_status relimp_report(const char* const* csv_paths, size_t n_paths, char** out_text) {
  RELIMP_REQUIRE(csv_paths && n_paths > 0 && out_text, "report: no input files");
  for (size_t i = 0; i < n_paths; ++i) {
    RELIMP_REQUIRE(csv_paths[i], "report: null path");
    if (!readable(csv_paths[i])) return unreadable(csv_paths[i]);
  }
  RELIMP_GUARD(false, {
    std::vector<relimp::MetricsReport> all;
    for (size_t i = 0; i < n_paths; ++i) {
      for (auto& r : relimp::parse_metrics_csv(read_text(csv_paths[i]))) all.push_back(std::move(r));
    }
    *out_text = dup_string(relimp::render_summary_table(all));
  });
}

relimp_status relimp_icc_file(const relimp_config* config, const char* ratings_csv, double* out) {
  RELIMP_REQUIRE(ratings_csv && out, "icc: null argument");
  if (!readable(ratings_csv)) return unreadable(ratings_csv);
  const relimp::IccForm form = config ? config->app.experiment.icc_form : relimp::IccForm::kTwoWayRandom;
  RELIMP_GUARD(false, *out = relimp::icc(relimp::read_ratings_csv(ratings_csv), form));
}

relimp_status relimp_icc(const double* ratings, size_t n_raters, size_t n_subjects, int form, double* out) {
  RELIMP_REQUIRE(ratings && out, "icc: null argument");
  RELIMP_REQUIRE(form >= 1 && form <= 3, "icc: form must be 1, 2 or 3");
  RELIMP_GUARD(false, {
    std::vector<std::vector<double>> m(n_raters);
    for (size_t r = 0; r < n_raters; ++r) m[r].assign(ratings + r * n_subjects, ratings + (r + 1) * n_subjects);
    const relimp::IccForm f = form == 1   ? relimp::IccForm::kOneWay
                              : form == 2 ? relimp::IccForm::kTwoWayRandom
                                          : relimp::IccForm::kTwoWayMixed;
    *out = relimp::icc(m, f);
  });
}

void relimp_set_log(relimp_log_fn fn, void* user) {
  g_log = fn;
  g_log_user = user;
}

void relimp_string_free(char* s) { delete[] s; }

}  // extern "C"
