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

// Command-line front end. Links only the C interface.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relimp/relimp.h"

namespace {

// Exit codes.
constexpr int kUsage = 2;
constexpr int kIo = 3;
constexpr int kConfig = 4;
constexpr int kData = 5;
constexpr int kFailure = 1;

struct Options {
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string mode;
  bool baselines = false;
  std::vector<double> grid_a1;
  std::vector<double> grid_a2;
  std::vector<std::string> inputs;
};

class Failure {
 public:
  explicit Failure(relimp_status s) : status(s) {}
  relimp_status status;
};

void check(relimp_status s) {
  if (s != RELIMP_OK) throw Failure(s);
}

int exit_code(relimp_status s) {
  switch (s) {
    case RELIMP_ERR_IO:
      return kIo;
    case RELIMP_ERR_CONFIG:
      return kConfig;
    case RELIMP_ERR_DATA:
      return kData;
    default:
      return kFailure;
  }
}

const char* prefix(relimp_status s) {
  switch (s) {
    case RELIMP_ERR_IO:
      return "unreadable or unwritable file";
    case RELIMP_ERR_CONFIG:
      return "invalid config";
    case RELIMP_ERR_DATA:
      return "invalid dataset";
    case RELIMP_ERR_DIVERGED:
      return "training diverged";
    case RELIMP_ERR_UNDEFINED:
      return "undefined result";
    default:
      return relimp_status_name(s);
  }
}

using ConfigPtr = std::unique_ptr<relimp_config, decltype(&relimp_config_free)>;
using DatasetPtr = std::unique_ptr<relimp_dataset, decltype(&relimp_dataset_free)>;
using ModelPtr = std::unique_ptr<relimp_model, decltype(&relimp_model_free)>;

ConfigPtr make_config(const Options& o) {
  relimp_config* c = nullptr;
  check(o.config.empty() ? relimp_config_default(&c) : relimp_config_load(o.config.c_str(), &c));
  ConfigPtr config(c, relimp_config_free);
  if (o.seed) check(relimp_config_set_seed(c, *o.seed));
  if (o.mode == "ssl") check(relimp_config_set_mode(c, RELIMP_MODE_SSL));
  if (o.mode == "supervised") check(relimp_config_set_mode(c, RELIMP_MODE_SUPERVISED));
  if (!o.grid_a1.empty() || !o.grid_a2.empty()) {
    check(relimp_config_set_grid(c, o.grid_a1.data(), o.grid_a1.size(), o.grid_a2.data(), o.grid_a2.size()));
  }
  return config;
}

DatasetPtr load_data(const Options& o) {
  relimp_dataset* d = nullptr;
  check(relimp_dataset_load(o.data.c_str(), &d));
  return DatasetPtr(d, relimp_dataset_free);
}

void log_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

int run(const std::string& command, const Options& o) {
  if (command == "generate") {
    ConfigPtr c = make_config(o);
    relimp_dataset* d = nullptr;
    check(relimp_dataset_generate(c.get(), &d));
    DatasetPtr data(d, relimp_dataset_free);
    check(relimp_dataset_save(d, o.out.c_str()));
    std::size_t labeled = 0, unlabeled = 0;
    check(relimp_dataset_size(d, &labeled, &unlabeled));
    std::printf("wrote %zu labeled and %zu unlabeled scenes to %s\n", labeled, unlabeled, o.out.c_str());
  } else if (command == "train") {
    ConfigPtr c = make_config(o);
    DatasetPtr data = load_data(o);
    const std::string log = o.out.empty() ? o.checkpoint + ".log.csv" : o.out;
    relimp_model* m = nullptr;
    check(relimp_train(c.get(), data.get(), &m, log.c_str()));
    ModelPtr model(m, relimp_model_free);
    check(relimp_model_save(m, o.checkpoint.c_str()));
    std::printf("checkpoint %s, training log %s\n", o.checkpoint.c_str(), log.c_str());
  } else if (command == "eval") {
    ConfigPtr c = make_config(o);
    DatasetPtr data = load_data(o);
    relimp_model* m = nullptr;
    check(relimp_model_load(c.get(), data.get(), o.checkpoint.c_str(), &m));
    ModelPtr model(m, relimp_model_free);
    check(relimp_evaluate(c.get(), m, data.get(), o.baselines ? 1 : 0, o.out.c_str()));
    std::printf("metrics %s\n", o.out.c_str());
  } else if (command == "ablate") {
    ConfigPtr c = make_config(o);
    DatasetPtr data = load_data(o);
    const std::string table = o.out + ".table.csv";
    check(relimp_ablate(c.get(), data.get(), o.out.c_str(), table.c_str()));
    const char* paths[] = {o.out.c_str()};
    char* text = nullptr;
    check(relimp_report(paths, 1, &text));
    std::printf("%s", text);
    relimp_string_free(text);
  } else if (command == "sweep") {
    ConfigPtr c = make_config(o);
    DatasetPtr data = load_data(o);
    check(relimp_sweep(c.get(), data.get(), o.out.c_str()));
    std::printf("sweep grid %s\n", o.out.c_str());
  } else if (command == "report") {
    std::vector<const char*> paths;
    for (const auto& p : o.inputs) paths.push_back(p.c_str());
    char* text = nullptr;
    check(relimp_report(paths.data(), paths.size(), &text));
    std::string s(text);
    relimp_string_free(text);
    if (o.out.empty()) {
      std::printf("%s", s.c_str());
    } else {
      std::FILE* f = std::fopen(o.out.c_str(), "wb");
      if (!f) {
        std::fprintf(stderr, "error: unreadable or unwritable file: cannot write file '%s'\n", o.out.c_str());
        return kIo;
      }
      std::fputs(s.c_str(), f);
      std::fclose(f);
    }
  } else if (command == "icc") {
    ConfigPtr c = make_config(o);
    double v = 0;
    check(relimp_icc_file(c.get(), o.data.c_str(), &v));
    std::printf("ICC %.6f\n", v);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relimp: relation-aware object importance with semi-supervised training"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", o.config, "JSON config file"); };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Seed for generator, init and training"); };
  auto add_data = [&](CLI::App* sub, const char* what) { sub->add_option("--data", o.data, what)->required(); };
  auto add_mode = [&](CLI::App* sub) {
    sub->add_option("--mode", o.mode, "Training mode")->check(CLI::IsMember({"supervised", "ssl"}));
  };

  auto* gen = app.add_subcommand("generate", "Write a synthetic JSONL dataset");
  add_config(gen);
  add_seed(gen);
  gen->add_option("--out", o.out, "Dataset path")->required();

  auto* train = app.add_subcommand("train", "Train a model; writes a checkpoint and a training-log CSV");
  add_config(train);
  add_data(train, "Dataset path");
  add_seed(train);
  add_mode(train);
  train->add_option("--checkpoint", o.checkpoint, "Checkpoint to write")->required();
  train->add_option("--out", o.out, "Training-log CSV (default <checkpoint>.log.csv)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_config(eval);
  add_data(eval, "Dataset path");
  add_seed(eval);
  add_mode(eval);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint to read")->required();
  eval->add_option("--out", o.out, "Metrics CSV")->required();
  eval->add_flag("--baselines", o.baselines, "Add B-1, B-2 and B-3 rows");

  auto* ablate = app.add_subcommand("ablate", "Run the ablation matrix over the configured seeds");
  add_config(ablate);
  add_data(ablate, "Dataset path");
  add_seed(ablate);
  ablate->add_option("--out", o.out, "Per-seed metrics CSV; the summary goes to <out>.table.csv")->required();

  auto* sweep = app.add_subcommand("sweep", "Pseudo-label threshold grid");
  add_config(sweep);
  add_data(sweep, "Dataset path");
  add_seed(sweep);
  sweep->add_option("--grid-a1", o.grid_a1, "alpha1 values")->delimiter(',');
  sweep->add_option("--grid-a2", o.grid_a2, "alpha2 values")->delimiter(',');
  sweep->add_option("--out", o.out, "Grid CSV")->required();

  auto* report = app.add_subcommand("report", "Summary table from metrics CSV files");
  report->add_option("inputs", o.inputs, "Metrics CSV files")->required();
  report->add_option("--out", o.out, "Write the table here instead of stdout");

  auto* icc = app.add_subcommand("icc", "ICC of a subject,rater,value ratings CSV");
  add_config(icc);
  add_data(icc, "Ratings CSV");

  // Unknown flags take precedence over missing required options.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--", 0) != 0 || arg == "--help") continue;
    const std::string name = arg.substr(0, arg.find('='));
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) {
      for (const auto* opt : sub->get_options()) known = known || opt->check_lname(name.substr(2));
    }
    if (!known) {
      std::cerr << "error: unknown flag: " << name << "\n";
      return kUsage;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ExtrasError& e) {
    std::cerr << "error: unknown flag or argument: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kUsage;
  }

  relimp_set_log(log_line, nullptr);
  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const Failure& f) {
    std::cerr << "error: " << prefix(f.status) << ": " << relimp_last_error() << "\n";
    return exit_code(f.status);
  }
}
