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

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relimp/ssl.hpp"

namespace relimp {

struct AblationConfig {
  std::string name;
  TrainMode mode = TrainMode::kSupervised;
  bool use_intention = true;
  bool use_relation_graph = true;
  bool use_auxiliary = true;
  bool use_ranking_pseudo = false;
  bool use_loss_weighting = false;

  // Ranking and weighting flags require semi-supervised mode.
  void validate() const;
};

// Ours-S-1, Ours-S-2, Ours-S-3, Ours-S, Ours-SS-1, Ours-SS-2, Ours-SS-3, Ours-SS.
std::vector<AblationConfig> ablation_configs();
AblationConfig find_ablation(std::string_view name);
void apply_ablation(const AblationConfig& ablation, ModelConfig& model, TrainConfig& train);

struct BenchmarkSplit {
  std::vector<Scene> train;
  std::vector<Scene> test;
  std::vector<Scene> unlabeled;
};

// Splits the labeled partition; train scenes past label_fraction lose their
// importance labels and join the unlabeled pool.
BenchmarkSplit prepare_benchmark(const Dataset& data, double split_ratio, std::uint64_t split_seed,
                                 double label_fraction = 1.0);

struct TrainedModel {
  ImportanceModel model;
  TrainResult result;
};

// Model init and training streams both derive from `seed`.
TrainedModel train_ablation(const BenchmarkSplit& split, const AblationConfig& ablation, const ModelConfig& model,
                            const TrainConfig& train, std::uint64_t seed);

using ProgressFn = std::function<void(const std::string&)>;

std::vector<MetricsReport> run_ablation(const BenchmarkSplit& split, const std::vector<AblationConfig>& configs,
                                        const std::vector<std::uint64_t>& seeds, const ModelConfig& model,
                                        const TrainConfig& train, const ProgressFn& progress = {});

MetricsReport baseline_report(std::span<const Scene> scenes, BaselineKind kind, std::uint64_t seed = 0);
std::vector<MetricsReport> baseline_reports(std::span<const Scene> scenes, std::uint64_t seed = 0);

std::string metrics_csv(const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> parse_metrics_csv(std::string_view text);

struct SummaryStat {
  double mean = 0;
  double stddev = 0;  // sample standard deviation; 0 for a single seed
  std::size_t n = 0;
};

SummaryStat summarize(std::span<const double> values);

// Rows: slice x metric. Columns: configs in first-appearance order, each as
// a mean and a stddev column over seeds.
std::string summary_table_csv(const std::vector<MetricsReport>& reports);
std::string render_summary_table(const std::vector<MetricsReport>& reports);

struct SweepCell {
  double alpha1 = 0;
  double alpha2 = 0;
  MetricsReport report;
};

// Ours-SS per grid cell and seed.
std::vector<SweepCell> sweep_thresholds(const BenchmarkSplit& split, const std::vector<double>& alpha1,
                                        const std::vector<double>& alpha2, const std::vector<std::uint64_t>& seeds,
                                        const ModelConfig& model, const TrainConfig& train,
                                        const ProgressFn& progress = {});

// One row per grid cell: seed mean and stddev of overall accuracy and F1.
std::string sweep_csv(const std::vector<SweepCell>& cells);

}  // namespace relimp
