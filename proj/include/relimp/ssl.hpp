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
#include <vector>

#include "relimp/metrics.hpp"
#include "relimp/model.hpp"

namespace relimp {

struct LossWeights {
  double lambda = 0.5;  // auxiliary weight
  double beta = 1.0;    // trajectory weight within the auxiliary term
  double trajectory_unit = 10.0;  // meters per unit of trajectory error
};

struct GammaSchedule {
  enum class Shape { kExponential, kLinear };
  double init = 0.001;
  double max = 1.0;
  double ramp_epochs = 50;
  Shape shape = Shape::kExponential;

  void validate() const;
  // Weight at a global iteration; reaches `max` after ramp_epochs * iterations_per_epoch.
  double at(long iteration, long iterations_per_epoch) const;
};

struct PseudoLabelConfig {
  double alpha1 = 0.8;
  double alpha2 = 0.8;
  bool ranking = true;  // false: plain s > 0.5

  void validate() const;
};

// Two-stage rule: confident thresholding, then ratio-to-maximum over the
// unresolved objects.
std::vector<int> generate_pseudo_labels(std::span<const double> scores, double alpha1, double alpha2);
std::vector<int> generate_pseudo_labels(std::span<const double> scores, const PseudoLabelConfig& config);

std::vector<double> object_weights(std::span<const double> scores);
// -sum p log p with 0 log 0 = 0.
double entropy(std::span<const double> p);
// 1 - H(w) / H(uniform); 1 for a single object.
double case_weight(std::span<const double> w);

struct PseudoLabeledScene {
  std::vector<int> labels;
  std::vector<double> weights;
  double case_weight = 1.0;
};

// Without weighting: w uniform, epsilon = 1.
PseudoLabeledScene pseudo_label_scene(std::span<const double> scores, const PseudoLabelConfig& config,
                                      bool use_loss_weighting);

struct LossTerms {
  ad::Var total;
  double importance = 0;
  double auxiliary = 0;
};

// Cross-entropy of the action logits plus beta * squared trajectory error
// (in trajectory units), averaged over scenes.
ad::Var auxiliary_loss(const BehaviorPrediction& behavior, std::span<const Scene* const> scenes, double beta,
                       double trajectory_unit = 1.0);

// Mean over scenes of the mean binary CE, plus lambda * auxiliary. With
// lambda = 0 the behaviour heads need not have run.
LossTerms supervised_loss(const ForwardResult& forward, std::span<const Scene* const> scenes,
                          const LossWeights& weights);

// Mean over scenes of eps_i * sum_j w_j (y~_j - s_j)^2, plus lambda * auxiliary.
LossTerms unlabeled_loss(const ForwardResult& forward, std::span<const Scene* const> scenes,
                         std::span<const PseudoLabeledScene> pseudo, const LossWeights& weights);

enum class TrainMode { kSupervised, kSemiSupervised };
enum class PseudoRefresh { kEpoch, kIteration };

std::string_view to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view s);

struct TrainConfig {
  TrainMode mode = TrainMode::kSupervised;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  double lr = 1e-4;
  LossWeights loss;
  bool use_auxiliary = true;  // false: lambda = 0
  PseudoLabelConfig pseudo;
  bool use_loss_weighting = true;
  PseudoRefresh refresh = PseudoRefresh::kEpoch;
  GammaSchedule gamma;
  std::size_t patience = 10;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double l_labeled = 0;
  double l_unlabeled = 0;
  double gamma = 0;
  double val_accuracy = 0;
  double val_f1 = 0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_f1 = 0;
  bool stopped_early = false;
};

// Raised when a loss becomes NaN or infinite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Holds out val_fraction of `labeled` for early stopping and restores the
// best-validation parameters before returning.
TrainResult train(ImportanceModel& model, const std::vector<Scene>& labeled, const std::vector<Scene>& unlabeled,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

std::string training_log_csv(const std::vector<EpochLog>& log);

std::vector<std::vector<int>> predict_labels(const ImportanceModel& model, std::span<const Scene> scenes);
MetricsReport evaluate_model(const ImportanceModel& model, std::span<const Scene> scenes,
                             const std::string& config = "", std::uint64_t seed = 0);

}  // namespace relimp
