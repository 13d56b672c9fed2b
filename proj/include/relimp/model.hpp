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
#include <random>
#include <span>
#include <vector>

#include "relimp/encoders.hpp"
#include "relimp/graph.hpp"
#include "relimp/heads.hpp"

namespace relimp {

struct ModelConfig {
  EncoderDims encoder;
  std::size_t graph_hidden = 128;
  std::size_t mp_rounds = 2;
  std::size_t cls_hidden = 256;
  std::size_t small_hidden = 64;
  std::size_t large_hidden = 256;
  double tau = 0.1;
  std::size_t t_future = 4;
  // Fixed unit scaling: ego states enter in tens of meters, trajectories
  // leave in meters.
  double ego_input_scale = 0.1;
  double trajectory_output_scale = 10.0;
  bool use_intention = true;
  bool use_relation_graph = true;
  std::uint64_t init_seed = 0;

  // Hidden 32 / feature 32 with proportionally smaller heads.
  static ModelConfig desk();
  void validate() const;
};

// Input widths and horizon taken from the data rather than the config.
ModelConfig model_config_for(const ModelConfig& base, const Scene& sample);

enum class PoolMode {
  kNone,    // importance scores only
  kGumbel,  // training branch: Gumbel-softmax weights
  kHard,    // testing branch: predicted-important mean
};

struct ForwardResult {
  BatchInputs inputs;
  ad::Var objects;  // M x F
  ad::Var scores;   // M x 1
  BehaviorPrediction behavior;  // unset for PoolMode::kNone
};

class ImportanceModel {
 public:
  explicit ImportanceModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const HeadParams& heads() const { return heads_; }

  // Scenes are processed as one batch. `rng` supplies the Gumbel noise in
  // kGumbel mode and is otherwise unused.
  ForwardResult forward(const BoundParams& p, std::span<const Scene* const> scenes, PoolMode mode,
                        std::mt19937_64* rng = nullptr) const;

  // Inference-only scores per scene, in object order.
  std::vector<std::vector<double>> predict_scores(std::span<const Scene> scenes, std::size_t batch_size = 64) const;

 private:
  ModelConfig config_;
  ParamStore params_;
  EncoderParams encoders_;
  GraphParams graph_;
  HeadParams heads_;
};

// Per-row sender keys: rank of each object's id within its scene, so the
// relation graph aggregates in an order independent of storage order.
std::vector<double> object_id_keys(std::span<const Scene* const> scenes);

}  // namespace relimp
