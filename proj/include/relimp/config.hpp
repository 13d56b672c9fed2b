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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "relimp/ssl.hpp"
#include "relimp/synth.hpp"

namespace relimp {

struct ExperimentConfig {
  double split_ratio = 0.8;     // train share of the labeled partition
  std::uint64_t split_seed = 0;
  double label_fraction = 1.0;  // share of train scenes keeping importance labels
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<std::string> configs;  // ablation rows; empty means every ablation row
  std::vector<double> grid_alpha1{0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> grid_alpha2{0.5, 0.6, 0.7, 0.8, 0.9};
  IccForm icc_form = IccForm::kTwoWayRandom;
};

struct AppConfig {
  synth::GenConfig generator;
  ModelConfig model;
  TrainConfig train;
  ExperimentConfig experiment;

  void validate() const;
};

// Recognized top-level sections: generator, model, train, experiment. Unknown
// keys are rejected. `model.preset` ("full" or "desk") seeds the model
// section before the explicit keys apply.
AppConfig parse_config(std::string_view json_text);
AppConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const AppConfig& config);

IccForm parse_icc_form(std::string_view s);

}  // namespace relimp
