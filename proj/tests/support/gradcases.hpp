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

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "relimp/params.hpp"

namespace relimp::testing {

struct OpInstance {
  TapeFn fn;
  std::vector<Tensor> inputs;
};

struct OpCase {
  std::string name;
  std::function<OpInstance(std::mt19937_64&)> make;
};

// One entry per differentiable op, with random shapes and kink-free inputs.
std::vector<OpCase> op_gradient_cases();

using ParamLoss = std::function<ad::Var(const BoundParams&)>;

// Central differences on parameter entries of `store`. coords = 0 checks every
// entry; otherwise that many random entries plus one random direction.
GradCheck param_finite_difference_check(ParamStore& store, const ParamLoss& loss, std::mt19937_64& rng,
                                        std::size_t coords = 0, double h = 1e-6);

// lstm_cell on random inputs, weights drawn into a fresh store.
GradCheck lstm_cell_check(std::mt19937_64& rng);

// Encoder, relation graph, heads and both losses on a tiny model with
// frozen Gumbel noise.
GradCheck pipeline_check(std::mt19937_64& rng, std::size_t coords = 20);

}  // namespace relimp::testing
