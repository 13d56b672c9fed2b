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

#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "relimp/autodiff.hpp"
#include "relimp/tensor.hpp"

namespace relimp {

using ParamId = std::size_t;

// Ordered, named parameter collection.
class ParamStore {
 public:
  ParamId add(const std::string& name, Tensor value);
  // Glorot-uniform weight of shape fan_in x fan_out.
  ParamId add_weight(const std::string& name, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
  ParamId add_bias(const std::string& name, std::size_t width, double fill = 0.0);

  std::size_t size() const { return values_.size(); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  Tensor& value(ParamId id) { return values_.at(id); }
  const Tensor& value(ParamId id) const { return values_.at(id); }
  ParamId find(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t scalar_count() const;
  void fill(double v);

  bool operator==(const ParamStore& other) const {
    return names_ == other.names_ && values_ == other.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, ParamId> index_;
};

// Parameters bound as leaves on one tape for one forward/backward pass.
class BoundParams {
 public:
  // Untrainable bindings record the parameters as constants (inference).
  BoundParams(ad::Tape& tape, const ParamStore& store, bool trainable = true);
  ad::Var operator[](ParamId id) const { return vars_.at(id); }
  ad::Tape& tape() const { return *tape_; }
  // Gradients in ParamStore order (after tape.backward()).
  std::vector<Tensor> gradients() const;

 private:
  ad::Tape* tape_;
  std::vector<ad::Var> vars_;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Bias-corrected Adam update applied in place.
  void step(ParamStore& params, const std::vector<Tensor>& grads);

  long step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }
  void set_lr(double lr) { options_.lr = lr; }

 private:
  AdamOptions options_;
  long step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// Checkpoint: one line of JSON manifest [{name, shape, byte_offset}], a '\n',
// then the little-endian float64 payload. Offsets are relative to the payload.
void save_checkpoint(const ParamStore& params, const std::filesystem::path& path);
ParamStore load_checkpoint(const std::filesystem::path& path);
// Loads values into an existing store; names and shapes must match exactly.
void load_checkpoint_into(ParamStore& params, const std::filesystem::path& path);

}  // namespace relimp
