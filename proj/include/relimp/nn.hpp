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

#include <random>
#include <span>
#include <string>
#include <vector>

#include "relimp/autodiff.hpp"
#include "relimp/params.hpp"

namespace relimp::nn {

struct Linear {
  ParamId weight = 0;
  ParamId bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

// Stack of linear layers with ReLU between them (none after the last).
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& widths, std::mt19937_64& rng);

  // Three linear layers: in -> hidden -> hidden -> out.
  static Mlp three_layer(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
                         std::size_t out, std::mt19937_64& rng);

  ad::Var operator()(const BoundParams& p, ad::Var x) const;

  std::size_t in_dim() const { return layers_.front().in; }
  std::size_t out_dim() const { return layers_.back().out; }
  const std::vector<Linear>& layers() const { return layers_; }

 private:
  std::vector<Linear> layers_;
};

ad::Var linear(const BoundParams& p, const Linear& layer, ad::Var x);

struct LstmWeights {
  ParamId input_weight = 0;   // D x 4H
  ParamId hidden_weight = 0;  // H x 4H
  ParamId bias = 0;           // 4H
  std::size_t input = 0;
  std::size_t hidden = 0;

  static LstmWeights create(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t hidden,
                            std::mt19937_64& rng);
};

struct LstmState {
  ad::Var h;
  ad::Var c;
};

// One step of a standard four-gate LSTM (gate order i, f, g, o) over a batch of
// rows: x is B x D, h and c are B x H.
LstmState lstm_cell(const BoundParams& p, const LstmWeights& w, ad::Var x, const LstmState& state);

// Single-layer LSTM followed by a three-layer MLP head on the final hidden state.
class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  SequenceEncoder(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t lstm_hidden,
                  std::size_t mlp_hidden, std::size_t out, std::mt19937_64& rng);

  // steps[t] is B x input; returns B x out. Requires exactly `expected_steps`
  // steps when that is non-zero.
  ad::Var operator()(const BoundParams& p, std::span<const ad::Var> steps, std::size_t expected_steps = 0) const;

  std::size_t input_dim() const { return lstm_.input; }
  std::size_t out_dim() const { return head_.out_dim(); }
  const LstmWeights& lstm() const { return lstm_; }
  const Mlp& head() const { return head_; }

 private:
  LstmWeights lstm_;
  Mlp head_;
};

}  // namespace relimp::nn
