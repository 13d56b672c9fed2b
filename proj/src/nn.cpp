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

#include "relimp/nn.hpp"

#include <stdexcept>

namespace relimp::nn {

Mlp::Mlp(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& widths,
         std::mt19937_64& rng) {
  if (widths.size() < 2) throw std::invalid_argument("mlp: needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    Linear l;
    l.in = widths[i];
    l.out = widths[i + 1];
    const std::string base = prefix + ".l" + std::to_string(i);
    l.weight = store.add_weight(base + ".w", l.in, l.out, rng);
    l.bias = store.add_bias(base + ".b", l.out);
    layers_.push_back(l);
  }
}

Mlp Mlp::three_layer(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
                     std::size_t out, std::mt19937_64& rng) {
  return Mlp(store, prefix, {in, hidden, hidden, out}, rng);
}

ad::Var linear(const BoundParams& p, const Linear& layer, ad::Var x) {
  return ad::add(ad::matmul(x, p[layer.weight]), p[layer.bias]);
}

ad::Var Mlp::operator()(const BoundParams& p, ad::Var x) const {
  if (x.value().rank() != 2 || x.value().cols() != in_dim()) {
    throw std::invalid_argument("mlp: input shape " + shape_to_string(x.shape()) + " does not match input width " +
                                std::to_string(in_dim()));
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = linear(p, layers_[i], x);
    if (i + 1 < layers_.size()) x = ad::relu(x);
  }
  return x;
}

LstmWeights LstmWeights::create(ParamStore& store, const std::string& prefix, std::size_t input,
                                std::size_t hidden, std::mt19937_64& rng) {
  LstmWeights w;
  w.input = input;
  w.hidden = hidden;
  w.input_weight = store.add_weight(prefix + ".wx", input, 4 * hidden, rng);
  w.hidden_weight = store.add_weight(prefix + ".wh", hidden, 4 * hidden, rng);
  Tensor b(Shape{4 * hidden}, 0.0);
  // forget gate starts open
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;
  w.bias = store.add(prefix + ".b", std::move(b));
  return w;
}

LstmState lstm_cell(const BoundParams& p, const LstmWeights& w, ad::Var x, const LstmState& state) {
  const Tensor& xv = x.value();
  const Tensor& hv = state.h.value();
  const Tensor& cv = state.c.value();
  if (xv.rank() != 2 || xv.cols() != w.input) {
    throw std::invalid_argument("lstm_cell: input shape " + shape_to_string(xv.shape()) + " vs input width " +
                                std::to_string(w.input));
  }
  if (hv.shape() != Shape{xv.dim(0), w.hidden} || cv.shape() != hv.shape()) {
    throw std::invalid_argument("lstm_cell: state shapes " + shape_to_string(hv.shape()) + "/" +
                                shape_to_string(cv.shape()) + " vs batch " + std::to_string(xv.dim(0)) +
                                " hidden " + std::to_string(w.hidden));
  }
  const std::size_t h = w.hidden;
  ad::Var hc = ad::lstm_step(x, state.h, state.c, p[w.input_weight], p[w.hidden_weight], p[w.bias]);
  return {ad::slice(hc, 0, h), ad::slice(hc, h, 2 * h)};
}

SequenceEncoder::SequenceEncoder(ParamStore& store, const std::string& prefix, std::size_t input,
                                 std::size_t lstm_hidden, std::size_t mlp_hidden, std::size_t out,
                                 std::mt19937_64& rng)
    : lstm_(LstmWeights::create(store, prefix + ".lstm", input, lstm_hidden, rng)),
      head_(Mlp::three_layer(store, prefix + ".head", lstm_hidden, mlp_hidden, out, rng)) {}

ad::Var SequenceEncoder::operator()(const BoundParams& p, std::span<const ad::Var> steps,
                                    std::size_t expected_steps) const {
  if (steps.empty()) throw std::invalid_argument("sequence encoder: empty stream");
  if (expected_steps != 0 && steps.size() != expected_steps) {
    throw std::invalid_argument("sequence encoder: stream has " + std::to_string(steps.size()) +
                                " rows, expected " + std::to_string(expected_steps));
  }
  ad::Tape& tape = p.tape();
  const std::size_t batch = steps.front().value().dim(0);
  LstmState state{tape.constant(Tensor(Shape{batch, lstm_.hidden}, 0.0)),
                  tape.constant(Tensor(Shape{batch, lstm_.hidden}, 0.0))};
  for (const auto& x : steps) state = lstm_cell(p, lstm_, x, state);
  return head_(p, state.h);
}

}  // namespace relimp::nn
