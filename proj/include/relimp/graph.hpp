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
#include <vector>

#include "relimp/nn.hpp"

namespace relimp {

// Edge function f_e and node function f_v, shared by every edge/node and tied
// across message-passing rounds.
struct GraphParams {
  nn::Mlp edge;  // [v_receiver, v_sender] (2F) -> F
  nn::Mlp node;  // F -> F
  std::size_t rounds = 2;

  static GraphParams create(ParamStore& store, std::size_t feat_dim, std::size_t hidden, std::size_t rounds,
                            std::mt19937_64& rng);
};

// Directed edges of fully-connected per-scene graphs over a stacked node matrix.
// incoming[j] lists the edges into node j ordered by ascending sender key.
struct GraphLayout {
  std::size_t node_count = 0;
  std::vector<std::size_t> receivers;
  std::vector<std::size_t> senders;
  std::vector<std::vector<std::size_t>> incoming;
};

// One fully-connected graph per group; keys[r] orders senders for node r
// (row index when keys is empty).
GraphLayout fully_connected_layout(const std::vector<std::vector<std::size_t>>& groups,
                                   std::span<const double> keys = {});
GraphLayout fully_connected_layout(std::size_t node_count, std::span<const double> keys = {});

// e_jk = f_e([v_j, v_k]) for every ordered pair j != k in a group;
// out_j = f_v(sum_k e_jk). A node with no neighbours gets f_v(0).
ad::Var message_passing_round(const BoundParams& p, const GraphParams& g, ad::Var nodes, const GraphLayout& layout);

// Applies `g.rounds` rounds, each consuming the previous round's output.
ad::Var run_relation_graph(const BoundParams& p, const GraphParams& g, ad::Var nodes, const GraphLayout& layout);

}  // namespace relimp
