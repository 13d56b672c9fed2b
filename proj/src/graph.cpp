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

#include "relimp/graph.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace relimp {

GraphParams GraphParams::create(ParamStore& store, std::size_t feat_dim, std::size_t hidden, std::size_t rounds,
                                std::mt19937_64& rng) {
  if (rounds == 0) throw std::invalid_argument("relation graph: rounds must be >= 1");
  GraphParams g;
  g.edge = nn::Mlp::three_layer(store, "graph.edge", 2 * feat_dim, hidden, feat_dim, rng);
  g.node = nn::Mlp::three_layer(store, "graph.node", feat_dim, hidden, feat_dim, rng);
  g.rounds = rounds;
  return g;
}

GraphLayout fully_connected_layout(const std::vector<std::vector<std::size_t>>& groups, std::span<const double> keys) {
  GraphLayout layout;
  for (const auto& grp : groups)
    for (std::size_t r : grp) layout.node_count = std::max(layout.node_count, r + 1);
  if (!keys.empty() && keys.size() < layout.node_count) {
    throw std::invalid_argument("relation graph: " + std::to_string(keys.size()) + " sender keys for " +
                                std::to_string(layout.node_count) + " nodes");
  }
  layout.incoming.assign(layout.node_count, {});
  for (const auto& grp : groups) {
    std::vector<std::size_t> order = grp;
    auto key = [&](std::size_t r) { return keys.empty() ? static_cast<double>(r) : keys[r]; };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    for (std::size_t j : grp) {
      for (std::size_t k : order) {
        if (k == j) continue;
        layout.incoming[j].push_back(layout.receivers.size());
        layout.receivers.push_back(j);
        layout.senders.push_back(k);
      }
    }
  }
  return layout;
}

GraphLayout fully_connected_layout(std::size_t node_count, std::span<const double> keys) {
  std::vector<std::size_t> all(node_count);
  std::iota(all.begin(), all.end(), 0);
  return fully_connected_layout(std::vector<std::vector<std::size_t>>{all}, keys);
}

ad::Var message_passing_round(const BoundParams& p, const GraphParams& g, ad::Var nodes, const GraphLayout& layout) {
  const Tensor& v = nodes.value();
  if (v.rank() != 2 || v.dim(0) != layout.node_count) {
    throw std::invalid_argument("relation graph: node matrix " + shape_to_string(v.shape()) + " vs layout with " +
                                std::to_string(layout.node_count) + " nodes");
  }
  if (2 * v.cols() != g.edge.in_dim()) {
    throw std::invalid_argument("relation graph: node width " + std::to_string(v.cols()) +
                                " does not match edge function input " + std::to_string(g.edge.in_dim()));
  }
  ad::Var aggregated;
  if (layout.receivers.empty()) {
    aggregated = p.tape().constant(Tensor(Shape{layout.node_count, g.edge.out_dim()}, 0.0));
  } else {
    // The first edge layer acts on [v_j, v_k] as v_j W_r + v_k W_s; project
    // nodes once, then gather per edge.
    const auto& layers = g.edge.layers();
    const std::size_t f = v.cols();
    ad::Var w = p[layers[0].weight];
    ad::Var recv = ad::gather_rows(ad::matmul(nodes, ad::slice_rows(w, 0, f)), layout.receivers);
    ad::Var send = ad::gather_rows(ad::matmul(nodes, ad::slice_rows(w, f, 2 * f)), layout.senders);
    ad::Var h = ad::add(ad::add(recv, send), p[layers[0].bias]);
    for (std::size_t l = 1; l < layers.size(); ++l) h = nn::linear(p, layers[l], ad::relu(h));
    aggregated = ad::group_sum(h, layout.incoming);
  }
  return g.node(p, aggregated);
}

ad::Var run_relation_graph(const BoundParams& p, const GraphParams& g, ad::Var nodes, const GraphLayout& layout) {
  if (g.rounds == 0) throw std::invalid_argument("relation graph: rounds must be >= 1");
  ad::Var h = nodes;
  for (std::size_t r = 0; r < g.rounds; ++r) h = message_passing_round(p, g, h, layout);
  return h;
}

}  // namespace relimp
