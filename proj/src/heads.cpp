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

#include "relimp/heads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace relimp {

HeadParams HeadParams::create(ParamStore& store, const HeadDims& d, double tau, std::mt19937_64& rng) {
  if (!(tau > 0)) throw std::invalid_argument("heads: gumbel temperature must be positive");
  HeadParams h;
  h.tau = tau;
  h.t_future = d.t_future;
  h.classifier = nn::Mlp::three_layer(store, "head.importance", d.feature_dim, d.cls_hidden, 1, rng);
  h.action_trunk = nn::Mlp::three_layer(store, "head.action.trunk", d.behavior_dim, d.small_hidden, d.small_hidden, rng);
  h.action_out = nn::Mlp::three_layer(store, "head.action.out", d.small_hidden, d.large_hidden, kNumActions, rng);
  h.trajectory_trunk =
      nn::Mlp::three_layer(store, "head.trajectory.trunk", d.behavior_dim, d.small_hidden, d.small_hidden, rng);
  h.trajectory_out =
      nn::Mlp::three_layer(store, "head.trajectory.out", d.small_hidden, d.large_hidden, 2 * d.t_future, rng);
  return h;
}

Tensor intent_encoding(Intention intention) {
  Tensor t(Shape{1, kNumIntentions}, 0.0);
  t[static_cast<std::size_t>(intention)] = 1.0;
  return t;
}

ad::Var assemble_comprehensive_feature(ad::Var object, ad::Var relation, ad::Var global, ad::Var ego, ad::Var intent) {
  std::vector<ad::Var> parts{object};
  if (relation.valid()) parts.push_back(relation);
  parts.push_back(global);
  parts.push_back(ego);
  parts.push_back(intent);
  return ad::concat(parts);
}

ad::Var importance_score(const BoundParams& p, const HeadParams& heads, ad::Var features) {
  return ad::sigmoid(heads.classifier(p, features));
}

double sample_gumbel(std::mt19937_64& rng) {
  // u in the open interval (0, 1)
  const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return -std::log(-std::log(u));
}

GumbelNoise draw_gumbel(std::mt19937_64& rng, std::size_t count) {
  GumbelNoise g;
  g.important.resize(count);
  g.unimportant.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    g.important[j] = sample_gumbel(rng);
    g.unimportant[j] = sample_gumbel(rng);
  }
  return g;
}

ad::Var gumbel_weight(ad::Var scores, double tau, const GumbelNoise& noise) {
  if (!(tau > 0)) throw std::invalid_argument("gumbel_weight: temperature must be positive");
  const Tensor& s = scores.value();
  const std::size_t m = s.size();
  if (noise.important.size() != m || noise.unimportant.size() != m) {
    throw std::invalid_argument("gumbel_weight: noise count does not match score count");
  }
  if (s.shape() != Shape{m, 1}) throw std::invalid_argument("gumbel_weight: scores must be M x 1");
  ad::Tape& tape = *scores.tape;
  ad::Var sc = ad::clamp(scores, kScoreClamp, 1.0 - kScoreClamp);
  Tensor g1(Shape{m, 1}, noise.important), g0(Shape{m, 1}, noise.unimportant);
  ad::Var l1 = ad::add(ad::log(sc), tape.constant(std::move(g1)));
  ad::Var l0 = ad::add(ad::log(ad::add_scalar(ad::scale(sc, -1.0), 1.0)), tape.constant(std::move(g0)));
  ad::Var probs = ad::softmax(ad::scale(ad::concat({l1, l0}), 1.0 / tau));
  return ad::slice(probs, 0, 1);
}

double gumbel_weight(double score, double tau, double g_important, double g_unimportant) {
  if (!(tau > 0)) throw std::invalid_argument("gumbel_weight: temperature must be positive");
  const double s = std::clamp(score, kScoreClamp, 1.0 - kScoreClamp);
  const double a = (std::log(s) + g_important) / tau;
  const double b = (std::log(1.0 - s) + g_unimportant) / tau;
  const double m = std::max(a, b);
  const double ea = std::exp(a - m), eb = std::exp(b - m);
  return ea / (ea + eb);
}

ad::Var pool_important_train(ad::Var weights, ad::Var objects, const std::vector<std::vector<std::size_t>>& groups) {
  ad::Tape& tape = *objects.tape;
  ad::Var pooled = ad::group_sum(ad::scale_rows(objects, weights), groups);
  Tensor inv(Shape{groups.size(), 1}, 0.0);
  for (std::size_t b = 0; b < groups.size(); ++b) {
    if (groups[b].empty()) throw std::invalid_argument("pool_important_train: empty scene");
    inv[b] = 1.0 / static_cast<double>(groups[b].size());
  }
  return ad::scale_rows(pooled, tape.constant(std::move(inv)));
}

ad::Var pool_important_test(std::span<const double> scores, ad::Var objects,
                            const std::vector<std::vector<std::size_t>>& groups) {
  const Tensor& v = objects.value();
  if (v.rank() != 2 || scores.size() != v.dim(0)) {
    throw std::invalid_argument("pool_important_test: " + std::to_string(scores.size()) + " scores for objects " +
                                shape_to_string(v.shape()));
  }
  ad::Tape& tape = *objects.tape;
  Tensor mask(Shape{scores.size(), 1}, 0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) mask[j] = predict_label(scores[j]);
  Tensor inv(Shape{groups.size(), 1}, 0.0);
  for (std::size_t b = 0; b < groups.size(); ++b) {
    std::size_t n_hat = 0;
    for (std::size_t r : groups[b]) n_hat += static_cast<std::size_t>(mask[r]);
    inv[b] = n_hat == 0 ? 0.0 : 1.0 / static_cast<double>(n_hat);
  }
  ad::Var pooled = ad::group_sum(ad::scale_rows(objects, tape.constant(std::move(mask))), groups);
  return ad::scale_rows(pooled, tape.constant(std::move(inv)));
}

BehaviorPrediction predict_ego_behavior(const BoundParams& p, const HeadParams& heads, ad::Var pooled, ad::Var ego,
                                        ad::Var global, ad::Var intent) {
  ad::Var input = ad::concat({pooled, ego, global, intent});
  BehaviorPrediction out;
  out.action_logits = heads.action_out(p, ad::relu(heads.action_trunk(p, input)));
  out.trajectory = heads.trajectory_out(p, ad::relu(heads.trajectory_trunk(p, input)));
  return out;
}

}  // namespace relimp
