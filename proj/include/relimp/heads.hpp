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
#include "relimp/scene.hpp"

namespace relimp {

struct HeadDims {
  std::size_t feature_dim = 515;    // dim(o_j)
  std::size_t behavior_dim = 387;   // dim([v_imp, v_ego, v_global, I_E])
  std::size_t cls_hidden = 256;
  std::size_t small_hidden = 64;
  std::size_t large_hidden = 256;
  std::size_t t_future = 4;
};

// Importance classifier plus the ego action classifier (EAC) and ego
// trajectory generator (ETG). EAC and ETG share their input vector but not
// their weights.
struct HeadParams {
  nn::Mlp classifier;
  nn::Mlp action_trunk, action_out;
  nn::Mlp trajectory_trunk, trajectory_out;
  double tau = 0.1;
  std::size_t t_future = 4;

  static HeadParams create(ParamStore& store, const HeadDims& dims, double tau, std::mt19937_64& rng);
};

// One-hot {forward, left, right} as a 1 x 3 tensor.
Tensor intent_encoding(Intention intention);

// o_j = [v_j, v_bar_j, v_global, v_ego, I_E]; `relation` may be invalid (omitted
// from the concatenation).
ad::Var assemble_comprehensive_feature(ad::Var object, ad::Var relation, ad::Var global, ad::Var ego, ad::Var intent);

// s_j = sigmoid(MLP(o_j)), shape M x 1.
ad::Var importance_score(const BoundParams& p, const HeadParams& heads, ad::Var features);

// Strict: a score of exactly 0.5 predicts unimportant.
inline int predict_label(double score) { return score > 0.5 ? 1 : 0; }

inline constexpr double kScoreClamp = 1e-7;

struct GumbelNoise {
  std::vector<double> important;    // g_{j,1}
  std::vector<double> unimportant;  // g_{j,0}
};

double sample_gumbel(std::mt19937_64& rng);
GumbelNoise draw_gumbel(std::mt19937_64& rng, std::size_t count);

// Two-way Gumbel-softmax weight z_j for scores s (M x 1) with frozen noise.
ad::Var gumbel_weight(ad::Var scores, double tau, const GumbelNoise& noise);
double gumbel_weight(double score, double tau, double g_important, double g_unimportant);

// (1/N_i) sum_j z_j v_j per scene group; B x F.
ad::Var pool_important_train(ad::Var weights, ad::Var objects, const std::vector<std::vector<std::size_t>>& groups);
// Mean of v_j over objects predicted important; zero row when none are.
ad::Var pool_important_test(std::span<const double> scores, ad::Var objects,
                            const std::vector<std::vector<std::size_t>>& groups);

struct BehaviorPrediction {
  ad::Var action_logits;  // B x 4
  ad::Var trajectory;     // B x 2*T_f, waypoint-major (x0, y0, x1, y1, ...)
};

BehaviorPrediction predict_ego_behavior(const BoundParams& p, const HeadParams& heads, ad::Var pooled, ad::Var ego,
                                        ad::Var global, ad::Var intent);

}  // namespace relimp
