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

#include "relimp/model.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace relimp {

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.encoder.lstm_hidden = 32;
  c.encoder.mlp_hidden = 32;
  c.encoder.feat_dim = 32;
  c.graph_hidden = 32;
  c.cls_hidden = 64;
  c.small_hidden = 32;
  c.large_hidden = 64;
  return c;
}

void ModelConfig::validate() const {
  const auto& e = encoder;
  if (e.appearance_dim == 0 || e.depthsem_dim == 0 || e.horizon == 0 || e.lstm_hidden == 0 || e.mlp_hidden == 0 ||
      e.feat_dim == 0) {
    throw std::invalid_argument("model config: encoder dims must be positive");
  }
  if (graph_hidden == 0 || cls_hidden == 0 || small_hidden == 0 || large_hidden == 0) {
    throw std::invalid_argument("model config: hidden sizes must be positive");
  }
  if (mp_rounds == 0) throw std::invalid_argument("model config: mp_rounds must be >= 1");
  if (t_future == 0) throw std::invalid_argument("model config: t_future must be >= 1");
  if (!(tau > 0)) throw std::invalid_argument("model config: tau must be positive");
  if (!(ego_input_scale > 0) || !(trajectory_output_scale > 0)) {
    throw std::invalid_argument("model config: unit scales must be positive");
  }
}

ImportanceModel::ImportanceModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.init_seed);
  const std::size_t f = config_.encoder.feat_dim;
  encoders_ = EncoderParams::create(params_, config_.encoder, rng);
  if (config_.use_relation_graph) graph_ = GraphParams::create(params_, f, config_.graph_hidden, config_.mp_rounds, rng);
  HeadDims hd;
  hd.feature_dim = (config_.use_relation_graph ? 4 : 3) * f + kNumIntentions;
  hd.behavior_dim = 3 * f + kNumIntentions;
  hd.cls_hidden = config_.cls_hidden;
  hd.small_hidden = config_.small_hidden;
  hd.large_hidden = config_.large_hidden;
  hd.t_future = config_.t_future;
  heads_ = HeadParams::create(params_, hd, config_.tau, rng);
}

ModelConfig model_config_for(const ModelConfig& base, const Scene& sample) {
  ModelConfig m = base;
  m.encoder.horizon = sample.horizon;
  if (!sample.objects.empty()) {
    m.encoder.appearance_dim = sample.objects.front().appearance_feat.front().size();
    m.encoder.depthsem_dim = sample.objects.front().depthsem_feat.front().size();
  }
  return m;
}

std::vector<double> object_id_keys(std::span<const Scene* const> scenes) {
  std::vector<double> keys;
  for (const Scene* s : scenes) {
    std::vector<std::size_t> order(s->objects.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s->objects[a].id < s->objects[b].id; });
    std::vector<double> rank(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<double>(r);
    keys.insert(keys.end(), rank.begin(), rank.end());
  }
  return keys;
}

ForwardResult ImportanceModel::forward(const BoundParams& p, std::span<const Scene* const> scenes, PoolMode mode,
                                       std::mt19937_64* rng) const {
  ad::Tape& tape = p.tape();
  ForwardResult out;
  out.inputs = make_batch_inputs(scenes, config_.encoder.horizon);
  for (auto& frame : out.inputs.ego)
    for (auto& v : frame.values()) v *= config_.ego_input_scale;
  const BatchInputs& in = out.inputs;
  const std::size_t nb = in.scene_count();

  out.objects = encode_objects(p, encoders_, in);
  ad::Var global = encode_global(p, encoders_, in);
  ad::Var ego = encode_ego(p, encoders_, in);
  Tensor intent_t(Shape{nb, kNumIntentions}, 0.0);
  if (config_.use_intention) {
    for (std::size_t b = 0; b < nb; ++b) intent_t.at(b, static_cast<std::size_t>(scenes[b]->intention)) = 1.0;
  }
  ad::Var intent = tape.constant(std::move(intent_t));

  ad::Var relation;
  if (config_.use_relation_graph) {
    const std::vector<double> keys = object_id_keys(scenes);
    relation = run_relation_graph(p, graph_, out.objects, fully_connected_layout(in.objects_of_scene, keys));
  }
  const auto& owner = in.scene_of_object;
  ad::Var o = assemble_comprehensive_feature(out.objects, relation, ad::gather_rows(global, owner),
                                             ad::gather_rows(ego, owner), ad::gather_rows(intent, owner));
  out.scores = importance_score(p, heads_, o);

  if (mode == PoolMode::kNone) return out;
  ad::Var pooled;
  if (mode == PoolMode::kGumbel) {
    if (rng == nullptr) throw std::invalid_argument("model forward: Gumbel pooling needs an rng");
    GumbelNoise noise = draw_gumbel(*rng, in.object_count());
    ad::Var z = gumbel_weight(out.scores, heads_.tau, noise);
    pooled = pool_important_train(z, out.objects, in.objects_of_scene);
  } else {
    pooled = pool_important_test(out.scores.value().values(), out.objects, in.objects_of_scene);
  }
  out.behavior = predict_ego_behavior(p, heads_, pooled, ego, global, intent);
  out.behavior.trajectory = ad::scale(out.behavior.trajectory, config_.trajectory_output_scale);
  return out;
}

std::vector<std::vector<double>> ImportanceModel::predict_scores(std::span<const Scene> scenes,
                                                                 std::size_t batch_size) const {
  if (batch_size == 0) throw std::invalid_argument("predict_scores: batch size must be positive");
  std::vector<std::vector<double>> out;
  out.reserve(scenes.size());
  ad::Tape tape;
  for (std::size_t begin = 0; begin < scenes.size(); begin += batch_size) {
    const std::size_t end = std::min(scenes.size(), begin + batch_size);
    std::vector<const Scene*> batch;
    for (std::size_t i = begin; i < end; ++i) batch.push_back(&scenes[i]);
    tape.reset();
    BoundParams p(tape, params_, false);
    ForwardResult r = forward(p, batch, PoolMode::kNone);
    const Tensor& s = r.scores.value();
    for (const auto& rows : r.inputs.objects_of_scene) {
      std::vector<double> v;
      v.reserve(rows.size());
      for (std::size_t row : rows) v.push_back(s[row]);
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace relimp
