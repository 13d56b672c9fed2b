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

#include "relimp/encoders.hpp"

#include <stdexcept>

namespace relimp {

EncoderParams EncoderParams::create(ParamStore& store, const EncoderDims& d, std::mt19937_64& rng) {
  EncoderParams e;
  e.dims = d;
  e.appearance = nn::SequenceEncoder(store, "enc.appearance", d.appearance_dim, d.lstm_hidden, d.mlp_hidden,
                                     d.feat_dim, rng);
  e.bbox = nn::SequenceEncoder(store, "enc.bbox", 4, d.lstm_hidden, d.mlp_hidden, d.feat_dim, rng);
  e.depthsem = nn::SequenceEncoder(store, "enc.depthsem", d.depthsem_dim, d.lstm_hidden, d.mlp_hidden,
                                   d.feat_dim, rng);
  e.ego = nn::SequenceEncoder(store, "enc.ego", kEgoStateDim, d.lstm_hidden, d.mlp_hidden, d.feat_dim, rng);
  e.global = nn::SequenceEncoder(store, "enc.global", d.appearance_dim + d.depthsem_dim, d.lstm_hidden,
                                 d.mlp_hidden, d.feat_dim, rng);
  e.object_projection = nn::Mlp::three_layer(store, "enc.object_proj", 3 * d.feat_dim, d.mlp_hidden, d.feat_dim, rng);
  return e;
}

BatchInputs make_batch_inputs(std::span<const Scene* const> scenes, std::size_t horizon) {
  if (scenes.empty()) throw std::invalid_argument("batch: no scenes");
  BatchInputs in;
  std::size_t m = 0;
  const std::size_t da = scenes[0]->objects.at(0).appearance_feat.at(0).size();
  const std::size_t dd = scenes[0]->objects.at(0).depthsem_feat.at(0).size();
  for (std::size_t b = 0; b < scenes.size(); ++b) {
    const Scene& s = *scenes[b];
    if (s.horizon != horizon) {
      throw std::invalid_argument("scene '" + s.scene_id + "' has T_h=" + std::to_string(s.horizon) +
                                  ", model expects " + std::to_string(horizon));
    }
    if (s.objects.empty()) throw std::invalid_argument("scene '" + s.scene_id + "' has no objects");
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < s.objects.size(); ++j) {
      rows.push_back(m++);
      in.scene_of_object.push_back(b);
    }
    in.objects_of_scene.push_back(std::move(rows));
  }
  const std::size_t nb = scenes.size();
  for (std::size_t t = 0; t < horizon; ++t) {
    Tensor app(Shape{m, da}, 0.0), ds(Shape{m, dd}, 0.0), box(Shape{m, 4}, 0.0);
    Tensor ego(Shape{nb, kEgoStateDim}, 0.0), glob(Shape{nb, da + dd}, 0.0);
    std::size_t r = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const Scene& s = *scenes[b];
      for (const auto& o : s.objects) {
        if (o.appearance_feat.size() != horizon || o.depthsem_feat.size() != horizon || o.boxes.size() != horizon) {
          throw std::invalid_argument("scene '" + s.scene_id + "' object '" + o.id + "': stream length != T_h");
        }
        if (o.appearance_feat[t].size() != da || o.depthsem_feat[t].size() != dd) {
          throw std::invalid_argument("scene '" + s.scene_id + "' object '" + o.id + "': feature width mismatch");
        }
        std::copy(o.appearance_feat[t].begin(), o.appearance_feat[t].end(), app.row(r).begin());
        std::copy(o.depthsem_feat[t].begin(), o.depthsem_feat[t].end(), ds.row(r).begin());
        const auto nbox = normalize_bbox(o.boxes[t], s.width, s.height);
        std::copy(nbox.begin(), nbox.end(), box.row(r).begin());
        auto g = glob.row(b);
        for (std::size_t k = 0; k < da; ++k) g[k] += o.appearance_feat[t][k];
        for (std::size_t k = 0; k < dd; ++k) g[da + k] += o.depthsem_feat[t][k];
        ++r;
      }
      const double inv = 1.0 / static_cast<double>(s.objects.size());
      for (auto& v : glob.row(b)) v *= inv;
      if (s.ego.states.size() != horizon) throw std::invalid_argument("scene '" + s.scene_id + "': ego track != T_h");
      std::copy(s.ego.states[t].begin(), s.ego.states[t].end(), ego.row(b).begin());
    }
    in.appearance.push_back(std::move(app));
    in.depthsem.push_back(std::move(ds));
    in.bbox.push_back(std::move(box));
    in.ego.push_back(std::move(ego));
    in.global.push_back(std::move(glob));
  }
  return in;
}

namespace {

ad::Var run(const BoundParams& p, const nn::SequenceEncoder& enc, const std::vector<Tensor>& steps,
            std::size_t horizon) {
  std::vector<ad::Var> vars;
  vars.reserve(steps.size());
  for (const auto& t : steps) vars.push_back(p.tape().constant(t));
  return enc(p, vars, horizon);
}

}  // namespace

ad::Var encode_sequence(const BoundParams& p, const nn::SequenceEncoder& encoder, const Tensor& stream,
                        std::size_t horizon) {
  if (stream.rank() != 2 || stream.dim(0) != horizon) {
    throw std::invalid_argument("encode_sequence: stream shape " + shape_to_string(stream.shape()) +
                                " needs exactly " + std::to_string(horizon) + " rows");
  }
  if (stream.cols() != encoder.input_dim()) {
    throw std::invalid_argument("encode_sequence: stream width " + std::to_string(stream.cols()) +
                                " vs encoder input " + std::to_string(encoder.input_dim()));
  }
  std::vector<Tensor> steps;
  for (std::size_t t = 0; t < horizon; ++t) {
    steps.emplace_back(Shape{1, stream.cols()}, std::vector<double>(stream.row(t).begin(), stream.row(t).end()));
  }
  return run(p, encoder, steps, horizon);
}

ad::Var encode_objects(const BoundParams& p, const EncoderParams& enc, const BatchInputs& in) {
  const std::size_t h = enc.dims.horizon;
  ad::Var va = run(p, enc.appearance, in.appearance, h);
  ad::Var vds = run(p, enc.depthsem, in.depthsem, h);
  ad::Var vb = run(p, enc.bbox, in.bbox, h);
  return enc.object_projection(p, ad::concat({va, vds, vb}));
}

ad::Var encode_global(const BoundParams& p, const EncoderParams& enc, const BatchInputs& in) {
  return run(p, enc.global, in.global, enc.dims.horizon);
}

ad::Var encode_ego(const BoundParams& p, const EncoderParams& enc, const BatchInputs& in) {
  return run(p, enc.ego, in.ego, enc.dims.horizon);
}

namespace {

Scene wrap_object(const ObjectTrack& track, double width, double height) {
  Scene s;
  s.scene_id = "<object>";
  s.width = width;
  s.height = height;
  s.horizon = track.boxes.size();
  s.objects = {track};
  s.ego.states.assign(s.horizon, EgoState{});
  return s;
}

}  // namespace

ad::Var encode_object(const BoundParams& p, const EncoderParams& enc, const ObjectTrack& track, double width,
                      double height) {
  const Scene s = wrap_object(track, width, height);
  const Scene* ptr = &s;
  return encode_objects(p, enc, make_batch_inputs({&ptr, 1}, enc.dims.horizon));
}

ad::Var encode_global(const BoundParams& p, const EncoderParams& enc, const Scene& scene) {
  const Scene* ptr = &scene;
  return encode_global(p, enc, make_batch_inputs({&ptr, 1}, enc.dims.horizon));
}

ad::Var encode_ego(const BoundParams& p, const EncoderParams& enc, const EgoTrack& ego) {
  if (ego.states.size() != enc.dims.horizon) {
    throw std::invalid_argument("encode_ego: " + std::to_string(ego.states.size()) + " states, expected " +
                                std::to_string(enc.dims.horizon));
  }
  Tensor stream(Shape{ego.states.size(), kEgoStateDim}, 0.0);
  for (std::size_t t = 0; t < ego.states.size(); ++t)
    std::copy(ego.states[t].begin(), ego.states[t].end(), stream.row(t).begin());
  return encode_sequence(p, enc.ego, stream, enc.dims.horizon);
}

}  // namespace relimp
