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

struct EncoderDims {
  std::size_t appearance_dim = 16;
  std::size_t depthsem_dim = 8;
  std::size_t horizon = 8;
  std::size_t lstm_hidden = 128;
  std::size_t mlp_hidden = 128;
  std::size_t feat_dim = 128;
};

struct EncoderParams {
  nn::SequenceEncoder appearance;  // sequence encoder I
  nn::SequenceEncoder bbox;        // sequence encoder II
  nn::SequenceEncoder depthsem;    // sequence encoder III
  nn::SequenceEncoder ego;
  nn::SequenceEncoder global;
  nn::Mlp object_projection;       // [v_A, v_DS, v_B] -> v_j
  EncoderDims dims;

  static EncoderParams create(ParamStore& store, const EncoderDims& dims, std::mt19937_64& rng);
};

// Per-frame input matrices for a batch of scenes. Objects of all scenes are
// stacked row-wise in scene order.
struct BatchInputs {
  std::vector<Tensor> appearance;  // T_h x [M x D_A]
  std::vector<Tensor> depthsem;    // T_h x [M x D_DS]
  std::vector<Tensor> bbox;        // T_h x [M x 4], normalized
  std::vector<Tensor> ego;         // T_h x [B x 6]
  std::vector<Tensor> global;      // T_h x [B x (D_A + D_DS)]
  std::vector<std::size_t> scene_of_object;
  std::vector<std::vector<std::size_t>> objects_of_scene;
  std::size_t object_count() const { return scene_of_object.size(); }
  std::size_t scene_count() const { return objects_of_scene.size(); }
};

BatchInputs make_batch_inputs(std::span<const Scene* const> scenes, std::size_t horizon);

// stream is T_h x D (one row per frame); returns 1 x feat_dim.
ad::Var encode_sequence(const BoundParams& p, const nn::SequenceEncoder& encoder, const Tensor& stream,
                        std::size_t horizon);

ad::Var encode_objects(const BoundParams& p, const EncoderParams& enc, const BatchInputs& in);  // M x F
ad::Var encode_global(const BoundParams& p, const EncoderParams& enc, const BatchInputs& in);   // B x F
ad::Var encode_ego(const BoundParams& p, const EncoderParams& enc, const BatchInputs& in);      // B x F

// Single-item conveniences over the batched paths.
ad::Var encode_object(const BoundParams& p, const EncoderParams& enc, const ObjectTrack& track, double width,
                      double height);
ad::Var encode_global(const BoundParams& p, const EncoderParams& enc, const Scene& scene);
ad::Var encode_ego(const BoundParams& p, const EncoderParams& enc, const EgoTrack& ego);

}  // namespace relimp
