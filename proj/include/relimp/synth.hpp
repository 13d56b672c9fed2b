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

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "relimp/scene.hpp"

namespace relimp::synth {

struct OracleParams {
  double range = 40.0;           // R, m
  double horizon_s = 3.0;        // T_c, s
  double lateral_margin = 2.5;   // m_lat, m
  double corridor_width = 3.5;   // m
  double bearing_tolerance = 0.05;  // rad, "same bearing" for the demotion rule
  double time_step = 0.1;        // s, extrapolation sampling
};

struct ActionThresholds {
  double v_stop = 0.5;  // m/s
  double a_dead = 0.3;  // m/s^2
};

struct GenConfig {
  std::uint64_t seed = 0;
  std::size_t scene_count = 1000;
  std::size_t unlabeled_count = 0;
  std::size_t min_objects = 2;
  std::size_t max_objects = 12;
  std::array<double, 3> intention_mix{4.0, 1.0, 1.0};  // forward, left, right
  double kinematic_noise = 0.05;
  double feature_noise = 0.05;
  ActionThresholds thresholds;
  OracleParams oracle;
  std::size_t horizon = 8;     // T_h
  std::size_t future = 4;      // T_f
  double frame_dt = 0.5;       // s
  double image_width = 1280;
  double image_height = 720;
  double focal = 800;          // px
  std::size_t appearance_dim = 16;
  std::size_t depthsem_dim = 8;
  double occlusion_scene_prob = 0.3;  // chance a scene is seeded with an aligned blocker pair

  void validate() const;
};

// Hidden state behind one observed object, at t = 0 in the ego frame
// (x lateral to the right, y forward).
struct LatentObject {
  ObjectClass object_class = ObjectClass::kVehicle;
  double x = 0, y = 0, vx = 0, vy = 0;
  bool parked = false;
  bool blocking = false;
  // Traffic controls: stop signs apply to every maneuver; lights govern one.
  bool governs_all = false;
  std::optional<Intention> governs;
  bool red = false;

  bool is_control() const {
    return object_class == ObjectClass::kTrafficLight || object_class == ObjectClass::kStopSign;
  }
  bool relevant_to(Intention i) const { return governs_all || (governs && *governs == i); }
};

struct LatentScene {
  std::vector<LatentObject> objects;
  double intersection_distance = 20.0;  // m ahead where turning corridors branch
  double ego_speed = 0;
  double ego_accel = 0;
};

struct GeneratedScene {
  Scene scene;
  LatentScene latent;
  // Labels would change under a different intention.
  bool intention_sensitive = false;
  // Labels would change without the demotion rule.
  bool occlusion_sensitive = false;
};

struct OracleTrace {
  std::vector<int> control;    // rule (a)
  std::vector<int> path;       // rule (b)
  std::vector<int> parked;     // rule (c)
  std::vector<int> demoted;    // rule (d)
  std::vector<int> labels;
};

bool in_corridor(double x, double y, Intention intention, double intersection_distance, const OracleParams& p);
OracleTrace importance_trace(const LatentScene& latent, Intention intention, const OracleParams& p,
                             bool apply_demotion = true);
std::vector<int> importance_oracle(const LatentScene& latent, Intention intention, const OracleParams& p,
                                   bool apply_demotion = true);

EgoAction action_from_kinematics(double speed, double accel, const ActionThresholds& t);

// Deterministic in (config.seed, index).
GeneratedScene generate_scene(const GenConfig& config, std::size_t index);
GeneratedScene generate_scene(std::mt19937_64& rng, const GenConfig& config, const std::string& scene_id);

// Renders observed streams, boxes and labels from latents (no randomness
// beyond the supplied rng, which drives observation noise).
Scene render_scene(const LatentScene& latent, Intention intention, const GenConfig& config,
                   const std::string& scene_id, std::mt19937_64& rng);

// scene_count labeled scenes followed by unlabeled_count scenes without
// importance labels.
Dataset generate_dataset(const GenConfig& config);
std::vector<GeneratedScene> generate_scenes(const GenConfig& config, std::size_t count, std::size_t first_index = 0);

}  // namespace relimp::synth
