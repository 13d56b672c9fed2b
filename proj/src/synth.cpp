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

#include "relimp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace relimp::synth {

namespace {

constexpr std::size_t kAttrDim = 16;
constexpr std::uint64_t kEmbeddingSeed = 0x5eed'f00d'cafeULL;
constexpr double kCameraHeight = 1.5;

struct Size3 {
  double width, height, center_z;
};

Size3 physical_size(const LatentObject& o) {
  switch (o.object_class) {
    case ObjectClass::kVehicle: return o.blocking ? Size3{2.5, 3.2, 1.6} : Size3{1.8, 1.5, 0.75};
    case ObjectClass::kPedestrian: return {0.6, 1.7, 0.85};
    case ObjectClass::kCyclist: return {0.7, 1.7, 0.85};
    case ObjectClass::kTrafficLight: return {0.4, 1.0, 5.0};
    case ObjectClass::kStopSign: return {0.8, 0.8, 2.2};
  }
  return {1, 1, 1};
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool bernoulli(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

double side(std::mt19937_64& rng) { return bernoulli(rng, 0.5) ? 1.0 : -1.0; }

// Fixed linear embedding shared by every scene; depends only on output width.
std::vector<double> embedding(std::size_t out_dim, std::uint64_t salt) {
  std::mt19937_64 rng(kEmbeddingSeed ^ salt);
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(kAttrDim)));
  std::vector<double> e(out_dim * kAttrDim);
  for (auto& v : e) v = n(rng);
  return e;
}

enum class Spawn {
  kLight,
  kStopSign,
  kCrossingPedestrian,
  kCrossingCyclist,
  kOncoming,
  kLead,
  kParked,
  kSidewalkPedestrian,
  kAdjacent,
  kFar,
};

constexpr std::array<double, 10> kSpawnWeights{0.13, 0.04, 0.09, 0.05, 0.12, 0.07, 0.12, 0.17, 0.13, 0.08};

LatentObject spawn(Spawn kind, const LatentScene& scene, std::mt19937_64& rng) {
  LatentObject o;
  const double d = scene.intersection_distance;
  const double v_ego = scene.ego_speed;
  switch (kind) {
    case Spawn::kLight: {
      o.object_class = ObjectClass::kTrafficLight;
      o.x = bernoulli(rng, 0.5) ? uniform(rng, -2.5, 2.5) : side(rng) * uniform(rng, 4.0, 7.0);
      o.y = d + uniform(rng, 2.0, 6.0);
      o.governs = static_cast<Intention>(std::uniform_int_distribution<int>(0, 2)(rng));
      o.red = bernoulli(rng, 0.5);
      break;
    }
    case Spawn::kStopSign: {
      o.object_class = ObjectClass::kStopSign;
      o.x = uniform(rng, 3.5, 6.0);
      o.y = std::max(3.0, d - uniform(rng, 0.0, 3.0));
      o.governs_all = true;
      break;
    }
    case Spawn::kCrossingPedestrian:
    case Spawn::kCrossingCyclist: {
      const bool cyclist = kind == Spawn::kCrossingCyclist;
      o.object_class = cyclist ? ObjectClass::kCyclist : ObjectClass::kPedestrian;
      const double s = side(rng);
      o.x = s * uniform(rng, 2.5, 14.0);
      o.y = d + uniform(rng, -1.2, 1.2);
      const double speed = cyclist ? uniform(rng, 2.5, 5.0) : uniform(rng, 0.6, 1.8);
      o.vx = bernoulli(rng, 0.6) ? -s * speed : s * speed;
      o.vy = uniform(rng, -0.2, 0.2);
      break;
    }
    case Spawn::kOncoming: {
      o.object_class = ObjectClass::kVehicle;
      o.x = -uniform(rng, 3.0, 4.5);
      o.y = uniform(rng, 8.0, 60.0);
      o.vy = -uniform(rng, 3.0, 12.0);
      o.blocking = bernoulli(rng, 0.2);
      break;
    }
    case Spawn::kLead: {
      o.object_class = bernoulli(rng, 0.85) ? ObjectClass::kVehicle : ObjectClass::kCyclist;
      o.x = uniform(rng, -0.8, 0.8);
      o.y = uniform(rng, 8.0, 55.0);
      o.vy = std::max(0.0, v_ego + uniform(rng, -3.0, 3.0));
      o.blocking = o.object_class == ObjectClass::kVehicle && bernoulli(rng, 0.3);
      break;
    }
    case Spawn::kParked: {
      o.object_class = ObjectClass::kVehicle;
      o.x = side(rng) * uniform(rng, 2.3, 6.5);
      o.y = uniform(rng, 5.0, 50.0);
      o.parked = true;
      o.blocking = bernoulli(rng, 0.15);
      break;
    }
    case Spawn::kSidewalkPedestrian: {
      o.object_class = ObjectClass::kPedestrian;
      o.x = side(rng) * uniform(rng, 5.5, 15.0);
      o.y = uniform(rng, 5.0, 50.0);
      o.vy = side(rng) * uniform(rng, 0.4, 1.6);
      o.vx = uniform(rng, -0.2, 0.2);
      break;
    }
    case Spawn::kAdjacent: {
      o.object_class = ObjectClass::kVehicle;
      o.x = uniform(rng, 2.8, 4.4);
      o.y = uniform(rng, 6.0, 50.0);
      o.vy = std::max(0.0, v_ego + uniform(rng, -2.5, 2.5));
      o.blocking = bernoulli(rng, 0.25);
      break;
    }
    case Spawn::kFar: {
      o.object_class = bernoulli(rng, 0.7) ? ObjectClass::kVehicle : ObjectClass::kPedestrian;
      o.x = uniform(rng, -12.0, 12.0);
      o.y = uniform(rng, 48.0, 65.0);
      o.vy = o.object_class == ObjectClass::kVehicle ? uniform(rng, -8.0, 8.0) : uniform(rng, -1.0, 1.0);
      break;
    }
  }
  return o;
}

// Two participants on one ray ahead; the nearer one usually blocks the view.
std::array<LatentObject, 2> spawn_aligned_pair(std::mt19937_64& rng) {
  const double bearing = uniform(rng, -0.04, 0.04);
  const double r_near = uniform(rng, 6.0, 14.0);
  const double r_far = r_near * uniform(rng, 1.4, 2.2);
  LatentObject near;
  near.object_class = ObjectClass::kVehicle;
  near.x = r_near * std::sin(bearing);
  near.y = r_near * std::cos(bearing);
  near.vy = uniform(rng, 0.0, 1.0);
  near.blocking = bernoulli(rng, 0.75);
  LatentObject far;
  const double c = uniform(rng, 0.0, 1.0);
  far.object_class = c < 0.6 ? ObjectClass::kVehicle : (c < 0.85 ? ObjectClass::kPedestrian : ObjectClass::kCyclist);
  far.x = r_far * std::sin(bearing);
  far.y = r_far * std::cos(bearing);
  far.vy = uniform(rng, 0.0, 1.0);
  far.blocking = far.object_class == ObjectClass::kVehicle && bernoulli(rng, 0.3);
  return {near, far};
}

Intention draw_intention(std::mt19937_64& rng, const std::array<double, 3>& mix) {
  std::discrete_distribution<int> d(mix.begin(), mix.end());
  return static_cast<Intention>(d(rng));
}

// Ego position/speed at time t (t <= 0 for history, t > 0 for the future)
// under constant acceleration, with speed clamped at zero.
struct EgoKinematics {
  double speed;
  double accel;

  double speed_at(double t) const { return std::max(0.0, speed + accel * t); }

  // Signed arc length travelled from t = 0 to t.
  double arc(double t) const {
    constexpr int kSteps = 64;
    const double h = t / kSteps;
    double s = 0.0;
    for (int i = 0; i < kSteps; ++i) s += 0.5 * (speed_at(i * h) + speed_at((i + 1) * h)) * h;
    return s;
  }
};

std::array<double, 2> path_point(double s, Intention intention, double d) {
  if (s <= d || intention == Intention::kForward) return {0.0, s};
  return intention == Intention::kLeft ? std::array<double, 2>{-(s - d), d} : std::array<double, 2>{s - d, d};
}

BBox project(double rel_x, double rel_y, const Size3& size, const GenConfig& c) {
  const double depth = std::max(rel_y, 1.5);
  const double u = c.image_width / 2 + c.focal * rel_x / depth;
  const double v = c.image_height / 2 + c.focal * (kCameraHeight - size.center_z) / depth;
  const double bw = std::max(1.0, c.focal * size.width / depth);
  const double bh = std::max(1.0, c.focal * size.height / depth);
  const double x1 = std::clamp(u - bw / 2, 0.0, c.image_width - 1.0);
  const double x2 = std::clamp(u + bw / 2, x1 + 1.0, c.image_width);
  const double y1 = std::clamp(v - bh / 2, 0.0, c.image_height - 1.0);
  const double y2 = std::clamp(v + bh / 2, y1 + 1.0, c.image_height);
  BBox b{(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1};
  // Center arithmetic can round a hair past the border.
  b.x = std::clamp(b.x, b.w / 2, c.image_width - b.w / 2);
  b.y = std::clamp(b.y, b.h / 2, c.image_height - b.h / 2);
  return b;
}

void choose_ego_behavior(LatentScene& scene, Intention intention, const GenConfig& config, std::mt19937_64& rng) {
  const OracleTrace trace = importance_trace(scene, intention, config.oracle);
  bool hazard = false;
  for (std::size_t j = 0; j < scene.objects.size(); ++j) {
    const auto& o = scene.objects[j];
    if (trace.control[j] && (o.red || o.object_class == ObjectClass::kStopSign)) hazard = true;
    if (trace.path[j] && !trace.demoted[j] && std::hypot(o.x, o.y) < 25.0) hazard = true;
  }
  if (hazard) {
    scene.ego_accel = -uniform(rng, 0.8, 3.0);
  } else if (scene.ego_speed < config.thresholds.v_stop) {
    scene.ego_accel = bernoulli(rng, 0.5) ? uniform(rng, 0.8, 2.0) : 0.0;
  } else {
    const double r = uniform(rng, 0.0, 1.0);
    scene.ego_accel = r < 0.4 ? uniform(rng, 0.6, 2.0) : (r < 0.9 ? uniform(rng, -0.15, 0.15) : -uniform(rng, 0.6, 1.5));
  }
}

}  // namespace

void GenConfig::validate() const {
  if (min_objects < 1 || min_objects > max_objects) throw std::invalid_argument("generator: invalid object range");
  for (double w : intention_mix) {
    if (!(w > 0)) throw std::invalid_argument("generator: intention mix weights must be positive");
  }
  if (horizon == 0 || future == 0) throw std::invalid_argument("generator: horizon and future must be positive");
  if (!(frame_dt > 0)) throw std::invalid_argument("generator: frame_dt must be positive");
  if (!(thresholds.v_stop > 0) || !(thresholds.a_dead > 0)) {
    throw std::invalid_argument("generator: action thresholds must be positive");
  }
  if (appearance_dim == 0 || depthsem_dim == 0) throw std::invalid_argument("generator: feature dims must be positive");
  if (kinematic_noise < 0 || feature_noise < 0) throw std::invalid_argument("generator: noise scales must be >= 0");
  if (!(image_width > 1) || !(image_height > 1) || !(focal > 0)) throw std::invalid_argument("generator: bad camera");
}

bool in_corridor(double x, double y, Intention intention, double d, const OracleParams& p) {
  const double hw = p.corridor_width / 2;
  switch (intention) {
    case Intention::kForward: return std::abs(x) <= hw && y >= 0 && y <= p.range;
    case Intention::kLeft:
      return (std::abs(x) <= hw && y >= 0 && y <= d + hw) || (x >= -p.range && x <= hw && std::abs(y - d) <= hw);
    case Intention::kRight:
      return (std::abs(x) <= hw && y >= 0 && y <= d + hw) || (x >= -hw && x <= p.range && std::abs(y - d) <= hw);
  }
  return false;
}

OracleTrace importance_trace(const LatentScene& latent, Intention intention, const OracleParams& p,
                             bool apply_demotion) {
  const std::size_t n = latent.objects.size();
  OracleTrace t;
  t.control.assign(n, 0);
  t.path.assign(n, 0);
  t.parked.assign(n, 0);
  t.demoted.assign(n, 0);
  t.labels.assign(n, 0);
  const double hw = p.corridor_width / 2;
  const int steps = static_cast<int>(std::lround(p.horizon_s / p.time_step));
  for (std::size_t j = 0; j < n; ++j) {
    const auto& o = latent.objects[j];
    const double dist = std::hypot(o.x, o.y);
    if (o.is_control()) {
      t.control[j] = o.relevant_to(intention) && o.y > 0 && dist <= p.range;
      continue;
    }
    for (int k = 0; k <= steps; ++k) {
      const double time = k * p.time_step;
      if (in_corridor(o.x + o.vx * time, o.y + o.vy * time, intention, latent.intersection_distance, p)) {
        t.path[j] = 1;
        break;
      }
    }
    const double lateral = std::abs(o.x);
    t.parked[j] = o.parked && lateral > hw && lateral <= hw + p.lateral_margin && o.y > 0 && o.y <= p.range;
  }
  if (apply_demotion) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!t.path[j]) continue;
      const auto& oj = latent.objects[j];
      const double dj = std::hypot(oj.x, oj.y);
      const double bj = std::atan2(oj.x, oj.y);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == j || !t.path[k] || !latent.objects[k].blocking) continue;
        const auto& ok = latent.objects[k];
        if (std::hypot(ok.x, ok.y) < dj && std::abs(std::atan2(ok.x, ok.y) - bj) < p.bearing_tolerance) {
          t.demoted[j] = 1;
          break;
        }
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    t.labels[j] = (t.control[j] || t.parked[j] || (t.path[j] && !t.demoted[j])) ? 1 : 0;
  }
  return t;
}

std::vector<int> importance_oracle(const LatentScene& latent, Intention intention, const OracleParams& p,
                                   bool apply_demotion) {
  return importance_trace(latent, intention, p, apply_demotion).labels;
}

EgoAction action_from_kinematics(double speed, double accel, const ActionThresholds& t) {
  if (speed < t.v_stop) return EgoAction::kStop;
  if (accel > t.a_dead) return EgoAction::kSpeedUp;
  if (accel < -t.a_dead) return EgoAction::kSlowDown;
  return EgoAction::kConstantSpeed;
}

Scene render_scene(const LatentScene& latent, Intention intention, const GenConfig& c, const std::string& scene_id,
                   std::mt19937_64& rng) {
  static thread_local std::size_t cached_a = 0, cached_ds = 0;
  static thread_local std::vector<double> emb_a, emb_ds;
  if (cached_a != c.appearance_dim) {
    emb_a = embedding(c.appearance_dim, 0xA);
    cached_a = c.appearance_dim;
  }
  if (cached_ds != c.depthsem_dim) {
    emb_ds = embedding(c.depthsem_dim, 0xD5);
    cached_ds = c.depthsem_dim;
  }
  std::normal_distribution<double> kin(0.0, 1.0);
  std::normal_distribution<double> feat(0.0, 1.0);

  Scene s;
  s.scene_id = scene_id;
  s.width = c.image_width;
  s.height = c.image_height;
  s.horizon = c.horizon;
  s.intention = intention;

  const EgoKinematics ego{latent.ego_speed, latent.ego_accel};
  std::vector<double> times(c.horizon);
  for (std::size_t k = 0; k < c.horizon; ++k) times[k] = -static_cast<double>(c.horizon - 1 - k) * c.frame_dt;

  std::vector<double> ego_y(c.horizon);
  for (std::size_t k = 0; k < c.horizon; ++k) {
    const double t = times[k];
    ego_y[k] = ego.arc(t);
    EgoState st{0.0, ego_y[k], 0.0, ego.speed_at(t), 0.0, ego.speed_at(t) > 0 ? ego.accel : 0.0};
    for (auto& v : st) v += c.kinematic_noise * kin(rng);
    s.ego.states.push_back(st);
  }

  for (std::size_t j = 0; j < latent.objects.size(); ++j) {
    const auto& o = latent.objects[j];
    ObjectTrack tr;
    tr.id = "o" + std::to_string(j);
    tr.object_class = o.object_class;
    tr.distance_to_ego = std::hypot(o.x, o.y);
    const Size3 size = physical_size(o);
    for (std::size_t k = 0; k < c.horizon; ++k) {
      const double t = times[k];
      const double rel_x = o.x + o.vx * t + c.kinematic_noise * kin(rng);
      const double rel_y = o.y + o.vy * t - ego_y[k] + c.kinematic_noise * kin(rng);
      const double rel_vx = o.vx;
      const double rel_vy = o.vy - ego.speed_at(t);
      std::array<double, kAttrDim> attr{};
      attr[static_cast<std::size_t>(o.object_class)] = 1.0;
      attr[5] = rel_x / 10.0;
      attr[6] = rel_y / 30.0;
      attr[7] = rel_vx / 5.0;
      attr[8] = rel_vy / 10.0;
      if (o.governs_all) {
        attr[9] = attr[10] = attr[11] = 1.0;
      } else if (o.governs) {
        attr[9 + static_cast<std::size_t>(*o.governs)] = 1.0;
      }
      attr[12] = o.red ? 1.0 : 0.0;
      attr[13] = o.parked ? 1.0 : 0.0;
      attr[14] = o.blocking ? 1.0 : 0.0;
      attr[15] = 1.0;
      std::vector<double> fa(c.appearance_dim), fd(c.depthsem_dim);
      for (std::size_t r = 0; r < c.appearance_dim; ++r) {
        double acc = 0.0;
        for (std::size_t q = 0; q < kAttrDim; ++q) acc += emb_a[r * kAttrDim + q] * attr[q];
        fa[r] = acc + c.feature_noise * feat(rng);
      }
      for (std::size_t r = 0; r < c.depthsem_dim; ++r) {
        double acc = 0.0;
        for (std::size_t q = 0; q < kAttrDim; ++q) acc += emb_ds[r * kAttrDim + q] * attr[q];
        fd[r] = acc + c.feature_noise * feat(rng);
      }
      tr.appearance_feat.push_back(std::move(fa));
      tr.depthsem_feat.push_back(std::move(fd));
      tr.boxes.push_back(project(rel_x, rel_y, size, c));
    }
    s.objects.push_back(std::move(tr));
  }

  SceneLabels labels;
  labels.importance = importance_oracle(latent, intention, c.oracle);
  labels.ego_action = action_from_kinematics(ego.speed_at(0.0), latent.ego_accel, c.thresholds);
  for (std::size_t k = 1; k <= c.future; ++k) {
    const double t = static_cast<double>(k) * c.frame_dt;
    labels.future_traj.push_back(path_point(ego.arc(t), intention, latent.intersection_distance));
  }
  s.labels = std::move(labels);
  return s;
}

GeneratedScene generate_scene(std::mt19937_64& rng, const GenConfig& config, const std::string& scene_id) {
  GeneratedScene g;
  LatentScene& latent = g.latent;
  const Intention intention = draw_intention(rng, config.intention_mix);
  latent.intersection_distance = uniform(rng, 8.0, 50.0);
  latent.ego_speed = bernoulli(rng, 0.1) ? uniform(rng, 0.0, 0.3) : uniform(rng, 2.0, 14.0);

  const std::size_t n =
      std::uniform_int_distribution<std::size_t>(config.min_objects, config.max_objects)(rng);
  if (n >= 2 && bernoulli(rng, config.occlusion_scene_prob)) {
    for (auto& o : spawn_aligned_pair(rng)) latent.objects.push_back(o);
  }
  std::discrete_distribution<int> pick(kSpawnWeights.begin(), kSpawnWeights.end());
  while (latent.objects.size() < n) latent.objects.push_back(spawn(static_cast<Spawn>(pick(rng)), latent, rng));
  std::shuffle(latent.objects.begin(), latent.objects.end(), rng);

  choose_ego_behavior(latent, intention, config, rng);
  g.scene = render_scene(latent, intention, config, scene_id, rng);

  const auto& labels = *g.scene.labels->importance;
  for (auto other : {Intention::kForward, Intention::kLeft, Intention::kRight}) {
    if (other != intention && importance_oracle(latent, other, config.oracle) != labels) g.intention_sensitive = true;
  }
  g.occlusion_sensitive = importance_oracle(latent, intention, config.oracle, false) != labels;
  return g;
}

GeneratedScene generate_scene(const GenConfig& config, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  char id[32];
  std::snprintf(id, sizeof(id), "s%07zu", index);
  return generate_scene(rng, config, id);
}

std::vector<GeneratedScene> generate_scenes(const GenConfig& config, std::size_t count, std::size_t first_index) {
  config.validate();
  std::vector<GeneratedScene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_scene(config, first_index + i));
  return out;
}

Dataset generate_dataset(const GenConfig& config) {
  config.validate();
  Dataset d;
  d.labeled.reserve(config.scene_count);
  d.unlabeled.reserve(config.unlabeled_count);
  for (std::size_t i = 0; i < config.scene_count; ++i) d.labeled.push_back(generate_scene(config, i).scene);
  for (std::size_t i = 0; i < config.unlabeled_count; ++i) {
    d.unlabeled.push_back(strip_importance(generate_scene(config, config.scene_count + i).scene));
  }
  return d;
}

}  // namespace relimp::synth
