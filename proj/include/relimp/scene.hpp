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
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace relimp {

enum class ObjectClass { kVehicle, kPedestrian, kCyclist, kTrafficLight, kStopSign };
enum class Intention { kForward, kLeft, kRight };
enum class EgoAction { kStop, kSpeedUp, kSlowDown, kConstantSpeed };

inline constexpr std::size_t kNumClasses = 5;
inline constexpr std::size_t kNumIntentions = 3;
inline constexpr std::size_t kNumActions = 4;
inline constexpr std::size_t kEgoStateDim = 6;

std::string_view to_string(ObjectClass c);
std::string_view to_string(Intention i);
std::string_view to_string(EgoAction a);
ObjectClass parse_object_class(std::string_view s);
Intention parse_intention(std::string_view s);
EgoAction parse_ego_action(std::string_view s);

// Raised for records that violate the data model; carries the offending
// scene id and field path.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string scene_id, std::string field, const std::string& what)
      : std::runtime_error("scene '" + scene_id + "' field '" + field + "': " + what),
        scene_id_(std::move(scene_id)),
        field_(std::move(field)) {}
  const std::string& scene_id() const { return scene_id_; }
  const std::string& field() const { return field_; }

 private:
  std::string scene_id_;
  std::string field_;
};

// Pixel box: center x, center y, width, height.
struct BBox {
  double x = 0, y = 0, w = 0, h = 0;
  bool operator==(const BBox&) const = default;
};

using FeatureRows = std::vector<std::vector<double>>;  // T_h rows

struct ObjectTrack {
  std::string id;
  ObjectClass object_class = ObjectClass::kVehicle;
  std::vector<BBox> boxes;  // oldest first; back() is the current frame
  FeatureRows appearance_feat;
  FeatureRows depthsem_feat;
  std::optional<double> distance_to_ego;
  bool operator==(const ObjectTrack&) const = default;
};

// x, y, vx, vy, ax, ay in the ego frame at t = 0.
using EgoState = std::array<double, kEgoStateDim>;

struct EgoTrack {
  std::vector<EgoState> states;
  bool operator==(const EgoTrack&) const = default;
};

struct SceneLabels {
  std::optional<std::vector<int>> importance;
  EgoAction ego_action = EgoAction::kConstantSpeed;
  std::vector<std::array<double, 2>> future_traj;  // T_f waypoints, meters
  bool operator==(const SceneLabels&) const = default;
};

struct Scene {
  std::string scene_id;
  double width = 0;   // W, px
  double height = 0;  // H, px
  std::size_t horizon = 0;  // T_h
  std::vector<ObjectTrack> objects;
  EgoTrack ego;
  Intention intention = Intention::kForward;
  std::optional<SceneLabels> labels;

  bool has_importance() const { return labels && labels->importance.has_value(); }
  bool operator==(const Scene&) const = default;
};

struct Dataset {
  std::vector<Scene> labeled;
  std::vector<Scene> unlabeled;
};

// (x/W, y/H, w/W, h/H); throws ValidationError when the box leaves the image.
std::array<double, 4> normalize_bbox(const BBox& box, double width, double height);
BBox denormalize_bbox(const std::array<double, 4>& n, double width, double height);

void validate_scene(const Scene& scene);
void validate_dataset(const Dataset& dataset);

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(std::string_view line);

// JSON Lines. Scenes carrying importance labels form the labeled partition.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// Seeded shuffle; test side gets floor(n * (1 - ratio)) scenes.
std::pair<std::vector<Scene>, std::vector<Scene>> split_dataset(const std::vector<Scene>& labeled, double ratio,
                                                                std::uint64_t seed);

// Copy of a scene without importance labels (ego ground truth retained).
Scene strip_importance(const Scene& scene);

}  // namespace relimp
