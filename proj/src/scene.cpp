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

#include "relimp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"

namespace relimp {

using nlohmann::json;

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::kVehicle: return "vehicle";
    case ObjectClass::kPedestrian: return "pedestrian";
    case ObjectClass::kCyclist: return "cyclist";
    case ObjectClass::kTrafficLight: return "traffic_light";
    case ObjectClass::kStopSign: return "stop_sign";
  }
  return "unknown";
}

std::string_view to_string(Intention i) {
  switch (i) {
    case Intention::kForward: return "forward";
    case Intention::kLeft: return "left";
    case Intention::kRight: return "right";
  }
  return "unknown";
}

std::string_view to_string(EgoAction a) {
  switch (a) {
    case EgoAction::kStop: return "stop";
    case EgoAction::kSpeedUp: return "speed_up";
    case EgoAction::kSlowDown: return "slow_down";
    case EgoAction::kConstantSpeed: return "constant_speed";
  }
  return "unknown";
}

ObjectClass parse_object_class(std::string_view s) {
  for (auto c : {ObjectClass::kVehicle, ObjectClass::kPedestrian, ObjectClass::kCyclist, ObjectClass::kTrafficLight,
                 ObjectClass::kStopSign}) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown object class '" + std::string(s) + "'");
}

Intention parse_intention(std::string_view s) {
  for (auto i : {Intention::kForward, Intention::kLeft, Intention::kRight}) {
    if (to_string(i) == s) return i;
  }
  throw std::invalid_argument("unknown intention '" + std::string(s) + "'");
}

EgoAction parse_ego_action(std::string_view s) {
  for (auto a : {EgoAction::kStop, EgoAction::kSpeedUp, EgoAction::kSlowDown, EgoAction::kConstantSpeed}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown ego action '" + std::string(s) + "'");
}

namespace {

bool box_inside(const BBox& b, double width, double height) {
  return b.w > 0 && b.h > 0 && b.x - b.w / 2 >= 0 && b.y - b.h / 2 >= 0 && b.x + b.w / 2 <= width &&
         b.y + b.h / 2 <= height;
}

void check_rows(const Scene& s, const std::string& field, const FeatureRows& rows, std::size_t& width) {
  if (rows.size() != s.horizon) {
    throw ValidationError(s.scene_id, field,
                          "has " + std::to_string(rows.size()) + " rows, expected T_h=" + std::to_string(s.horizon));
  }
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].empty()) throw ValidationError(s.scene_id, field + "[" + std::to_string(t) + "]", "empty row");
    if (width == 0) width = rows[t].size();
    if (rows[t].size() != width) {
      throw ValidationError(s.scene_id, field + "[" + std::to_string(t) + "]",
                            "width " + std::to_string(rows[t].size()) + " differs from " + std::to_string(width));
    }
    for (double v : rows[t]) {
      if (!std::isfinite(v)) throw ValidationError(s.scene_id, field + "[" + std::to_string(t) + "]", "non-finite value");
    }
  }
}

}  // namespace

std::array<double, 4> normalize_bbox(const BBox& box, double width, double height) {
  if (!(width > 0) || !(height > 0)) throw ValidationError("", "image_dims", "image dimensions must be positive");
  if (!box_inside(box, width, height)) {
    throw ValidationError("", "box", "box (" + std::to_string(box.x) + ", " + std::to_string(box.y) + ", " +
                                         std::to_string(box.w) + ", " + std::to_string(box.h) +
                                         ") extends outside the image");
  }
  return {box.x / width, box.y / height, box.w / width, box.h / height};
}

BBox denormalize_bbox(const std::array<double, 4>& n, double width, double height) {
  return {n[0] * width, n[1] * height, n[2] * width, n[3] * height};
}

void validate_scene(const Scene& s) {
  const std::string& id = s.scene_id;
  if (id.empty()) throw ValidationError(id, "scene_id", "empty scene id");
  if (!(s.width > 0) || !(s.height > 0) || !std::isfinite(s.width) || !std::isfinite(s.height)) {
    throw ValidationError(id, "W/H", "image dimensions must be positive");
  }
  if (s.horizon == 0) throw ValidationError(id, "T_h", "horizon must be positive");
  if (s.objects.empty()) throw ValidationError(id, "objects", "scene needs at least one object");
  std::size_t app_w = 0, ds_w = 0;
  std::set<std::string> ids;
  for (std::size_t j = 0; j < s.objects.size(); ++j) {
    const auto& o = s.objects[j];
    const std::string base = "objects[" + std::to_string(j) + "]";
    if (!ids.insert(o.id).second) throw ValidationError(id, base + ".id", "duplicate object id '" + o.id + "'");
    if (o.boxes.size() != s.horizon) {
      throw ValidationError(id, base + ".boxes",
                            "has " + std::to_string(o.boxes.size()) + " entries, expected " + std::to_string(s.horizon));
    }
    for (std::size_t t = 0; t < o.boxes.size(); ++t) {
      if (!box_inside(o.boxes[t], s.width, s.height)) {
        throw ValidationError(id, base + ".boxes[" + std::to_string(t) + "]", "box outside image bounds");
      }
    }
    check_rows(s, base + ".appearance_feat", o.appearance_feat, app_w);
    check_rows(s, base + ".depthsem_feat", o.depthsem_feat, ds_w);
    if (o.distance_to_ego && !(std::isfinite(*o.distance_to_ego) && *o.distance_to_ego >= 0)) {
      throw ValidationError(id, base + ".distance_to_ego", "must be a finite non-negative distance");
    }
  }
  if (s.ego.states.size() != s.horizon) {
    throw ValidationError(id, "ego.states",
                          "has " + std::to_string(s.ego.states.size()) + " entries, expected " + std::to_string(s.horizon));
  }
  for (std::size_t t = 0; t < s.ego.states.size(); ++t) {
    for (double v : s.ego.states[t]) {
      if (!std::isfinite(v)) throw ValidationError(id, "ego.states[" + std::to_string(t) + "]", "non-finite value");
    }
  }
  if (s.labels) {
    if (s.labels->importance) {
      const auto& imp = *s.labels->importance;
      if (imp.size() != s.objects.size()) {
        throw ValidationError(id, "labels.importance",
                              "length " + std::to_string(imp.size()) + " != object count " +
                                  std::to_string(s.objects.size()));
      }
      for (int v : imp) {
        if (v != 0 && v != 1) throw ValidationError(id, "labels.importance", "labels must be 0 or 1");
      }
    }
    for (const auto& w : s.labels->future_traj) {
      if (!std::isfinite(w[0]) || !std::isfinite(w[1])) {
        throw ValidationError(id, "labels.future_traj", "non-finite waypoint");
      }
    }
  }
}

void validate_dataset(const Dataset& d) {
  std::set<std::string> ids;
  for (const auto* part : {&d.labeled, &d.unlabeled}) {
    for (const auto& s : *part) {
      validate_scene(s);
      if (!ids.insert(s.scene_id).second) throw ValidationError(s.scene_id, "scene_id", "duplicate scene id");
    }
  }
  for (const auto& s : d.labeled) {
    if (!s.has_importance()) throw ValidationError(s.scene_id, "labels.importance", "labeled scene without labels");
  }
}

namespace {

json to_json(const Scene& s) {
  json j;
  j["scene_id"] = s.scene_id;
  j["W"] = s.width;
  j["H"] = s.height;
  j["T_h"] = s.horizon;
  j["intention"] = to_string(s.intention);
  json objs = json::array();
  for (const auto& o : s.objects) {
    json jo;
    jo["id"] = o.id;
    jo["class"] = to_string(o.object_class);
    json boxes = json::array();
    for (const auto& b : o.boxes) boxes.push_back({b.x, b.y, b.w, b.h});
    jo["boxes"] = std::move(boxes);
    jo["appearance_feat"] = o.appearance_feat;
    jo["depthsem_feat"] = o.depthsem_feat;
    if (o.distance_to_ego) jo["distance_to_ego"] = *o.distance_to_ego;
    objs.push_back(std::move(jo));
  }
  j["objects"] = std::move(objs);
  j["ego"] = {{"states", s.ego.states}};
  if (s.labels) {
    json l;
    if (s.labels->importance) l["importance"] = *s.labels->importance;
    l["ego_action"] = to_string(s.labels->ego_action);
    l["future_traj"] = s.labels->future_traj;
    j["labels"] = std::move(l);
  }
  return j;
}

template <typename T>
T field(const json& j, const char* key, const std::string& id, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(id, path.empty() ? key : path + "." + key, e.what());
  }
}

Scene from_json(const json& j) {
  Scene s;
  s.scene_id = j.contains("scene_id") && j["scene_id"].is_string() ? j["scene_id"].get<std::string>() : "<unknown>";
  const std::string& id = s.scene_id;
  s.width = field<double>(j, "W", id, "");
  s.height = field<double>(j, "H", id, "");
  s.horizon = field<std::size_t>(j, "T_h", id, "");
  try {
    s.intention = parse_intention(field<std::string>(j, "intention", id, ""));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(id, "intention", e.what());
  }
  if (!j.contains("objects") || !j["objects"].is_array()) throw ValidationError(id, "objects", "missing object list");
  for (std::size_t k = 0; k < j["objects"].size(); ++k) {
    const json& jo = j["objects"][k];
    const std::string base = "objects[" + std::to_string(k) + "]";
    ObjectTrack o;
    o.id = field<std::string>(jo, "id", id, base);
    try {
      o.object_class = parse_object_class(field<std::string>(jo, "class", id, base));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(id, base + ".class", e.what());
    }
    for (const auto& b : field<std::vector<std::array<double, 4>>>(jo, "boxes", id, base)) {
      o.boxes.push_back({b[0], b[1], b[2], b[3]});
    }
    o.appearance_feat = field<FeatureRows>(jo, "appearance_feat", id, base);
    o.depthsem_feat = field<FeatureRows>(jo, "depthsem_feat", id, base);
    if (jo.contains("distance_to_ego") && !jo["distance_to_ego"].is_null()) {
      o.distance_to_ego = field<double>(jo, "distance_to_ego", id, base);
    }
    s.objects.push_back(std::move(o));
  }
  if (!j.contains("ego")) throw ValidationError(id, "ego", "missing ego track");
  s.ego.states = field<std::vector<EgoState>>(j["ego"], "states", id, "ego");
  if (j.contains("labels") && !j["labels"].is_null()) {
    const json& jl = j["labels"];
    SceneLabels l;
    if (jl.contains("importance") && !jl["importance"].is_null()) {
      l.importance = field<std::vector<int>>(jl, "importance", id, "labels");
    }
    try {
      l.ego_action = parse_ego_action(field<std::string>(jl, "ego_action", id, "labels"));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(id, "labels.ego_action", e.what());
    }
    l.future_traj = field<std::vector<std::array<double, 2>>>(jl, "future_traj", id, "labels");
    s.labels = std::move(l);
  }
  validate_scene(s);
  return s;
}

}  // namespace

std::string scene_to_json(const Scene& scene) { return to_json(scene).dump(); }

Scene scene_from_json(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ValidationError("<unparsed>", "", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("<unparsed>", "", "record is not a JSON object");
  return from_json(j);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  for (const auto* part : {&dataset.labeled, &dataset.unlabeled})
    for (const auto& s : *part) out << scene_to_json(s) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  Dataset d;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Scene s;
    try {
      s = scene_from_json(line);
    } catch (const ValidationError& e) {
      throw ValidationError(e.scene_id(), e.field(), std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
    }
    if (!ids.insert(s.scene_id).second) throw ValidationError(s.scene_id, "scene_id", "duplicate scene id");
    (s.has_importance() ? d.labeled : d.unlabeled).push_back(std::move(s));
  }
  return d;
}

std::pair<std::vector<Scene>, std::vector<Scene>> split_dataset(const std::vector<Scene>& labeled, double ratio,
                                                                std::uint64_t seed) {
  if (labeled.empty()) throw std::invalid_argument("split_dataset: empty input");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split_dataset: ratio must lie in (0, 1)");
  std::vector<std::size_t> order(labeled.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = static_cast<double>(labeled.size());
  const auto n_test = static_cast<std::size_t>(std::floor(n * (1.0 - ratio) + 1e-9));
  const std::size_t n_train = labeled.size() - n_test;
  std::vector<Scene> train, test;
  train.reserve(n_train);
  test.reserve(n_test);
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_train ? train : test).push_back(labeled[order[i]]);
  return {std::move(train), std::move(test)};
}

Scene strip_importance(const Scene& scene) {
  Scene s = scene;
  if (s.labels) s.labels->importance.reset();
  return s;
}

}  // namespace relimp
