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

#include "relimp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace relimp {
namespace {

using nlohmann::json;

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument("config: '" + path_ + "' must be an object");
  }
  ~Section() = default;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config: bad value for '" + name(key) + "'");
    }
  }

  void get_size(const std::string& key, std::size_t& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw std::invalid_argument("config: '" + name(key) + "' must be a non-negative integer");
    }
    out = v.get<std::size_t>();
  }

  void get_seed(const std::string& key, std::uint64_t& out) {
    std::size_t v = out;
    get_size(key, v);
    out = v;
  }

  const json& at(const std::string& key) { return j_.at(key); }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw std::invalid_argument("config: unknown key '" + name(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_oracle(Section& s, synth::OracleParams& o) {
  s.get("range", o.range);
  s.get("horizon_s", o.horizon_s);
  s.get("lateral_margin", o.lateral_margin);
  s.get("corridor_width", o.corridor_width);
  s.get("bearing_tolerance", o.bearing_tolerance);
  s.get("time_step", o.time_step);
  s.finish();
}

void read_generator(Section& s, synth::GenConfig& g) {
  s.get_seed("seed", g.seed);
  s.get_size("scene_count", g.scene_count);
  s.get_size("unlabeled_count", g.unlabeled_count);
  s.get_size("min_objects", g.min_objects);
  s.get_size("max_objects", g.max_objects);
  s.get("intention_mix", g.intention_mix);
  s.get("kinematic_noise", g.kinematic_noise);
  s.get("feature_noise", g.feature_noise);
  s.get("v_stop", g.thresholds.v_stop);
  s.get("a_dead", g.thresholds.a_dead);
  s.get_size("horizon", g.horizon);
  s.get_size("future", g.future);
  s.get("frame_dt", g.frame_dt);
  s.get("image_width", g.image_width);
  s.get("image_height", g.image_height);
  s.get("focal", g.focal);
  s.get_size("appearance_dim", g.appearance_dim);
  s.get_size("depthsem_dim", g.depthsem_dim);
  s.get("occlusion_scene_prob", g.occlusion_scene_prob);
  if (s.has("oracle")) {
    Section o(s.at("oracle"), s.name("oracle"));
    read_oracle(o, g.oracle);
  }
  s.finish();
}

void read_model(Section& s, ModelConfig& m) {
  if (s.has("preset")) {
    std::string preset;
    s.get("preset", preset);
    if (preset == "desk") {
      m = ModelConfig::desk();
    } else if (preset == "full") {
      m = ModelConfig{};
    } else {
      throw std::invalid_argument("config: unknown model preset '" + preset + "'");
    }
  }
  s.get_size("lstm_hidden", m.encoder.lstm_hidden);
  s.get_size("mlp_hidden", m.encoder.mlp_hidden);
  s.get_size("feat_dim", m.encoder.feat_dim);
  s.get_size("graph_hidden", m.graph_hidden);
  s.get_size("mp_rounds", m.mp_rounds);
  s.get_size("cls_hidden", m.cls_hidden);
  s.get_size("small_hidden", m.small_hidden);
  s.get_size("large_hidden", m.large_hidden);
  s.get("tau", m.tau);
  s.get_size("t_future", m.t_future);
  s.get("use_intention", m.use_intention);
  s.get("use_relation_graph", m.use_relation_graph);
  s.finish();
}

GammaSchedule::Shape parse_shape(const std::string& s) {
  if (s == "exponential") return GammaSchedule::Shape::kExponential;
  if (s == "linear") return GammaSchedule::Shape::kLinear;
  throw std::invalid_argument("config: unknown gamma shape '" + s + "'");
}

PseudoRefresh parse_refresh(const std::string& s) {
  if (s == "epoch") return PseudoRefresh::kEpoch;
  if (s == "iteration") return PseudoRefresh::kIteration;
  throw std::invalid_argument("config: unknown pseudo_refresh '" + s + "'");
}

void read_train(Section& s, TrainConfig& t) {
  if (s.has("mode")) {
    std::string mode;
    s.get("mode", mode);
    try {
      t.mode = parse_train_mode(mode);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("config: unknown train mode '" + mode + "'");
    }
  }
  s.get_size("batch_size", t.batch_size);
  s.get_size("epochs", t.epochs);
  s.get("lr", t.lr);
  s.get("alpha1", t.pseudo.alpha1);
  s.get("alpha2", t.pseudo.alpha2);
  s.get("lambda", t.loss.lambda);
  s.get("beta", t.loss.beta);
  s.get("trajectory_unit", t.loss.trajectory_unit);
  s.get("use_auxiliary", t.use_auxiliary);
  s.get("use_ranking_pseudo", t.pseudo.ranking);
  s.get("use_loss_weighting", t.use_loss_weighting);
  if (s.has("pseudo_refresh")) {
    std::string r;
    s.get("pseudo_refresh", r);
    t.refresh = parse_refresh(r);
  }
  if (s.has("gamma_schedule")) {
    Section g(s.at("gamma_schedule"), s.name("gamma_schedule"));
    g.get("init", t.gamma.init);
    g.get("max", t.gamma.max);
    g.get("ramp", t.gamma.ramp_epochs);
    if (g.has("shape")) {
      std::string shape;
      g.get("shape", shape);
      t.gamma.shape = parse_shape(shape);
    }
    g.finish();
  }
  s.get_size("patience", t.patience);
  s.get("val_fraction", t.val_fraction);
  s.get_seed("seed", t.seed);
  s.finish();
}

void read_experiment(Section& s, ExperimentConfig& e) {
  s.get("split_ratio", e.split_ratio);
  s.get_seed("split_seed", e.split_seed);
  s.get("label_fraction", e.label_fraction);
  s.get("seeds", e.seeds);
  s.get("configs", e.configs);
  s.get("grid_alpha1", e.grid_alpha1);
  s.get("grid_alpha2", e.grid_alpha2);
  if (s.has("icc_form")) {
    std::string f;
    s.get("icc_form", f);
    e.icc_form = parse_icc_form(f);
  }
  s.finish();
}

std::string_view shape_name(GammaSchedule::Shape s) {
  return s == GammaSchedule::Shape::kLinear ? "linear" : "exponential";
}

std::string_view icc_form_name(IccForm f) {
  switch (f) {
    case IccForm::kOneWay:
      return "one_way";
    case IccForm::kTwoWayRandom:
      return "two_way_random";
    case IccForm::kTwoWayMixed:
      return "two_way_mixed";
  }
  return "two_way_random";
}

}  // namespace

IccForm parse_icc_form(std::string_view s) {
  if (s == "one_way") return IccForm::kOneWay;
  if (s == "two_way_random") return IccForm::kTwoWayRandom;
  if (s == "two_way_mixed") return IccForm::kTwoWayMixed;
  throw std::invalid_argument("config: unknown icc_form '" + std::string(s) + "'");
}

void AppConfig::validate() const {
  generator.validate();
  train.validate();
  if (!(experiment.split_ratio > 0 && experiment.split_ratio < 1)) {
    throw std::invalid_argument("config: experiment.split_ratio must lie in (0, 1)");
  }
  if (!(experiment.label_fraction > 0 && experiment.label_fraction <= 1)) {
    throw std::invalid_argument("config: experiment.label_fraction must lie in (0, 1]");
  }
  if (experiment.seeds.empty()) throw std::invalid_argument("config: experiment.seeds must not be empty");
  if (model.t_future != generator.future) {
    throw std::invalid_argument("config: model.t_future must equal generator.future");
  }
  ModelConfig m = model;
  m.encoder.appearance_dim = generator.appearance_dim;
  m.encoder.depthsem_dim = generator.depthsem_dim;
  m.encoder.horizon = generator.horizon;
  m.validate();
}

AppConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  AppConfig c;
  Section root(j, "");
  if (root.has("generator")) {
    Section s(root.at("generator"), "generator");
    read_generator(s, c.generator);
  }
  if (root.has("model")) {
    Section s(root.at("model"), "model");
    read_model(s, c.model);
  }
  if (root.has("train")) {
    Section s(root.at("train"), "train");
    read_train(s, c.train);
  }
  if (root.has("experiment")) {
    Section s(root.at("experiment"), "experiment");
    read_experiment(s, c.experiment);
  }
  root.finish();
  c.model.encoder.appearance_dim = c.generator.appearance_dim;
  c.model.encoder.depthsem_dim = c.generator.depthsem_dim;
  c.model.encoder.horizon = c.generator.horizon;
  c.model.init_seed = c.train.seed;
  c.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const AppConfig& c) {
  const auto& g = c.generator;
  const auto& m = c.model;
  const auto& t = c.train;
  const auto& e = c.experiment;
  json j;
  j["generator"] = {
      {"seed", g.seed},
      {"scene_count", g.scene_count},
      {"unlabeled_count", g.unlabeled_count},
      {"min_objects", g.min_objects},
      {"max_objects", g.max_objects},
      {"intention_mix", g.intention_mix},
      {"kinematic_noise", g.kinematic_noise},
      {"feature_noise", g.feature_noise},
      {"v_stop", g.thresholds.v_stop},
      {"a_dead", g.thresholds.a_dead},
      {"horizon", g.horizon},
      {"future", g.future},
      {"frame_dt", g.frame_dt},
      {"image_width", g.image_width},
      {"image_height", g.image_height},
      {"focal", g.focal},
      {"appearance_dim", g.appearance_dim},
      {"depthsem_dim", g.depthsem_dim},
      {"occlusion_scene_prob", g.occlusion_scene_prob},
      {"oracle",
       {{"range", g.oracle.range},
        {"horizon_s", g.oracle.horizon_s},
        {"lateral_margin", g.oracle.lateral_margin},
        {"corridor_width", g.oracle.corridor_width},
        {"bearing_tolerance", g.oracle.bearing_tolerance},
        {"time_step", g.oracle.time_step}}},
  };
  j["model"] = {
      {"lstm_hidden", m.encoder.lstm_hidden},
      {"mlp_hidden", m.encoder.mlp_hidden},
      {"feat_dim", m.encoder.feat_dim},
      {"graph_hidden", m.graph_hidden},
      {"mp_rounds", m.mp_rounds},
      {"cls_hidden", m.cls_hidden},
      {"small_hidden", m.small_hidden},
      {"large_hidden", m.large_hidden},
      {"tau", m.tau},
      {"t_future", m.t_future},
      {"use_intention", m.use_intention},
      {"use_relation_graph", m.use_relation_graph},
  };
  j["train"] = {
      {"mode", t.mode == TrainMode::kSupervised ? "supervised" : "ssl"},
      {"batch_size", t.batch_size},
      {"epochs", t.epochs},
      {"lr", t.lr},
      {"alpha1", t.pseudo.alpha1},
      {"alpha2", t.pseudo.alpha2},
      {"lambda", t.loss.lambda},
      {"beta", t.loss.beta},
      {"trajectory_unit", t.loss.trajectory_unit},
      {"use_auxiliary", t.use_auxiliary},
      {"use_ranking_pseudo", t.pseudo.ranking},
      {"use_loss_weighting", t.use_loss_weighting},
      {"pseudo_refresh", t.refresh == PseudoRefresh::kEpoch ? "epoch" : "iteration"},
      {"gamma_schedule",
       {{"init", t.gamma.init}, {"max", t.gamma.max}, {"ramp", t.gamma.ramp_epochs}, {"shape", shape_name(t.gamma.shape)}}},
      {"patience", t.patience},
      {"val_fraction", t.val_fraction},
      {"seed", t.seed},
  };
  j["experiment"] = {
      {"split_ratio", e.split_ratio},
      {"split_seed", e.split_seed},
      {"label_fraction", e.label_fraction},
      {"seeds", e.seeds},
      {"configs", e.configs},
      {"grid_alpha1", e.grid_alpha1},
      {"grid_alpha2", e.grid_alpha2},
      {"icc_form", icc_form_name(e.icc_form)},
  };
  return j.dump(2) + "\n";
}

}  // namespace relimp
