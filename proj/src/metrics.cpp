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

#include "relimp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace relimp {

const SliceMetrics& MetricsReport::slice(const std::string& name) const {
  for (const auto& s : slices)
    if (s.slice == name) return s;
  throw std::out_of_range("metrics: no slice '" + name + "'");
}

double ConfusionCounts::accuracy() const {
  if (total() == 0) return 0.0;
  return 100.0 * static_cast<double>(tp + tn) / static_cast<double>(total());
}

double ConfusionCounts::f1() const {
  const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (p + r == 0.0) return 0.0;
  return 100.0 * 2.0 * p * r / (p + r);
}

MetricsReport compute_metrics(const std::vector<std::vector<int>>& predictions,
                              const std::vector<std::vector<int>>& labels, std::span<const Intention> intentions,
                              const std::string& config, std::uint64_t seed) {
  if (predictions.size() != labels.size() || labels.size() != intentions.size()) {
    throw std::invalid_argument("compute_metrics: " + std::to_string(predictions.size()) + " predictions, " +
                                std::to_string(labels.size()) + " labels, " + std::to_string(intentions.size()) +
                                " intentions");
  }
  ConfusionCounts counts[4];
  std::size_t scenes[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i].size() != labels[i].size()) {
      throw std::invalid_argument("compute_metrics: scene " + std::to_string(i) + " has " +
                                  std::to_string(predictions[i].size()) + " predictions for " +
                                  std::to_string(labels[i].size()) + " labels");
    }
    const std::size_t slot = 1 + static_cast<std::size_t>(intentions[i]);
    for (std::size_t k : {std::size_t{0}, slot}) {
      ++scenes[k];
      for (std::size_t j = 0; j < labels[i].size(); ++j) {
        const bool pred = predictions[i][j] != 0, truth = labels[i][j] != 0;
        auto& c = counts[k];
        if (pred && truth) ++c.tp;
        else if (pred) ++c.fp;
        else if (truth) ++c.fn;
        else ++c.tn;
      }
    }
  }
  MetricsReport report;
  report.config = config;
  report.seed = seed;
  for (std::size_t k = 0; k < 4; ++k) {
    report.slices.push_back({kSliceNames[k], counts[k].accuracy(), counts[k].f1(), scenes[k], counts[k].total()});
  }
  return report;
}

MetricsReport compute_metrics(const std::vector<std::vector<int>>& predictions, std::span<const Scene> scenes,
                              const std::string& config, std::uint64_t seed) {
  std::vector<std::vector<int>> labels;
  std::vector<Intention> intentions;
  for (const auto& s : scenes) {
    if (!s.has_importance()) throw std::invalid_argument("compute_metrics: scene '" + s.scene_id + "' is unlabeled");
    labels.push_back(*s.labels->importance);
    intentions.push_back(s.intention);
  }
  return compute_metrics(predictions, labels, intentions, config, seed);
}

std::string metrics_csv_header() { return "slice,config,seed,accuracy,f1,n_scenes,n_objects\n"; }

std::string metrics_csv_rows(const MetricsReport& report) {
  std::string out;
  char buf[256];
  for (const auto& s : report.slices) {
    std::snprintf(buf, sizeof buf, ",%llu,%.6f,%.6f,%zu,%zu\n", static_cast<unsigned long long>(report.seed),
                  s.accuracy, s.f1, s.n_scenes, s.n_objects);
    out += s.slice + "," + report.config + buf;
  }
  return out;
}

std::string_view baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kLargestBox: return "B-1";
    case BaselineKind::kImageCenter: return "B-2";
    case BaselineKind::kClosest: return "B-3";
  }
  return "?";
}

std::vector<int> baseline_predict(const Scene& scene, BaselineKind kind) {
  if (scene.objects.empty()) throw std::invalid_argument("baseline: scene '" + scene.scene_id + "' has no objects");
  std::vector<double> cost;
  for (const auto& o : scene.objects) {
    if (o.boxes.empty()) throw std::invalid_argument("baseline: object '" + o.id + "' has no boxes");
    const auto n = normalize_bbox(o.boxes.back(), scene.width, scene.height);
    switch (kind) {
      case BaselineKind::kLargestBox:
        cost.push_back(-(n[2] * n[3]));
        break;
      case BaselineKind::kImageCenter:
        cost.push_back(std::hypot(o.boxes.back().x - scene.width / 2, o.boxes.back().y - scene.height / 2));
        break;
      case BaselineKind::kClosest:
        if (!o.distance_to_ego) {
          throw std::invalid_argument("baseline B-3: object '" + o.id + "' in scene '" + scene.scene_id +
                                      "' has no distance_to_ego");
        }
        cost.push_back(*o.distance_to_ego);
        break;
    }
  }
  std::vector<int> out(cost.size(), 0);
  out[std::min_element(cost.begin(), cost.end()) - cost.begin()] = 1;
  return out;
}

namespace {

// Exact when all entries are equal, so perfect agreement cancels exactly.
double stable_mean(std::span<const double> v) {
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return v.front();
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

AnovaTable two_way_anova(const std::vector<std::vector<double>>& ratings) {
  const std::size_t k = ratings.size();
  if (k < 2) throw std::invalid_argument("icc: need at least 2 raters");
  const std::size_t n = ratings[0].size();
  if (n < 2) throw std::invalid_argument("icc: need at least 2 subjects");
  for (const auto& r : ratings) {
    if (r.size() != n) throw std::invalid_argument("icc: raters rated different numbers of subjects");
    for (double x : r)
      if (!std::isfinite(x)) throw std::invalid_argument("icc: non-finite rating");
  }
  std::vector<double> rater_mean(k), subject_mean(n), column(k);
  for (std::size_t r = 0; r < k; ++r) rater_mean[r] = stable_mean(ratings[r]);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r < k; ++r) column[r] = ratings[r][s];
    subject_mean[s] = stable_mean(column);
  }
  const double grand = stable_mean(rater_mean);
  double ss_subjects = 0, ss_raters = 0, ss_error = 0, ss_within = 0;
  for (double m : subject_mean) ss_subjects += (m - grand) * (m - grand);
  ss_subjects *= static_cast<double>(k);
  for (double m : rater_mean) ss_raters += (m - grand) * (m - grand);
  ss_raters *= static_cast<double>(n);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t s = 0; s < n; ++s) {
      const double e = ratings[r][s] - subject_mean[s] - rater_mean[r] + grand;
      ss_error += e * e;
      const double w = ratings[r][s] - subject_mean[s];
      ss_within += w * w;
    }
  }
  AnovaTable t;
  t.subjects = n;
  t.raters = k;
  t.ms_subjects = ss_subjects / static_cast<double>(n - 1);
  t.ms_raters = ss_raters / static_cast<double>(k - 1);
  t.ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));
  t.ms_within = ss_within / static_cast<double>(n * (k - 1));
  return t;
}

double icc(const std::vector<std::vector<double>>& ratings, IccForm form) {
  const AnovaTable t = two_way_anova(ratings);
  const double k = static_cast<double>(t.raters), n = static_cast<double>(t.subjects);
  double num = 0, den = 0;
  switch (form) {
    case IccForm::kOneWay:
      num = t.ms_subjects - t.ms_within;
      den = t.ms_subjects + (k - 1) * t.ms_within;
      break;
    case IccForm::kTwoWayRandom:
      num = t.ms_subjects - t.ms_error;
      den = t.ms_subjects + (k - 1) * t.ms_error + k * (t.ms_raters - t.ms_error) / n;
      break;
    case IccForm::kTwoWayMixed:
      num = t.ms_subjects - t.ms_error;
      den = t.ms_subjects + (k - 1) * t.ms_error;
      break;
  }
  if (t.ms_subjects == 0 && t.ms_raters == 0 && t.ms_error == 0) {
    throw std::domain_error("icc: undefined, ratings have zero total variance");
  }
  if (den == 0) throw std::domain_error("icc: undefined, zero denominator");
  return num / den;
}

std::vector<std::vector<double>> read_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ratings: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("ratings: empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "subject,rater,value") {
    throw std::runtime_error("ratings: expected header 'subject,rater,value', got '" + line + "'");
  }
  std::map<std::string, std::size_t> subjects, raters;
  std::vector<std::tuple<std::size_t, std::size_t, double>> cells;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string subj, rater, value;
    if (!std::getline(ss, subj, ',') || !std::getline(ss, rater, ',') || !std::getline(ss, value)) {
      throw std::runtime_error("ratings: line " + std::to_string(lineno) + ": expected 3 fields");
    }
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error("ratings: line " + std::to_string(lineno) + ": bad value '" + value + "'");
    }
    const std::size_t si = subjects.emplace(subj, subjects.size()).first->second;
    const std::size_t ri = raters.emplace(rater, raters.size()).first->second;
    cells.emplace_back(si, ri, v);
  }
  std::vector<std::vector<double>> out(raters.size(), std::vector<double>(subjects.size(), std::nan("")));
  for (const auto& [s, r, v] : cells) {
    if (!std::isnan(out[r][s])) throw std::runtime_error("ratings: duplicate cell for a subject/rater pair");
    out[r][s] = v;
  }
  for (const auto& row : out)
    for (double v : row)
      if (std::isnan(v)) throw std::runtime_error("ratings: missing cell; every rater must rate every subject");
  return out;
}

}  // namespace relimp
