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

#include "relimp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace relimp {
namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string& strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> config_order(const std::vector<MetricsReport>& reports) {
  std::vector<std::string> order;
  for (const auto& r : reports) {
    if (std::find(order.begin(), order.end(), r.config) == order.end()) order.push_back(r.config);
  }
  return order;
}

SummaryStat stat_of(const std::vector<MetricsReport>& reports, const std::string& config, const std::string& slice,
                    bool f1) {
  std::vector<double> v;
  for (const auto& r : reports) {
    if (r.config != config) continue;
    const SliceMetrics& s = r.slice(slice);
    v.push_back(f1 ? s.f1 : s.accuracy);
  }
  return summarize(v);
}

}  // namespace

void AblationConfig::validate() const {
  if (mode == TrainMode::kSupervised && (use_ranking_pseudo || use_loss_weighting)) {
    throw std::invalid_argument("ablation '" + name +
                                "': ranking and loss weighting apply only to semi-supervised training");
  }
}

std::vector<AblationConfig> ablation_configs() {
  using M = TrainMode;
  // name, mode, intention, graph, auxiliary, ranking, weighting
  return {
      {"Ours-S-1", M::kSupervised, true, false, false, false, false},
      {"Ours-S-2", M::kSupervised, false, true, false, false, false},
      {"Ours-S-3", M::kSupervised, true, true, false, false, false},
      {"Ours-S", M::kSupervised, true, true, true, false, false},
      {"Ours-SS-1", M::kSemiSupervised, true, true, false, true, false},
      {"Ours-SS-2", M::kSemiSupervised, true, true, false, false, true},
      {"Ours-SS-3", M::kSemiSupervised, true, true, false, true, true},
      {"Ours-SS", M::kSemiSupervised, true, true, true, true, true},
  };
}

AblationConfig find_ablation(std::string_view name) {
  for (auto& c : ablation_configs()) {
    if (c.name == name) return c;
  }
  throw std::invalid_argument("unknown ablation config '" + std::string(name) + "'");
}

void apply_ablation(const AblationConfig& a, ModelConfig& model, TrainConfig& train) {
  a.validate();
  model.use_intention = a.use_intention;
  model.use_relation_graph = a.use_relation_graph;
  train.mode = a.mode;
  train.use_auxiliary = a.use_auxiliary;
  train.pseudo.ranking = a.use_ranking_pseudo;
  train.use_loss_weighting = a.use_loss_weighting;
}

BenchmarkSplit prepare_benchmark(const Dataset& data, double split_ratio, std::uint64_t split_seed,
                                 double label_fraction) {
  if (!(label_fraction > 0 && label_fraction <= 1)) {
    throw std::invalid_argument("prepare_benchmark: label_fraction must lie in (0, 1]");
  }
  BenchmarkSplit out;
  std::tie(out.train, out.test) = split_dataset(data.labeled, split_ratio, split_seed);
  out.unlabeled = data.unlabeled;
  const auto keep = static_cast<std::size_t>(std::floor(out.train.size() * label_fraction));
  for (std::size_t i = keep; i < out.train.size(); ++i) out.unlabeled.push_back(strip_importance(out.train[i]));
  out.train.resize(keep);
  if (out.train.empty()) throw std::invalid_argument("prepare_benchmark: no labeled training scenes left");
  return out;
}

TrainedModel train_ablation(const BenchmarkSplit& split, const AblationConfig& ablation, const ModelConfig& model,
                            const TrainConfig& train, std::uint64_t seed) {
  ModelConfig mc = model;
  TrainConfig tc = train;
  apply_ablation(ablation, mc, tc);
  mc.init_seed = seed;
  tc.seed = seed;
  if (!split.train.empty()) mc = model_config_for(mc, split.train.front());
  TrainedModel out{ImportanceModel(mc), {}};
  static const std::vector<Scene> kNone;
  const auto& unlabeled = tc.mode == TrainMode::kSemiSupervised ? split.unlabeled : kNone;
  out.result = relimp::train(out.model, split.train, unlabeled, tc);
  return out;
}

std::vector<MetricsReport> run_ablation(const BenchmarkSplit& split, const std::vector<AblationConfig>& configs,
                                        const std::vector<std::uint64_t>& seeds, const ModelConfig& model,
                                        const TrainConfig& train, const ProgressFn& progress) {
  for (const auto& c : configs) c.validate();
  std::vector<MetricsReport> reports;
  for (const auto& c : configs) {
    for (std::uint64_t seed : seeds) {
      TrainedModel t = train_ablation(split, c, model, train, seed);
      reports.push_back(evaluate_model(t.model, split.test, c.name, seed));
      if (progress) {
        progress(c.name + " seed " + std::to_string(seed) + ": accuracy " +
                 fmt("%.2f", reports.back().overall().accuracy) + " f1 " + fmt("%.2f", reports.back().overall().f1));
      }
    }
  }
  return reports;
}

MetricsReport baseline_report(std::span<const Scene> scenes, BaselineKind kind, std::uint64_t seed) {
  std::vector<std::vector<int>> preds;
  preds.reserve(scenes.size());
  for (const Scene& s : scenes) preds.push_back(baseline_predict(s, kind));
  return compute_metrics(preds, scenes, std::string(baseline_name(kind)), seed);
}

std::vector<MetricsReport> baseline_reports(std::span<const Scene> scenes, std::uint64_t seed) {
  return {baseline_report(scenes, BaselineKind::kLargestBox, seed),
          baseline_report(scenes, BaselineKind::kImageCenter, seed),
          baseline_report(scenes, BaselineKind::kClosest, seed)};
}

std::string metrics_csv(const std::vector<MetricsReport>& reports) {
  std::string out = metrics_csv_header();
  for (const auto& r : reports) out += metrics_csv_rows(r);
  return out;
}

std::vector<MetricsReport> parse_metrics_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::string header = metrics_csv_header();
  header.pop_back();
  if (!std::getline(in, line) || strip_cr(line) != header) {
    throw std::invalid_argument("metrics CSV: expected header '" + header + "'");
  }
  std::vector<MetricsReport> reports;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) throw std::invalid_argument("metrics CSV line " + std::to_string(line_no) + ": 7 fields expected");
    SliceMetrics s;
    std::uint64_t seed = 0;
    try {
      s.slice = cells[0];
      seed = std::stoull(cells[2]);
      s.accuracy = std::stod(cells[3]);
      s.f1 = std::stod(cells[4]);
      s.n_scenes = std::stoull(cells[5]);
      s.n_objects = std::stoull(cells[6]);
    } catch (const std::exception&) {
      throw std::invalid_argument("metrics CSV line " + std::to_string(line_no) + ": bad number");
    }
    auto it = std::find_if(reports.begin(), reports.end(),
                           [&](const MetricsReport& r) { return r.config == cells[1] && r.seed == seed; });
    if (it == reports.end()) {
      reports.push_back({cells[1], seed, {}});
      it = std::prev(reports.end());
    }
    it->slices.push_back(s);
  }
  for (const auto& r : reports) {
    for (const auto& name : kSliceNames) {
      if (std::none_of(r.slices.begin(), r.slices.end(), [&](const SliceMetrics& s) { return s.slice == name; })) {
        throw std::invalid_argument("metrics CSV: config '" + r.config + "' seed " + std::to_string(r.seed) +
                                    " lacks slice '" + name + "'");
      }
    }
  }
  return reports;
}

SummaryStat summarize(std::span<const double> values) {
  SummaryStat s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

std::string summary_table_csv(const std::vector<MetricsReport>& reports) {
  const auto configs = config_order(reports);
  std::string out = "slice,metric";
  for (const auto& c : configs) out += "," + c + "_mean," + c + "_std";
  out += "\n";
  for (const auto& slice : kSliceNames) {
    for (bool f1 : {false, true}) {
      out += slice + (f1 ? ",f1" : ",accuracy");
      for (const auto& c : configs) {
        const SummaryStat s = stat_of(reports, c, slice, f1);
        out += fmt(",%.6f", s.mean) + fmt(",%.6f", s.stddev);
      }
      out += "\n";
    }
  }
  return out;
}

std::string render_summary_table(const std::vector<MetricsReport>& reports) {
  const auto configs = config_order(reports);
  std::size_t width = 16;
  for (const auto& c : configs) width = std::max(width, c.size() + 2);
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::string out = pad("", 18);
  for (const auto& c : configs) out += pad(c, width);
  out += "\n";
  for (const auto& slice : kSliceNames) {
    for (bool f1 : {false, true}) {
      std::string label = slice + (f1 ? " F1" : " Acc");
      label.resize(18, ' ');
      out += label;
      for (const auto& c : configs) {
        const SummaryStat s = stat_of(reports, c, slice, f1);
        std::string cell = fmt("%.1f", s.mean);
        if (s.n > 1) cell += fmt(" +/- %.1f", s.stddev);
        out += pad(cell, width);
      }
      out += "\n";
    }
  }
  return out;
}

std::vector<SweepCell> sweep_thresholds(const BenchmarkSplit& split, const std::vector<double>& alpha1,
                                        const std::vector<double>& alpha2, const std::vector<std::uint64_t>& seeds,
                                        const ModelConfig& model, const TrainConfig& train,
                                        const ProgressFn& progress) {
  const AblationConfig ours = find_ablation("Ours-SS");
  for (double a1 : alpha1) {
    for (double a2 : alpha2) PseudoLabelConfig{a1, a2, true}.validate();
  }
  std::vector<SweepCell> cells;
  for (double a1 : alpha1) {
    for (double a2 : alpha2) {
      TrainConfig tc = train;
      tc.pseudo.alpha1 = a1;
      tc.pseudo.alpha2 = a2;
      for (std::uint64_t seed : seeds) {
        TrainedModel t = train_ablation(split, ours, model, tc, seed);
        cells.push_back({a1, a2, evaluate_model(t.model, split.test, ours.name, seed)});
        if (progress) {
          progress("alpha1 " + fmt("%g", a1) + " alpha2 " + fmt("%g", a2) + " seed " + std::to_string(seed) +
                   ": f1 " + fmt("%.2f", cells.back().report.overall().f1));
        }
      }
    }
  }
  return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::vector<std::pair<double, double>> order;
  std::map<std::pair<double, double>, std::pair<std::vector<double>, std::vector<double>>> values;
  for (const auto& c : cells) {
    const std::pair<double, double> key{c.alpha1, c.alpha2};
    if (!values.count(key)) order.push_back(key);
    values[key].first.push_back(c.report.overall().accuracy);
    values[key].second.push_back(c.report.overall().f1);
  }
  std::string out = "alpha1,alpha2,accuracy_mean,accuracy_std,f1_mean,f1_std,n_seeds\n";
  for (const auto& key : order) {
    const SummaryStat acc = summarize(values[key].first);
    const SummaryStat f1 = summarize(values[key].second);
    out += fmt("%g", key.first) + fmt(",%g", key.second) + fmt(",%.6f", acc.mean) + fmt(",%.6f", acc.stddev) +
           fmt(",%.6f", f1.mean) + fmt(",%.6f", f1.stddev) + "," + std::to_string(acc.n) + "\n";
  }
  return out;
}

}  // namespace relimp
