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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "relimp/scene.hpp"

namespace relimp {

struct SliceMetrics {
  std::string slice;  // overall | forward | left | right
  double accuracy = 0;  // percent
  double f1 = 0;        // percent, important = positive
  std::size_t n_scenes = 0;
  std::size_t n_objects = 0;
};

struct MetricsReport {
  std::string config;
  std::uint64_t seed = 0;
  std::vector<SliceMetrics> slices;  // overall, forward, left, right

  const SliceMetrics& slice(const std::string& name) const;
  const SliceMetrics& overall() const { return slice("overall"); }
};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;  // percent; 0 when empty
  double f1() const;        // percent; 0 when P + R = 0
};

// Object-level metrics; predictions[i] and labels[i] belong to scene i.
MetricsReport compute_metrics(const std::vector<std::vector<int>>& predictions,
                              const std::vector<std::vector<int>>& labels, std::span<const Intention> intentions,
                              const std::string& config = "", std::uint64_t seed = 0);

// Evaluates against the importance labels of `scenes`.
MetricsReport compute_metrics(const std::vector<std::vector<int>>& predictions, std::span<const Scene> scenes,
                              const std::string& config = "", std::uint64_t seed = 0);

inline const std::vector<std::string> kSliceNames{"overall", "forward", "left", "right"};

std::string metrics_csv_header();
// One row per slice: slice,config,seed,accuracy,f1,n_scenes,n_objects.
std::string metrics_csv_rows(const MetricsReport& report);

enum class BaselineKind { kLargestBox, kImageCenter, kClosest };  // B-1, B-2, B-3

std::string_view baseline_name(BaselineKind kind);

// Selects exactly one object (label 1); ties go to the lowest index.
std::vector<int> baseline_predict(const Scene& scene, BaselineKind kind);

enum class IccForm {
  kOneWay,        // ICC(1,1)
  kTwoWayRandom,  // ICC(2,1), absolute agreement
  kTwoWayMixed,   // ICC(3,1), consistency
};

struct AnovaTable {
  double ms_subjects = 0;  // between-subjects mean square
  double ms_raters = 0;
  double ms_error = 0;
  double ms_within = 0;    // one-way within-subject mean square
  std::size_t subjects = 0;
  std::size_t raters = 0;
};

// ratings[r][s]: rater r, subject s.
AnovaTable two_way_anova(const std::vector<std::vector<double>>& ratings);
double icc(const std::vector<std::vector<double>>& ratings, IccForm form = IccForm::kTwoWayRandom);

// CSV with header subject,rater,value; every (subject, rater) cell exactly once.
std::vector<std::vector<double>> read_ratings_csv(const std::filesystem::path& path);

}  // namespace relimp
