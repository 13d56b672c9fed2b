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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "relimp/metrics.hpp"

using namespace relimp;
using relimp::testing::simple_scene;

namespace {

Scene boxed_scene(const std::vector<BBox>& current) {
  std::mt19937_64 rng(0);
  Scene s = simple_scene("boxes", current.size(), 2, rng);
  s.width = 1000;
  s.height = 1000;
  for (std::size_t j = 0; j < current.size(); ++j) {
    s.objects[j].boxes[0] = {500, 500, 10, 10};
    s.objects[j].boxes[1] = current[j];
  }
  return s;
}

std::vector<std::vector<double>> noisy_ratings(std::mt19937_64& rng, std::size_t raters, std::size_t subjects,
                                               double noise) {
  std::normal_distribution<double> n(0, 1);
  std::vector<double> truth(subjects);
  for (double& t : truth) t = 3 * n(rng);
  std::vector<std::vector<double>> r(raters, std::vector<double>(subjects));
  for (std::size_t i = 0; i < raters; ++i) {
    const double bias = 0.5 * n(rng);
    for (std::size_t s = 0; s < subjects; ++s) r[i][s] = truth[s] + bias + noise * n(rng);
  }
  return r;
}

}  // namespace

TEST_SUITE("eval-cli") {
  TEST_CASE("perfect predictions score 100") {
    const std::vector<std::vector<int>> y{{1, 0, 0}, {0, 1}};
    const std::vector<Intention> in{Intention::kForward, Intention::kLeft};
    const auto r = compute_metrics(y, y, in);
    CHECK(r.overall().accuracy == 100.0);
    CHECK(r.overall().f1 == 100.0);
    CHECK(r.slice("forward").n_objects == 3);
    CHECK(r.slice("left").n_scenes == 1);
    CHECK(r.slice("right").n_scenes == 0);
  }

  TEST_CASE("all-negative predictions have zero F1") {
    const std::vector<std::vector<int>> pred{{0, 0, 0}}, y{{1, 0, 0}};
    const std::vector<Intention> in{Intention::kRight};
    const auto r = compute_metrics(pred, y, in);
    CHECK(r.overall().f1 == 0.0);
    CHECK(r.overall().accuracy == doctest::Approx(200.0 / 3));
  }

  TEST_CASE("hand-computed confusion matrix") {
    const std::vector<std::vector<int>> pred{{1, 0, 1, 0}}, y{{1, 0, 0, 1}};
    const std::vector<Intention> in{Intention::kForward};
    const auto r = compute_metrics(pred, y, in);
    CHECK(r.overall().accuracy == 50.0);
    CHECK(r.overall().f1 == 50.0);
  }

  TEST_CASE("metrics reject misaligned inputs") {
    const std::vector<Intention> in{Intention::kForward};
    CHECK_THROWS(compute_metrics({{1, 0}}, {{1}}, in));
    CHECK_THROWS(compute_metrics({{1}}, {{1}, {0}}, in));
  }

  TEST_CASE("slices partition the test set") {
    std::mt19937_64 rng(1);
    std::vector<std::vector<int>> pred, y;
    std::vector<Intention> in;
    for (int i = 0; i < 60; ++i) {
      const std::size_t n = 1 + rng() % 6;
      std::vector<int> p(n), l(n);
      for (std::size_t j = 0; j < n; ++j) {
        p[j] = static_cast<int>(rng() % 2);
        l[j] = static_cast<int>(rng() % 2);
      }
      pred.push_back(p);
      y.push_back(l);
      in.push_back(static_cast<Intention>(rng() % 3));
    }
    const auto r = compute_metrics(pred, y, in);
    std::size_t scenes = 0, objects = 0;
    for (const char* s : {"forward", "left", "right"}) {
      scenes += r.slice(s).n_scenes;
      objects += r.slice(s).n_objects;
    }
    CHECK(scenes == r.overall().n_scenes);
    CHECK(objects == r.overall().n_objects);

    // Shuffling objects inside every scene changes nothing.
    for (std::size_t i = 0; i < pred.size(); ++i) {
      std::vector<std::size_t> pi(pred[i].size());
      std::iota(pi.begin(), pi.end(), 0);
      std::shuffle(pi.begin(), pi.end(), rng);
      std::vector<int> p2, y2;
      for (std::size_t j : pi) {
        p2.push_back(pred[i][j]);
        y2.push_back(y[i][j]);
      }
      pred[i] = p2;
      y[i] = y2;
    }
    const auto shuffled = compute_metrics(pred, y, in);
    for (const auto& name : kSliceNames) {
      CHECK(shuffled.slice(name).accuracy == r.slice(name).accuracy);
      CHECK(shuffled.slice(name).f1 == r.slice(name).f1);
    }
  }

  TEST_CASE("metrics csv rows") {
    const std::vector<Intention> in{Intention::kForward};
    const auto r = compute_metrics({{1, 0}}, {{1, 0}}, in, "cfg", 4);
    CHECK(metrics_csv_header() == "slice,config,seed,accuracy,f1,n_scenes,n_objects\n");
    const std::string rows = metrics_csv_rows(r);
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 4);
    CHECK(rows.rfind("overall,cfg,4,", 0) == 0);
  }

  TEST_CASE("largest box baseline") {
    const Scene s = boxed_scene({{200, 200, 100, 200}, {500, 500, 250, 200}, {800, 800, 100, 100}});
    CHECK(baseline_predict(s, BaselineKind::kLargestBox) == std::vector<int>{0, 1, 0});
  }

  TEST_CASE("image centre baseline") {
    const Scene s = boxed_scene({{500, 500, 20, 20}, {900, 900, 20, 20}});
    CHECK(baseline_predict(s, BaselineKind::kImageCenter) == std::vector<int>{1, 0});
  }

  TEST_CASE("closest object baseline and its precondition") {
    Scene s = boxed_scene({{500, 500, 20, 20}, {900, 900, 20, 20}, {100, 100, 20, 20}});
    s.objects[0].distance_to_ego = 12;
    s.objects[1].distance_to_ego = 4;
    s.objects[2].distance_to_ego = 4;
    CHECK(baseline_predict(s, BaselineKind::kClosest) == std::vector<int>{0, 1, 0});
    s.objects[2].distance_to_ego.reset();
    CHECK_THROWS(baseline_predict(s, BaselineKind::kClosest));
  }

  TEST_CASE("ties go to the lowest index") {
    const Scene s = boxed_scene({{300, 300, 50, 50}, {700, 700, 50, 50}});
    CHECK(baseline_predict(s, BaselineKind::kLargestBox) == std::vector<int>{1, 0});
    CHECK(baseline_predict(s, BaselineKind::kImageCenter) == std::vector<int>{1, 0});
  }

  TEST_CASE("baselines select exactly one object") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
      const Scene s = simple_scene("b", 1 + rng() % 8, 2, rng);
      for (auto kind : {BaselineKind::kLargestBox, BaselineKind::kImageCenter, BaselineKind::kClosest}) {
        const auto y = baseline_predict(s, kind);
        CHECK(std::accumulate(y.begin(), y.end(), 0) == 1);
        if (s.objects.size() == 1) CHECK(y == std::vector<int>{1});
      }
    }
  }

  TEST_CASE("perfect agreement gives ICC of exactly one") {
    const std::vector<double> subjects{1.0, 4.0, 2.5, 7.0, 3.3};
    const std::vector<std::vector<double>> r(4, subjects);
    for (auto form : {IccForm::kOneWay, IccForm::kTwoWayRandom, IccForm::kTwoWayMixed}) CHECK(icc(r, form) == 1.0);
  }

  TEST_CASE("ICC matches mean-square oracles") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
      const auto r = noisy_ratings(rng, 2 + rng() % 5, 2 + rng() % 30, 0.2 + (rng() % 10) * 0.3);
      CHECK(std::abs(icc(r, IccForm::kTwoWayRandom) - static_cast<double>(relimp::testing::icc21_oracle(r))) < 1e-9);
      CHECK(std::abs(icc(r, IccForm::kOneWay) - static_cast<double>(relimp::testing::icc11_oracle(r))) < 1e-9);
      CHECK(std::abs(icc(r, IccForm::kTwoWayMixed) - static_cast<double>(relimp::testing::icc31_oracle(r))) < 1e-9);
    }
  }

  TEST_CASE("ICC on a textbook table") {
    // Six subjects, four raters.
    const std::vector<std::vector<double>> r{
        {9, 6, 8, 7, 10, 6}, {2, 1, 4, 1, 5, 2}, {5, 3, 6, 2, 6, 4}, {8, 2, 8, 6, 9, 7}};
    CHECK(icc(r, IccForm::kOneWay) == doctest::Approx(0.166).epsilon(5e-3));
    CHECK(icc(r, IccForm::kTwoWayRandom) == doctest::Approx(0.290).epsilon(5e-3));
    CHECK(icc(r, IccForm::kTwoWayMixed) == doctest::Approx(0.715).epsilon(5e-3));
  }

  TEST_CASE("degenerate ratings are undefined") {
    const std::vector<std::vector<double>> flat(3, std::vector<double>(4, 2.0));
    CHECK_THROWS_AS(icc(flat), std::domain_error);
    CHECK_THROWS_AS(icc({{1, 2, 3}}), std::invalid_argument);
    CHECK_THROWS_AS(icc({{1}, {2}}), std::invalid_argument);
  }

  TEST_CASE("ratings csv") {
    const auto path = std::filesystem::temp_directory_path() / "relimp_ratings.csv";
    {
      std::ofstream out(path);
      out << "subject,rater,value\ns1,a,1\ns1,b,1.5\ns2,a,3\ns2,b,2.5\ns3,a,5\ns3,b,5.5\n";
    }
    const auto r = read_ratings_csv(path);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == std::vector<double>{1, 3, 5});
    CHECK(r[1] == std::vector<double>{1.5, 2.5, 5.5});
    {
      std::ofstream out(path);
      out << "subject,rater,value\ns1,a,1\ns1,b,1.5\ns2,a,3\n";
    }
    CHECK_THROWS_WITH(read_ratings_csv(path), doctest::Contains("missing cell"));
    {
      std::ofstream out(path);
      out << "who,what\n";
    }
    CHECK_THROWS_WITH(read_ratings_csv(path), doctest::Contains("header"));
    std::filesystem::remove(path);
  }
}
