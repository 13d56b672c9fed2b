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

#include "doctest.h"
#include "relimp/config.hpp"
#include "relimp/experiments.hpp"
#include "relimp/synth.hpp"

#include <cmath>
#include <set>

using namespace relimp;

TEST_SUITE("config") {
  TEST_CASE("empty document yields the defaults") {
    const AppConfig c = parse_config("{}");
    CHECK(c.train.batch_size == 32);
    CHECK(c.train.epochs == 100);
    CHECK(c.train.lr == 1e-4);
    CHECK(c.train.pseudo.alpha1 == 0.8);
    CHECK(c.train.pseudo.alpha2 == 0.8);
    CHECK(c.train.loss.lambda == 0.5);
    CHECK(c.train.loss.beta == 1.0);
    CHECK(c.train.gamma.init == 0.001);
    CHECK(c.train.gamma.max == 1.0);
    CHECK(c.train.patience == 10);
    CHECK(c.model.tau == 0.1);
    CHECK(c.model.encoder.lstm_hidden == 128);
    CHECK(c.model.encoder.feat_dim == 128);
    CHECK(c.model.t_future == 4);
    CHECK(c.generator.horizon == 8);
    CHECK(c.generator.intention_mix == std::array<double, 3>{4, 1, 1});
    CHECK(c.experiment.grid_alpha1 == std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9});
    CHECK(c.experiment.icc_form == IccForm::kTwoWayRandom);
  }

  TEST_CASE("explicit keys override the preset") {
    const AppConfig c = parse_config(R"({
      "generator": {"seed": 5, "appearance_dim": 6, "horizon": 5, "oracle": {"range": 30}},
      "model": {"preset": "desk", "feat_dim": 24, "mp_rounds": 3},
      "train": {"mode": "ssl", "lr": 0.002, "gamma_schedule": {"shape": "linear", "init": 0, "ramp": 10},
                "pseudo_refresh": "iteration", "seed": 3},
      "experiment": {"seeds": [7, 8], "configs": ["Ours-S"], "icc_form": "one_way"}
    })");
    CHECK(c.generator.seed == 5);
    CHECK(c.generator.oracle.range == 30);
    CHECK(c.model.encoder.lstm_hidden == ModelConfig::desk().encoder.lstm_hidden);
    CHECK(c.model.encoder.feat_dim == 24);
    CHECK(c.model.mp_rounds == 3);
    CHECK(c.model.encoder.appearance_dim == 6);
    CHECK(c.model.encoder.horizon == 5);
    CHECK(c.model.init_seed == 3);
    CHECK(c.train.mode == TrainMode::kSemiSupervised);
    CHECK(c.train.gamma.shape == GammaSchedule::Shape::kLinear);
    CHECK(c.train.refresh == PseudoRefresh::kIteration);
    CHECK(c.experiment.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(c.experiment.icc_form == IccForm::kOneWay);
  }

  TEST_CASE("the full preset restores default widths") {
    const AppConfig c = parse_config(R"({"model": {"preset": "full"}})");
    CHECK(c.model.encoder.lstm_hidden == 128);
    CHECK(c.model.encoder.feat_dim == 128);
  }

  TEST_CASE("serialization round trips") {
    const AppConfig c = parse_config(R"({"model": {"preset": "desk"}, "train": {"alpha1": 0.7, "epochs": 12}})");
    const AppConfig back = parse_config(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK(back.train.pseudo.alpha1 == 0.7);
    CHECK(back.train.epochs == 12);
  }

  TEST_CASE("bad documents are rejected with a reason") {
    CHECK_THROWS_WITH(parse_config("{"), doctest::Contains("malformed JSON"));
    CHECK_THROWS_WITH(parse_config(R"({"train": {"lr": 1, "bogus": 2}})"), doctest::Contains("train.bogus"));
    CHECK_THROWS_WITH(parse_config(R"({"extra": {}})"), doctest::Contains("unknown key 'extra'"));
    CHECK_THROWS_WITH(parse_config(R"({"train": {"epochs": -3}})"), doctest::Contains("train.epochs"));
    CHECK_THROWS_WITH(parse_config(R"({"train": {"lr": "fast"}})"), doctest::Contains("train.lr"));
    CHECK_THROWS_WITH(parse_config(R"({"model": {"preset": "huge"}})"), doctest::Contains("preset"));
    CHECK_THROWS(parse_config(R"({"train": {"alpha1": 1.2}})"));
    CHECK_THROWS(parse_config(R"({"model": {"t_future": 3}})"));
    CHECK_THROWS(parse_config(R"({"experiment": {"split_ratio": 1.0}})"));
    CHECK_THROWS(parse_config(R"({"experiment": {"icc_form": "three_way"}})"));
    CHECK_THROWS_WITH(load_config("/nonexistent/relimp.json"), doctest::Contains("cannot read"));
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("the ablation matrix") {
    const auto rows = ablation_configs();
    REQUIRE(rows.size() == 8);
    const std::vector<std::string> names{"Ours-S-1",  "Ours-S-2",  "Ours-S-3",  "Ours-S",
                                         "Ours-SS-1", "Ours-SS-2", "Ours-SS-3", "Ours-SS"};
    for (std::size_t i = 0; i < 8; ++i) CHECK(rows[i].name == names[i]);
    auto flags = [](const AblationConfig& a) {
      return std::vector<bool>{a.mode == TrainMode::kSemiSupervised, a.use_intention, a.use_relation_graph,
                               a.use_auxiliary, a.use_ranking_pseudo, a.use_loss_weighting};
    };
    CHECK(flags(rows[0]) == std::vector<bool>{false, true, false, false, false, false});
    CHECK(flags(rows[1]) == std::vector<bool>{false, false, true, false, false, false});
    CHECK(flags(rows[2]) == std::vector<bool>{false, true, true, false, false, false});
    CHECK(flags(rows[3]) == std::vector<bool>{false, true, true, true, false, false});
    CHECK(flags(rows[4]) == std::vector<bool>{true, true, true, false, true, false});
    CHECK(flags(rows[5]) == std::vector<bool>{true, true, true, false, false, true});
    CHECK(flags(rows[6]) == std::vector<bool>{true, true, true, false, true, true});
    CHECK(flags(rows[7]) == std::vector<bool>{true, true, true, true, true, true});
    for (const auto& r : rows) CHECK_NOTHROW(r.validate());
    CHECK(find_ablation("Ours-SS-2").use_loss_weighting);
    CHECK_THROWS(find_ablation("Ours-X"));
  }

  TEST_CASE("semi-supervised flags need semi-supervised mode") {
    AblationConfig a;
    a.use_ranking_pseudo = true;
    CHECK_THROWS(a.validate());
  }

  TEST_CASE("ablation flags reach the model and trainer") {
    ModelConfig m;
    TrainConfig t;
    apply_ablation(find_ablation("Ours-S-2"), m, t);
    CHECK_FALSE(m.use_intention);
    CHECK(m.use_relation_graph);
    CHECK_FALSE(t.use_auxiliary);
    CHECK(t.mode == TrainMode::kSupervised);
    apply_ablation(find_ablation("Ours-SS-2"), m, t);
    CHECK(m.use_intention);
    CHECK_FALSE(t.pseudo.ranking);
    CHECK(t.use_loss_weighting);
    CHECK(t.mode == TrainMode::kSemiSupervised);
  }

  TEST_CASE("summaries use the sample deviation") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto s = summarize(v);
    CHECK(s.mean == 2.5);
    CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
    CHECK(s.n == 4);
    CHECK(summarize(std::vector<double>{7}).stddev == 0);
  }

  TEST_CASE("benchmark split moves unlabeled train scenes into the pool") {
    synth::GenConfig g;
    g.scene_count = 40;
    g.unlabeled_count = 6;
    g.max_objects = 5;
    const Dataset d = synth::generate_dataset(g);
    const auto full = prepare_benchmark(d, 0.75, 3, 1.0);
    CHECK(full.test.size() == 10);
    CHECK(full.train.size() == 30);
    CHECK(full.unlabeled.size() == 6);
    const auto quarter = prepare_benchmark(d, 0.75, 3, 0.25);
    CHECK(quarter.test.size() == 10);
    CHECK(quarter.train.size() + quarter.unlabeled.size() == 36);
    CHECK(quarter.train.size() == 7);
    for (const auto& s : quarter.train) CHECK(s.has_importance());
    for (const auto& s : quarter.unlabeled) CHECK_FALSE(s.has_importance());
    std::set<std::string> test_ids, other_ids;
    for (const auto& s : quarter.test) test_ids.insert(s.scene_id);
    for (const auto& s : quarter.train) other_ids.insert(s.scene_id);
    for (const auto& s : quarter.unlabeled) other_ids.insert(s.scene_id);
    for (const auto& id : test_ids) CHECK(other_ids.count(id) == 0);
    for (std::size_t i = 0; i < full.test.size(); ++i) CHECK(full.test[i].scene_id == quarter.test[i].scene_id);
  }

  TEST_CASE("metrics CSV round trips") {
    const std::vector<std::vector<int>> pred{{1, 0}, {0, 1, 0}, {1}};
    const std::vector<std::vector<int>> gold{{1, 1}, {0, 1, 0}, {0}};
    const std::vector<Intention> intent{Intention::kForward, Intention::kLeft, Intention::kForward};
    std::vector<MetricsReport> reports{compute_metrics(pred, gold, intent, "Ours-S", 4),
                                       compute_metrics(gold, gold, intent, "Ours-SS", 5)};
    const auto back = parse_metrics_csv(metrics_csv(reports));
    REQUIRE(back.size() == 2);
    for (std::size_t r = 0; r < 2; ++r) {
      CHECK(back[r].config == reports[r].config);
      CHECK(back[r].seed == reports[r].seed);
      REQUIRE(back[r].slices.size() == reports[r].slices.size());
      for (std::size_t k = 0; k < back[r].slices.size(); ++k) {
        CHECK(back[r].slices[k].slice == reports[r].slices[k].slice);
        CHECK(back[r].slices[k].accuracy == doctest::Approx(reports[r].slices[k].accuracy).epsilon(1e-7));
        CHECK(back[r].slices[k].f1 == doctest::Approx(reports[r].slices[k].f1).epsilon(1e-7));
        CHECK(back[r].slices[k].n_objects == reports[r].slices[k].n_objects);
      }
    }
    CHECK_THROWS(parse_metrics_csv("nope\n1,2\n"));
  }

  TEST_CASE("summary table and sweep CSV shapes") {
    const std::vector<std::vector<int>> gold{{1, 0}, {0, 1}};
    const std::vector<Intention> intent{Intention::kForward, Intention::kRight};
    std::vector<MetricsReport> reports;
    for (std::uint64_t seed = 0; seed < 3; ++seed) reports.push_back(compute_metrics(gold, gold, intent, "A", seed));
    reports.push_back(compute_metrics(gold, gold, intent, "B", 0));
    const std::string table = summary_table_csv(reports);
    CHECK(table.rfind("slice,metric,A_mean,A_std,B_mean,B_std", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 4 * 2);

    std::vector<SweepCell> cells;
    for (double a1 : {0.5, 0.7})
      for (double a2 : {0.6, 0.8, 0.9}) cells.push_back({a1, a2, reports[0]});
    const std::string sweep = sweep_csv(cells);
    CHECK(sweep.rfind("alpha1,alpha2,accuracy_mean,accuracy_std,f1_mean,f1_std,n_seeds\n", 0) == 0);
    CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 1 + 6);
  }
}
