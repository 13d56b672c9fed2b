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

#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "gradcases.hpp"
#include "oracles.hpp"
#include "relimp/nn.hpp"
#include "relimp/params.hpp"

using namespace relimp;
using relimp::testing::finite_difference_check;
using relimp::testing::random_tensor;

TEST_SUITE("tensor-autodiff") {
  TEST_CASE("sigmoid of zero is one half") {
    ad::Tape t;
    CHECK(ad::sigmoid(t.constant(Tensor::scalar(0.0))).value().item() == 0.5);
  }

  TEST_CASE("softmax of equal logits is uniform") {
    ad::Tape t;
    const Tensor out = ad::softmax(t.constant(Tensor({2}, {0.0, 0.0}))).value();
    CHECK(out[0] == 0.5);
    CHECK(out[1] == 0.5);
  }

  TEST_CASE("identity matmul returns its operand") {
    std::mt19937_64 rng(3);
    ad::Tape t;
    const Tensor a = random_tensor(rng, {3, 3});
    const Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    CHECK(ad::matmul(t.constant(eye), t.constant(a)).value() == a);
  }

  TEST_CASE("sigmoid slope at zero") {
    ad::Tape t;
    ad::Var x = t.param(Tensor::scalar(0.0));
    t.backward(ad::sigmoid(x));
    const double h = 1e-6;
    const double numeric = (1 / (1 + std::exp(-h)) - 1 / (1 + std::exp(h))) / (2 * h);
    CHECK(t.grad(x).item() == doctest::Approx(numeric).epsilon(1e-9));
    CHECK(t.grad(x).item() == doctest::Approx(0.25).epsilon(1e-12));
  }

  TEST_CASE("sum of matmul gradient matches central differences") {
    std::mt19937_64 rng(5);
    const auto check = finite_difference_check(
        [](ad::Tape&, const std::vector<ad::Var>& v) { return ad::sum(ad::matmul(v[0], v[1])); },
        {random_tensor(rng, {3, 4}), random_tensor(rng, {4, 2})}, rng);
    CHECK(check.checked == 20);
    CHECK(check.max_rel_error < 1e-7);
  }

  TEST_CASE("every op matches central differences") {
    std::mt19937_64 rng(11);
    for (const auto& op : relimp::testing::op_gradient_cases()) {
      CAPTURE(op.name);
      double worst = 0;
      for (int i = 0; i < 10; ++i) {
        const auto inst = op.make(rng);
        worst = std::max(worst, finite_difference_check(inst.fn, inst.inputs, rng).max_rel_error);
      }
      CHECK(worst < 1e-5);
    }
  }

  TEST_CASE("fused lstm step equals the composite") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
      ad::Tape t;
      auto c = [&](Shape s) { return t.constant(random_tensor(rng, std::move(s))); };
      const std::size_t b = 2, d = 3, h = 4;
      ad::Var x = c({b, d}), h0 = c({b, h}), c0 = c({b, h}), wx = c({d, 4 * h}), wh = c({h, 4 * h}), bias = c({4 * h});
      const Tensor fused = ad::lstm_step(x, h0, c0, wx, wh, bias).value();
      const Tensor composite = relimp::testing::composite_lstm_step(x, h0, c0, wx, wh, bias).value();
      for (std::size_t k = 0; k < fused.size(); ++k) CHECK(fused[k] == doctest::Approx(composite[k]).epsilon(1e-14));
    }
  }

  TEST_CASE("unreached parameter gets a zero gradient") {
    ad::Tape t;
    ad::Var used = t.param(Tensor({2}, {1.0, 2.0}));
    ad::Var unused = t.param(Tensor({3}, {1.0, 2.0, 3.0}));
    t.backward(ad::sum(ad::mul(used, used)));
    CHECK(t.grad(unused) == Tensor({3}, 0.0));
    CHECK(t.grad(used) == Tensor({2}, {2.0, 4.0}));
  }

  TEST_CASE("non-scalar loss is rejected") {
    ad::Tape t;
    ad::Var x = t.param(Tensor({2}, {1.0, 2.0}));
    CHECK_THROWS_WITH_AS(t.backward(ad::tanh(x)), doctest::Contains("must be scalar"), std::invalid_argument);
  }

  TEST_CASE("shape mismatch names the op and both shapes") {
    ad::Tape t;
    ad::Var a = t.constant(Tensor({2, 3}));
    ad::Var b = t.constant(Tensor({2, 3}));
    try {
      ad::matmul(a, b);
      FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("matmul") != std::string::npos);
      CHECK(msg.find("[2, 3]") != std::string::npos);
    }
  }

  TEST_CASE("debug evaluation flags non-finite values") {
    ad::Tape t;
    t.set_check_finite(true);
    CHECK_THROWS_AS(ad::exp(t.constant(Tensor::scalar(1e6))), std::domain_error);
  }

  TEST_CASE("softmax rows sum to one and sigmoid stays open") {
    std::mt19937_64 rng(19);
    for (int i = 0; i < 200; ++i) {
      ad::Tape t;
      const Tensor x = random_tensor(rng, {3, 7}, -30, 30);
      const Tensor sm = ad::softmax(t.constant(x)).value();
      for (std::size_t r = 0; r < 3; ++r) {
        double s = 0;
        for (double v : sm.row(r)) s += v;
        CHECK(std::abs(s - 1.0) < 1e-12);
      }
      for (double v : ad::sigmoid(t.constant(random_tensor(rng, {5}, -30, 30))).value().values()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }

  TEST_CASE("tape replays bit-identically") {
    auto run = [] {
      std::mt19937_64 rng(23);
      ad::Tape t;
      ad::Var a = t.param(random_tensor(rng, {4, 5}));
      ad::Var b = t.param(random_tensor(rng, {5, 3}));
      ad::Var loss = ad::mean(ad::log_softmax(ad::tanh(ad::matmul(a, b))));
      t.backward(loss);
      return std::make_pair(loss.value(), t.grad(a));
    };
    CHECK(run() == run());
  }
}

TEST_SUITE("tensor-autodiff") {
  TEST_CASE("first adam step moves by the learning rate") {
    ParamStore store;
    store.add("p", Tensor::scalar(0.0));
    Adam adam({.lr = 1e-4});
    adam.step(store, {Tensor::scalar(1.0)});
    // m_hat = v_hat = g at t = 1.
    CHECK(store.value(0).item() == doctest::Approx(-1e-4 * (1.0 / (1.0 + 1e-8))).epsilon(1e-15));
    CHECK(adam.step_count() == 1);
  }

  TEST_CASE("zero gradient leaves parameters unchanged") {
    ParamStore store;
    store.add("p", Tensor({3}, {1.0, -2.0, 0.5}));
    const Tensor before = store.value(0);
    Adam adam;
    for (int i = 0; i < 5; ++i) adam.step(store, {Tensor({3}, 0.0)});
    CHECK(store.value(0) == before);
  }

  TEST_CASE("adam is deterministic from fresh state") {
    auto run = [] {
      ParamStore store;
      store.add("p", Tensor({2}, {0.3, -0.7}));
      Adam adam({.lr = 1e-2});
      adam.step(store, {Tensor({2}, {0.5, -1.5})});
      adam.step(store, {Tensor({2}, {0.5, -1.5})});
      return store.value(0);
    };
    CHECK(run() == run());
  }

  TEST_CASE("adam rejects mismatched gradients") {
    ParamStore store;
    store.add("p", Tensor({2}));
    Adam adam;
    CHECK_THROWS_AS(adam.step(store, {Tensor({3})}), std::invalid_argument);
    CHECK_THROWS_AS(adam.step(store, {}), std::invalid_argument);
  }

  TEST_CASE("checkpoint round trip is bit exact") {
    std::mt19937_64 rng(29);
    ParamStore store;
    store.add_weight("layer.w", 5, 7, rng);
    store.add("odd", Tensor({3}, {1.0 / 3.0, -0.0, 5e-324}));
    store.add_bias("layer.b", 7, 0.1);
    const auto path = std::filesystem::temp_directory_path() / "relimp_ckpt_test.bin";
    save_checkpoint(store, path);
    const ParamStore loaded = load_checkpoint(path);
    CHECK(loaded == store);
    CHECK(std::signbit(loaded.value(1)[1]));

    ParamStore other;
    other.add_weight("layer.w", 5, 7, rng);
    other.add("odd", Tensor({3}));
    other.add_bias("layer.b", 7);
    load_checkpoint_into(other, path);
    CHECK(other == store);

    ParamStore wrong;
    wrong.add("layer.w", Tensor({7, 5}));
    CHECK_THROWS(load_checkpoint_into(wrong, path));
    std::filesystem::remove(path);
  }

  TEST_CASE("lstm cell with zero weights stays at zero") {
    std::mt19937_64 rng(31);
    ParamStore store;
    const auto w = nn::LstmWeights::create(store, "l", 3, 4, rng);
    store.fill(0.0);
    ad::Tape t;
    BoundParams p(t, store);
    const auto s = nn::lstm_cell(p, w, t.constant(random_tensor(rng, {2, 3})),
                                 {t.constant(Tensor({2, 4})), t.constant(Tensor({2, 4}))});
    CHECK(s.h.value() == Tensor({2, 4}));
    CHECK(s.c.value() == Tensor({2, 4}));
  }

  TEST_CASE("lstm cell gradients match central differences") {
    std::mt19937_64 rng(37);
    for (int i = 0; i < 10; ++i) CHECK(relimp::testing::lstm_cell_check(rng).max_rel_error < 1e-5);
  }

  TEST_CASE("lstm cell rejects mismatched dims") {
    std::mt19937_64 rng(41);
    ParamStore store;
    const auto w = nn::LstmWeights::create(store, "l", 3, 4, rng);
    ad::Tape t;
    BoundParams p(t, store);
    CHECK_THROWS(nn::lstm_cell(p, w, t.constant(Tensor({2, 5})),
                               {t.constant(Tensor({2, 4})), t.constant(Tensor({2, 4}))}));
  }
}
