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

#include "relimp/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace relimp {

void GammaSchedule::validate() const {
  if (!(init >= 0) || !(max >= init)) throw std::invalid_argument("gamma schedule: need 0 <= init <= max");
  if (!(ramp_epochs >= 0)) throw std::invalid_argument("gamma schedule: ramp must be non-negative");
  if (shape == Shape::kExponential && init == 0 && max > 0) {
    throw std::invalid_argument("gamma schedule: exponential ramp needs init > 0");
  }
}

double GammaSchedule::at(long iteration, long iterations_per_epoch) const {
  if (iteration < 0) throw std::invalid_argument("gamma schedule: negative iteration");
  if (max == 0) return 0.0;
  const double ramp = ramp_epochs * static_cast<double>(iterations_per_epoch);
  const double t = static_cast<double>(iteration);
  if (ramp <= 0 || t >= ramp) return max;
  if (shape == Shape::kLinear) return std::min(max, init + (max - init) * t / ramp);
  return std::min(max, init * std::pow(max / init, t / ramp));
}

void PseudoLabelConfig::validate() const {
  if (!(alpha1 >= 0.5 && alpha1 < 1.0)) throw std::invalid_argument("pseudo labels: alpha1 must lie in [0.5, 1)");
  if (!(alpha2 > 0.0 && alpha2 <= 1.0)) throw std::invalid_argument("pseudo labels: alpha2 must lie in (0, 1]");
}

std::vector<int> generate_pseudo_labels(std::span<const double> scores, double alpha1, double alpha2) {
  if (scores.empty()) throw std::invalid_argument("pseudo labels: empty score list");
  PseudoLabelConfig{alpha1, alpha2, true}.validate();
  std::vector<int> labels(scores.size(), 0);
  std::vector<std::size_t> unresolved;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double s = scores[j];
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("pseudo labels: score outside [0, 1]");
    if (s > alpha1) labels[j] = 1;
    else if (!(s < 1.0 - alpha1)) unresolved.push_back(j);
  }
  if (unresolved.empty()) return labels;
  double top = 0;
  for (std::size_t j : unresolved) top = std::max(top, scores[j]);
  if (top == 0) return labels;
  for (std::size_t j : unresolved) labels[j] = scores[j] / top > alpha2 ? 1 : 0;
  return labels;
}

std::vector<int> generate_pseudo_labels(std::span<const double> scores, const PseudoLabelConfig& config) {
  if (config.ranking) return generate_pseudo_labels(scores, config.alpha1, config.alpha2);
  if (scores.empty()) throw std::invalid_argument("pseudo labels: empty score list");
  std::vector<int> labels;
  for (double s : scores) labels.push_back(predict_label(s));
  return labels;
}

std::vector<double> object_weights(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("object weights: empty score list");
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> w;
  double total = 0;
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("object weights: non-finite score");
    w.push_back(std::exp(s - m));
    total += w.back();
  }
  for (double& v : w) v /= total;
  return w;
}

double entropy(std::span<const double> p) {
  double h = 0;
  for (double v : p)
    if (v > 0) h -= v * std::log(v);
  return h;
}

double case_weight(std::span<const double> w) {
  if (w.empty()) throw std::invalid_argument("case weight: empty weight vector");
  if (w.size() == 1) return 1.0;
  const double eps = 1.0 - entropy(w) / std::log(static_cast<double>(w.size()));
  return std::clamp(eps, 0.0, 1.0);
}

PseudoLabeledScene pseudo_label_scene(std::span<const double> scores, const PseudoLabelConfig& config,
                                      bool use_loss_weighting) {
  PseudoLabeledScene out;
  out.labels = generate_pseudo_labels(scores, config);
  if (use_loss_weighting) {
    out.weights = object_weights(scores);
    out.case_weight = case_weight(out.weights);
  } else {
    out.weights.assign(scores.size(), 1.0 / static_cast<double>(scores.size()));
    out.case_weight = 1.0;
  }
  return out;
}

ad::Var auxiliary_loss(const BehaviorPrediction& behavior, std::span<const Scene* const> scenes, double beta,
                       double trajectory_unit) {
  if (!(trajectory_unit > 0)) throw std::invalid_argument("auxiliary loss: trajectory unit must be positive");
  ad::Tape& tape = *behavior.action_logits.tape;
  const std::size_t nb = scenes.size();
  const std::size_t width = behavior.trajectory.value().cols();
  Tensor action(Shape{nb, kNumActions}, 0.0), target(Shape{nb, width}, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const Scene& s = *scenes[b];
    if (!s.labels) throw std::invalid_argument("auxiliary loss: scene '" + s.scene_id + "' has no ego labels");
    action.at(b, static_cast<std::size_t>(s.labels->ego_action)) = -1.0 / static_cast<double>(nb);
    if (2 * s.labels->future_traj.size() != width) {
      throw std::invalid_argument("auxiliary loss: scene '" + s.scene_id + "' has " +
                                  std::to_string(s.labels->future_traj.size()) + " future waypoints, model predicts " +
                                  std::to_string(width / 2));
    }
    for (std::size_t t = 0; t < s.labels->future_traj.size(); ++t) {
      target.at(b, 2 * t) = s.labels->future_traj[t][0];
      target.at(b, 2 * t + 1) = s.labels->future_traj[t][1];
    }
  }
  ad::Var ce = ad::sum(ad::mul(ad::log_softmax(behavior.action_logits), tape.constant(std::move(action))));
  ad::Var diff = ad::sub(behavior.trajectory, tape.constant(std::move(target)));
  ad::Var mse = ad::scale(ad::sum(ad::mul(diff, diff)), beta / (trajectory_unit * trajectory_unit * static_cast<double>(nb)));
  return ad::add(ce, mse);
}

namespace {

LossTerms finish(ad::Var importance, const ForwardResult& forward, std::span<const Scene* const> scenes,
                 const LossWeights& weights) {
  LossTerms out;
  out.importance = importance.value().item();
  out.total = importance;
  if (weights.lambda != 0) {
    if (!forward.behavior.action_logits.valid()) {
      throw std::invalid_argument("loss: auxiliary weight is nonzero but the behaviour heads did not run");
    }
    ad::Var aux = auxiliary_loss(forward.behavior, scenes, weights.beta, weights.trajectory_unit);
    out.auxiliary = aux.value().item();
    out.total = ad::add(importance, ad::scale(aux, weights.lambda));
  }
  return out;
}

void check_batch(const ForwardResult& forward, std::span<const Scene* const> scenes) {
  if (forward.inputs.scene_count() != scenes.size()) {
    throw std::invalid_argument("loss: forward pass covers " + std::to_string(forward.inputs.scene_count()) +
                                " scenes, batch has " + std::to_string(scenes.size()));
  }
}

}  // namespace

LossTerms supervised_loss(const ForwardResult& forward, std::span<const Scene* const> scenes,
                          const LossWeights& weights) {
  check_batch(forward, scenes);
  ad::Tape& tape = *forward.scores.tape;
  const std::size_t m = forward.inputs.object_count();
  const double nb = static_cast<double>(scenes.size());
  Tensor pos(Shape{m, 1}, 0.0), neg(Shape{m, 1}, 0.0);
  for (std::size_t b = 0; b < scenes.size(); ++b) {
    const Scene& s = *scenes[b];
    if (!s.has_importance()) throw std::invalid_argument("supervised loss: scene '" + s.scene_id + "' is unlabeled");
    const auto& rows = forward.inputs.objects_of_scene[b];
    const auto& y = *s.labels->importance;
    const double c = -1.0 / (nb * static_cast<double>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) (y[j] ? pos : neg)[rows[j]] = c;
  }
  ad::Var sc = ad::clamp(forward.scores, kScoreClamp, 1.0 - kScoreClamp);
  ad::Var log_s = ad::log(sc);
  ad::Var log_1ms = ad::log(ad::add_scalar(ad::scale(sc, -1.0), 1.0));
  ad::Var bce = ad::add(ad::sum(ad::mul(log_s, tape.constant(std::move(pos)))),
                        ad::sum(ad::mul(log_1ms, tape.constant(std::move(neg)))));
  return finish(bce, forward, scenes, weights);
}

LossTerms unlabeled_loss(const ForwardResult& forward, std::span<const Scene* const> scenes,
                         std::span<const PseudoLabeledScene> pseudo, const LossWeights& weights) {
  check_batch(forward, scenes);
  if (pseudo.size() != scenes.size()) throw std::invalid_argument("unlabeled loss: missing pseudo labels");
  ad::Tape& tape = *forward.scores.tape;
  const std::size_t m = forward.inputs.object_count();
  const double nb = static_cast<double>(scenes.size());
  Tensor target(Shape{m, 1}, 0.0), coef(Shape{m, 1}, 0.0);
  for (std::size_t b = 0; b < scenes.size(); ++b) {
    const auto& rows = forward.inputs.objects_of_scene[b];
    const auto& pl = pseudo[b];
    if (pl.labels.size() != rows.size() || pl.weights.size() != rows.size()) {
      throw std::invalid_argument("unlabeled loss: pseudo labels for scene '" + scenes[b]->scene_id +
                                  "' do not cover every object");
    }
    for (std::size_t j = 0; j < rows.size(); ++j) {
      target[rows[j]] = pl.labels[j];
      coef[rows[j]] = pl.case_weight * pl.weights[j] / nb;
    }
  }
  ad::Var diff = ad::sub(forward.scores, tape.constant(std::move(target)));
  ad::Var term = ad::sum(ad::mul(ad::mul(diff, diff), tape.constant(std::move(coef))));
  return finish(term, forward, scenes, weights);
}

std::string_view to_string(TrainMode mode) {
  return mode == TrainMode::kSupervised ? "supervised" : "ssl";
}

TrainMode parse_train_mode(std::string_view s) {
  if (s == "supervised") return TrainMode::kSupervised;
  if (s == "ssl" || s == "semi_supervised") return TrainMode::kSemiSupervised;
  throw std::invalid_argument("unknown training mode '" + std::string(s) + "' (expected supervised or ssl)");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be positive");
  if (epochs == 0) throw std::invalid_argument("train config: epochs must be positive");
  if (!(lr > 0)) throw std::invalid_argument("train config: lr must be positive");
  if (!(loss.lambda >= 0) || !(loss.beta >= 0)) throw std::invalid_argument("train config: lambda, beta must be >= 0");
  if (!(loss.trajectory_unit > 0)) throw std::invalid_argument("train config: trajectory unit must be positive");
  if (!(val_fraction >= 0 && val_fraction < 1)) throw std::invalid_argument("train config: val_fraction in [0, 1)");
  if (patience == 0) throw std::invalid_argument("train config: patience must be positive");
  pseudo.validate();
  gamma.validate();
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

void check_finite(double v, const char* what, std::size_t epoch, long iteration) {
  if (!std::isfinite(v)) {
    throw DivergenceError(std::string("training diverged: ") + what + " is " + std::to_string(v) + " at epoch " +
                          std::to_string(epoch) + ", iteration " + std::to_string(iteration));
  }
}

}  // namespace

std::vector<std::vector<int>> predict_labels(const ImportanceModel& model, std::span<const Scene> scenes) {
  std::vector<std::vector<int>> out;
  for (const auto& s : model.predict_scores(scenes)) {
    std::vector<int> l;
    for (double v : s) l.push_back(predict_label(v));
    out.push_back(std::move(l));
  }
  return out;
}

MetricsReport evaluate_model(const ImportanceModel& model, std::span<const Scene> scenes, const std::string& config,
                             std::uint64_t seed) {
  return compute_metrics(predict_labels(model, scenes), scenes, config, seed);
}

TrainResult train(ImportanceModel& model, const std::vector<Scene>& labeled, const std::vector<Scene>& unlabeled,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (labeled.empty()) throw std::invalid_argument("train: labeled partition is empty");
  const bool ssl = config.mode == TrainMode::kSemiSupervised;
  if (ssl && unlabeled.empty()) throw std::invalid_argument("train: semi-supervised mode needs unlabeled scenes");
  for (const auto& s : labeled)
    if (!s.has_importance()) throw std::invalid_argument("train: scene '" + s.scene_id + "' lacks importance labels");

  auto [train_set, val_set] = split_dataset(labeled, 1.0 - config.val_fraction, config.seed);
  if (val_set.empty()) val_set = train_set;

  LossWeights weights = config.loss;
  if (!config.use_auxiliary) weights.lambda = 0;
  const PoolMode pool = weights.lambda != 0 ? PoolMode::kGumbel : PoolMode::kNone;

  std::mt19937_64 shuffle_rng = stream(config.seed, 1);
  std::mt19937_64 gumbel_rng = stream(config.seed, 2);
  std::mt19937_64 unlabeled_shuffle_rng = stream(config.seed, 3);
  std::mt19937_64 unlabeled_gumbel_rng = stream(config.seed, 4);

  Adam adam(AdamOptions{config.lr, 0.9, 0.999, 1e-8});
  ParamStore& params = model.params();
  const std::size_t bs = config.batch_size;
  const long iters_per_epoch = static_cast<long>((train_set.size() + bs - 1) / bs);
  const std::size_t ubs = std::min(bs, unlabeled.size());

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> uorder(unlabeled.size());
  std::iota(uorder.begin(), uorder.end(), 0);
  std::size_t ucursor = unlabeled.size();
  auto next_unlabeled_batch = [&]() {
    if (ucursor + ubs > uorder.size()) {
      std::shuffle(uorder.begin(), uorder.end(), unlabeled_shuffle_rng);
      ucursor = 0;
    }
    std::vector<std::size_t> b(uorder.begin() + ucursor, uorder.begin() + ucursor + ubs);
    ucursor += ubs;
    return b;
  };

  TrainResult result;
  result.best_val_f1 = -1;
  std::vector<Tensor> best = [&] {
    std::vector<Tensor> v;
    for (ParamId i = 0; i < params.size(); ++i) v.push_back(params.value(i));
    return v;
  }();
  std::size_t since_best = 0;
  long iteration = 0;
  ad::Tape tape;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    // Unlabeled batches for this epoch, drawn only while gamma is active.
    std::vector<std::vector<std::size_t>> ubatches(static_cast<std::size_t>(iters_per_epoch));
    std::vector<PseudoLabeledScene> epoch_pseudo(unlabeled.size());
    if (ssl) {
      std::vector<std::size_t> used;
      for (long it = 0; it < iters_per_epoch; ++it) {
        if (config.gamma.at(iteration + it, iters_per_epoch) == 0) continue;
        ubatches[it] = next_unlabeled_batch();
        used.insert(used.end(), ubatches[it].begin(), ubatches[it].end());
      }
      if (config.refresh == PseudoRefresh::kEpoch && !used.empty()) {
        std::sort(used.begin(), used.end());
        used.erase(std::unique(used.begin(), used.end()), used.end());
        std::vector<Scene> pool;
        for (std::size_t i : used) pool.push_back(unlabeled[i]);
        const auto scores = model.predict_scores(pool);
        for (std::size_t k = 0; k < used.size(); ++k) {
          epoch_pseudo[used[k]] = pseudo_label_scene(scores[k], config.pseudo, config.use_loss_weighting);
        }
      }
    }

    double sum_l = 0, sum_u = 0, gamma = 0;
    std::size_t n_u = 0;
    for (long it = 0; it < iters_per_epoch; ++it, ++iteration) {
      const std::size_t begin = static_cast<std::size_t>(it) * bs;
      const std::size_t end = std::min(train_set.size(), begin + bs);
      std::vector<const Scene*> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(&train_set[order[k]]);

      tape.reset();
      BoundParams p(tape, params);
      ForwardResult fwd = model.forward(p, batch, pool, &gumbel_rng);
      LossTerms lt = supervised_loss(fwd, batch, weights);
      const double l_value = lt.total.value().item();
      check_finite(l_value, "labeled loss", epoch, iteration);
      sum_l += l_value;
      ad::Var total = lt.total;

      gamma = config.gamma.at(iteration, iters_per_epoch);
      if (ssl && gamma > 0) {
        std::vector<const Scene*> ubatch;
        for (std::size_t i : ubatches[it]) ubatch.push_back(&unlabeled[i]);
        ForwardResult ufwd = model.forward(p, ubatch, pool, &unlabeled_gumbel_rng);
        std::vector<PseudoLabeledScene> pseudo;
        for (std::size_t b = 0; b < ubatch.size(); ++b) {
          if (config.refresh == PseudoRefresh::kEpoch) {
            pseudo.push_back(epoch_pseudo[ubatches[it][b]]);
          } else {
            std::vector<double> s;
            for (std::size_t row : ufwd.inputs.objects_of_scene[b]) s.push_back(ufwd.scores.value()[row]);
            pseudo.push_back(pseudo_label_scene(s, config.pseudo, config.use_loss_weighting));
          }
        }
        LossTerms ut = unlabeled_loss(ufwd, ubatch, pseudo, weights);
        const double u_value = ut.total.value().item();
        check_finite(u_value, "unlabeled loss", epoch, iteration);
        sum_u += u_value;
        ++n_u;
        total = ad::add(total, ad::scale(ut.total, gamma));
      }
      tape.backward(total);
      adam.step(params, p.gradients());
    }

    const MetricsReport val = evaluate_model(model, val_set);
    EpochLog log;
    log.epoch = epoch;
    log.l_labeled = sum_l / static_cast<double>(iters_per_epoch);
    log.l_unlabeled = n_u ? sum_u / static_cast<double>(n_u) : 0.0;
    log.gamma = ssl ? gamma : 0.0;
    log.val_accuracy = val.overall().accuracy;
    log.val_f1 = val.overall().f1;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.val_f1 > result.best_val_f1) {
      result.best_val_f1 = log.val_f1;
      result.best_epoch = epoch;
      for (ParamId i = 0; i < params.size(); ++i) best[i] = params.value(i);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  for (ParamId i = 0; i < params.size(); ++i) params.value(i) = best[i];
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,L_labeled,L_unlabeled,gamma,val_accuracy,val_F1\n";
  char buf[256];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.10f,%.10f,%.6f,%.6f\n", e.epoch, e.l_labeled, e.l_unlabeled, e.gamma,
                  e.val_accuracy, e.val_f1);
    out += buf;
  }
  return out;
}

}  // namespace relimp
