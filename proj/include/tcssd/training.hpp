// tcssd/training.hpp

// Copyright 2026  tcssd authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef TCSSD_TRAINING_HPP_
#define TCSSD_TRAINING_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tcssd/aam.hpp"
#include "tcssd/frontend.hpp"
#include "tcssd/nn.hpp"

namespace tcssd {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  double base_lr = 3e-4;
  int warmup_steps = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  // Desk-scale override: stop after this many steps (0 = run all epochs).
  long max_steps = 0;
  // Draw bonafide and spoof 1:1 in every batch (2-class objectives only).
  bool balanced = true;
  bool augment = true;
  AugmentPolicy augment_policy;
  CropOptions crop;
  AamConfig aam;

  void Validate() const {
    if (epochs <= 0 || batch_size <= 0 || warmup_steps <= 0 || max_steps < 0)
      throw Error("train config: epochs, batch_size and warmup_steps must be positive");
    if (!(base_lr > 0) || !(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) ||
        !(adam_eps > 0) || weight_decay < 0)
      throw Error("train config: invalid optimizer settings");
    aam.Validate();
  }
};

/// Linear warm-up to base_lr, then inverse-square-root decay:
/// base_lr * min(step / warmup, sqrt(warmup / step)).
inline double LrSchedule(long step, const TrainConfig& cfg) {
  if (step < 1) throw Error("lr_schedule: step must be >= 1");
  const double s = static_cast<double>(step), w = cfg.warmup_steps;
  return cfg.base_lr * std::min(s / w, std::sqrt(w / s));
}

/// Adam over every trainable parameter a model visits. State is matched to
/// parameters by visiting order, which must be stable across steps.
template <typename S>
class Adam {
 public:
  explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}

  template <typename Visit>
  void Step(Visit&& visit, double lr) {
    ++t_;
    lr_ = lr;
    idx_ = 0;
    visit(*this);
  }

  void operator()(const std::string&, nn::Param<S>& p) {
    if (idx_ == m_.size()) {
      m_.push_back(Mat<S>::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Mat<S>::Zero(p.value.rows(), p.value.cols()));
    }
    Mat<S>& m = m_[idx_];
    Mat<S>& v = v_[idx_];
    ++idx_;
    if (!p.trainable) return;
    Mat<S> g = p.grad;
    if (cfg_.weight_decay > 0) g += static_cast<S>(cfg_.weight_decay) * p.value;
    const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.cwiseAbs2();
    const S c1 = S(1) - static_cast<S>(std::pow(cfg_.beta1, static_cast<double>(t_)));
    const S c2 = S(1) - static_cast<S>(std::pow(cfg_.beta2, static_cast<double>(t_)));
    p.value.array() -= static_cast<S>(lr_) * (m.array() / c1) /
                       ((v.array() / c2).sqrt() + static_cast<S>(cfg_.adam_eps));
  }

 private:
  TrainConfig cfg_;
  long t_ = 0;
  double lr_ = 0;
  std::size_t idx_ = 0;
  std::vector<Mat<S>> m_, v_;
};

/// Draws mini-batches of example indices. With balancing, each batch takes
/// half its items from each of the two classes; otherwise items come from a
/// reshuffled pass over the data. Pools wrap around, so batches larger than
/// the data repeat examples.
class BatchSampler {
 public:
  BatchSampler(const std::vector<int>& labels, int batch_size, bool balanced, std::uint64_t seed);
  std::vector<std::size_t> Next();

 private:
  struct Pool {
    std::vector<std::size_t> items;
    std::size_t pos = 0;
  };
  std::size_t Draw(Pool& pool);

  int batch_size_;
  bool balanced_;
  std::mt19937_64 rng_;
  std::vector<Pool> pools_;
};

/// Seed for item i of a step, derived from the run seed.
std::uint64_t ItemSeed(std::uint64_t seed, long step, std::size_t item);

struct TrainLogEntry {
  long step = 0;
  double lr = 0;
  double loss = 0;
};

struct TrainHooks {
  std::function<void(const TrainLogEntry&)> on_step;
  std::function<void(int epoch)> on_epoch;
};

/// Number of optimizer steps a run takes over n examples.
long PlannedSteps(const TrainConfig& cfg, std::size_t n_examples);

/// Generic AAM-softmax training loop.
///
/// Model provides Embed(x, Cache*), Backward(Cache, d_embed), a `classes`
/// parameter (K x E) and ForEachParam(f) over everything the optimizer may
/// update. prepare(i, seed) returns the network input for example i.
template <typename S, typename Model, typename Prepare>
std::vector<TrainLogEntry> TrainModel(Model& model, const std::vector<int>& labels,
                                      const TrainConfig& cfg, Prepare&& prepare,
                                      const TrainHooks& hooks = {}) {
  cfg.Validate();
  if (labels.empty()) throw Error("train: empty training set");
  const long steps_per_epoch =
      (static_cast<long>(labels.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long total = PlannedSteps(cfg, labels.size());

  BatchSampler sampler(labels, cfg.batch_size, cfg.balanced, cfg.seed);
  Adam<S> adam(cfg);
  std::vector<TrainLogEntry> log;
  std::vector<typename Model::Cache> caches;
  for (long step = 1; step <= total; ++step) {
    model.ForEachParam([](const std::string&, nn::Param<S>& p) { p.ZeroGrad(); });
    const std::vector<std::size_t> batch = sampler.Next();
    caches.resize(batch.size());
    Mat<S> embeddings(static_cast<Eigen::Index>(batch.size()), model.classes.value.cols());
    std::vector<int> batch_labels(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Mat<S> x = prepare(batch[i], ItemSeed(cfg.seed, step, i));
      embeddings.row(static_cast<Eigen::Index>(i)) = model.Embed(x, &caches[i]);
      batch_labels[i] = labels[batch[i]];
    }
    const AamResult<S> aam = AamSoftmaxLoss<S>(embeddings, batch_labels, model.classes.value, cfg.aam);
    if (!std::isfinite(static_cast<double>(aam.loss)))
      throw Error("train: non-finite loss at step " + std::to_string(step));
    model.classes.grad += aam.d_weights;
    for (std::size_t i = 0; i < batch.size(); ++i)
      model.Backward(caches[i], aam.d_embeddings.row(static_cast<Eigen::Index>(i)));

    const double lr = LrSchedule(step, cfg);
    adam.Step([&](Adam<S>& opt) { model.ForEachParam(opt); }, lr);
    log.push_back({step, lr, static_cast<double>(aam.loss)});
    if (hooks.on_step) hooks.on_step(log.back());
    if (hooks.on_epoch && (step % steps_per_epoch == 0 || step == total))
      hooks.on_epoch(static_cast<int>((step + steps_per_epoch - 1) / steps_per_epoch));
  }
  return log;
}

}  // namespace tcssd

#endif  // TCSSD_TRAINING_HPP_
