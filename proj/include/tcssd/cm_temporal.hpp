// tcssd/cm_temporal.hpp

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

#ifndef TCSSD_CM_TEMPORAL_HPP_
#define TCSSD_CM_TEMPORAL_HPP_

#include <random>
#include <string>

#include "tcssd/aam.hpp"
#include "tcssd/gru.hpp"

namespace tcssd {

/// First-order frame differences: row k is s_{k+1} - s_k. Constant
/// per-channel offsets (speaker identity, channel) cancel exactly.
template <typename Derived>
Mat<typename Derived::Scalar> DifferenceSequence(const Eigen::MatrixBase<Derived>& s) {
  if (s.rows() < 2) throw Error("difference_sequence: need at least 2 frames");
  const Eigen::Index n = s.rows() - 1;
  return s.bottomRows(n) - s.topRows(n);
}

struct Cm1Config {
  int input_dim = 1536;
  int hidden = 1536;
  int n_layers = 2;
  int fc1_dim = 512;
  int embed_dim = 192;

  static Cm1Config Full() { return {}; }
  static Cm1Config Toy(int input_dim = 24) { return {input_dim, 32, 2, 64, 32}; }
};

/// CM1: differenced speaker features -> stacked GRU -> last hidden state ->
/// fc1 -> ReLU -> fc2 -> embedding, scored against two unit-norm class rows.
template <typename S>
class Cm1Model {
  Cm1Config cfg_;

 public:
  struct Cache {
    typename nn::Gru<S>::Cache gru;
    Mat<S> last, act1;
  };

  Cm1Model() = default;
  explicit Cm1Model(const Cm1Config& cfg)
      : cfg_(cfg),
        gru(cfg.input_dim, cfg.hidden, cfg.n_layers),
        fc1(cfg.hidden, cfg.fc1_dim),
        fc2(cfg.fc1_dim, cfg.embed_dim) {
    classes.Reset(2, cfg.embed_dim);
  }

  const Cm1Config& config() const { return cfg_; }

  void Init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    gru.Init(rng);
    fc1.Init(rng);
    fc2.Init(rng);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Eigen::Index i = 0; i < classes.value.size(); ++i)
      classes.value.data()[i] = static_cast<S>(nd(rng));
  }

  /// Speaker features (T x D, T >= 2) -> embedding.
  RowVec<S> Embed(const Mat<S>& features, Cache* cache = nullptr) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.last = gru.Forward(DifferenceSequence(features), &c.gru);
    c.act1 = nn::Relu<S>(fc1.Forward(c.last));
    return fc2.Forward(c.act1);
  }

  void Backward(const Cache& c, const RowVec<S>& dembed) {
    const Mat<S> dact1 = nn::ReluBackward<S>(c.act1, fc2.Backward(c.act1, dembed));
    gru.Backward(c.gru, fc1.Backward(c.last, dact1));
  }

  S Score(const Mat<S>& features) const { return CosineScore<S>(Embed(features), classes.value); }

  template <typename F>
  void ForEachParam(F&& f) {
    gru.ForEachParam("cm1.gru.", f);
    fc1.ForEachParam("cm1.fc1.", f);
    fc2.ForEachParam("cm1.fc2.", f);
    f(std::string("cm1.classes"), classes);
  }

  nn::Gru<S> gru;
  nn::Linear<S> fc1, fc2;
  nn::Param<S> classes;  // row 0 bonafide, row 1 spoof

};

}  // namespace tcssd

#endif  // TCSSD_CM_TEMPORAL_HPP_
