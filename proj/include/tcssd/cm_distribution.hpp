// tcssd/cm_distribution.hpp

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

#ifndef TCSSD_CM_DISTRIBUTION_HPP_
#define TCSSD_CM_DISTRIBUTION_HPP_

#include <random>
#include <string>

#include "tcssd/aam.hpp"
#include "tcssd/encoder.hpp"

namespace tcssd {

struct Cm2Config {
  int input_dim = 3 * 1024;  // width of the frozen frontend output
  int mfa_dim = 1536;
  int attn_bottleneck = 128;
  int embed_dim = 192;

  static Cm2Config Full() { return {}; }
  static Cm2Config FromEncoder(const EncoderConfig& e) {
    return {e.concat_dim(), e.mfa_dim, e.attn_bottleneck, e.embed_dim};
  }
  static Cm2Config Toy(int input_dim = 24) { return {input_dim, 24, 16, 32}; }
};

/// CM2: the encoder tail retrained for spoof detection. Input is the frozen
/// frontend output; the MFA conv, pooling and projection are trainable.
template <typename S>
class Cm2Model {
  Cm2Config cfg_;

 public:
  struct Cache {
    Mat<S> input, features;
    typename nn::AttentivePooling<S>::Cache pool;
    Mat<S> pooled;
  };

  Cm2Model() = default;
  explicit Cm2Model(const Cm2Config& cfg)
      : cfg_(cfg),
        mfa(cfg.input_dim, cfg.mfa_dim, 1),
        pool(cfg.mfa_dim, cfg.attn_bottleneck),
        proj(2 * cfg.mfa_dim, cfg.embed_dim) {
    classes.Reset(2, cfg.embed_dim);
  }

  const Cm2Config& config() const { return cfg_; }

  void Init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    mfa.Init(rng);
    pool.Init(rng);
    proj.Init(rng);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Eigen::Index i = 0; i < classes.value.size(); ++i)
      classes.value.data()[i] = static_cast<S>(nd(rng));
  }

  /// Starts the trainable tail from the encoder's own MFA/pool/proj weights.
  void InitFromEncoder(const Encoder<S>& enc) {
    if (enc.mfa.weight.value.rows() != mfa.weight.value.rows() ||
        enc.mfa.weight.value.cols() != mfa.weight.value.cols() ||
        enc.proj.weight.value.rows() != proj.weight.value.rows())
      throw Error("cm2: encoder tail shape does not match cm2 config");
    mfa.weight.value = enc.mfa.weight.value;
    mfa.bias.value = enc.mfa.bias.value;
    pool.att1.weight.value = enc.pool.att1.weight.value;
    pool.att1.bias.value = enc.pool.att1.bias.value;
    pool.att2.weight.value = enc.pool.att2.weight.value;
    pool.att2.bias.value = enc.pool.att2.bias.value;
    proj.weight.value = enc.proj.weight.value;
    proj.bias.value = enc.proj.bias.value;
  }

  /// Frozen-frontend output (T x input_dim) -> embedding.
  RowVec<S> Embed(const Mat<S>& input, Cache* cache = nullptr) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.input = input;
    c.features = nn::Relu<S>(mfa.Forward(input));
    c.pooled = pool.Forward(c.features, &c.pool);
    return proj.Forward(c.pooled);
  }

  void Backward(const Cache& c, const RowVec<S>& dembed) {
    const Mat<S> dpooled = proj.Backward(c.pooled, dembed);
    const Mat<S> dfeat = nn::ReluBackward<S>(c.features, pool.Backward(c.pool, dpooled));
    mfa.Backward(c.input, dfeat);
  }

  S Score(const Mat<S>& input) const { return CosineScore<S>(Embed(input), classes.value); }

  template <typename F>
  void ForEachParam(F&& f) {
    mfa.ForEachParam("cm2.mfa.", f);
    pool.ForEachParam("cm2.pool.", f);
    proj.ForEachParam("cm2.proj.", f);
    f(std::string("cm2.classes"), classes);
  }

  nn::Conv1d<S> mfa;
  nn::AttentivePooling<S> pool;
  nn::Linear<S> proj;
  nn::Param<S> classes;

};

/// Fbank -> frozen frontend -> CM2 embedding.
template <typename S>
RowVec<S> Cm2Embed(const Mat<S>& fbank, Encoder<S>& encoder, const Cm2Model<S>& cm2) {
  return cm2.Embed(encoder.Frontend(fbank));
}

}  // namespace tcssd

#endif  // TCSSD_CM_DISTRIBUTION_HPP_
