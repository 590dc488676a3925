// tcssd/encoder.hpp

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

#ifndef TCSSD_ENCODER_HPP_
#define TCSSD_ENCODER_HPP_

#include <random>
#include <string>
#include <vector>

#include "tcssd/nn.hpp"

namespace tcssd {

struct EncoderConfig {
  int n_mels = 80;
  int channels = 1024;
  std::vector<int> dilations{2, 3, 4};
  int res2_scale = 8;
  int se_bottleneck = 128;
  int mfa_dim = 1536;
  int attn_bottleneck = 128;
  int embed_dim = 192;

  static EncoderConfig Full() { return {}; }
  static EncoderConfig Toy() {
    EncoderConfig c;
    c.channels = 16;
    c.res2_scale = 4;
    c.se_bottleneck = 8;
    c.mfa_dim = 24;
    c.attn_bottleneck = 16;
    c.embed_dim = 32;
    return c;
  }

  int n_blocks() const { return static_cast<int>(dilations.size()); }
  int concat_dim() const { return n_blocks() * channels; }

  void Validate() const {
    if (n_mels <= 0 || channels <= 0 || mfa_dim <= 0 || embed_dim <= 0 ||
        se_bottleneck <= 0 || attn_bottleneck <= 0)
      throw Error("encoder config: dimensions must be positive");
    if (dilations.empty()) throw Error("encoder config: need at least one block");
    if (res2_scale < 2 || channels % res2_scale != 0)
      throw Error("encoder config: channels must be divisible by res2_scale");
  }
};

/// ECAPA-style speaker encoder.
///
///   stem:   conv k5 -> ReLU -> norm                       (T x C)
///   blocks: SE-Res2 blocks at the configured dilations    (T x C each)
///   concat: channel-wise concatenation of block outputs   (T x n_blocks*C)
///   mfa:    1x1 conv -> ReLU                              (T x D)  <- speaker features
///   pool:   attentive statistics pooling                  (1 x 2D)
///   proj:   linear                                        (1 x embed_dim)
///
/// Everything up to the concatenation is the "frontend", which is frozen
/// whenever a countermeasure is trained on top of it.
template <typename S>
class Encoder {
 public:
  struct FrontendCache {
    typename nn::ConvReluNorm<S>::Cache stem;
    std::vector<typename nn::Res2Block<S>::Cache> blocks;
  };
  struct Cache {
    FrontendCache frontend;
    Mat<S> concat, features;
    typename nn::AttentivePooling<S>::Cache pool;
    Mat<S> pooled;
  };

  Encoder() = default;
  explicit Encoder(const EncoderConfig& cfg) : cfg_(cfg) {
    cfg.Validate();
    stem = nn::ConvReluNorm<S>(cfg.n_mels, cfg.channels, 5);
    for (int d : cfg.dilations)
      blocks.emplace_back(cfg.channels, cfg.res2_scale, d, cfg.se_bottleneck);
    mfa = nn::Conv1d<S>(cfg.concat_dim(), cfg.mfa_dim, 1);
    pool = nn::AttentivePooling<S>(cfg.mfa_dim, cfg.attn_bottleneck);
    proj = nn::Linear<S>(2 * cfg.mfa_dim, cfg.embed_dim);
  }

  const EncoderConfig& config() const { return cfg_; }

  void Init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    stem.Init(rng);
    for (auto& b : blocks) b.Init(rng);
    mfa.Init(rng);
    pool.Init(rng);
    proj.Init(rng);
  }

  /// fbank (T x n_mels) -> block concatenation (T x n_blocks*C).
  Mat<S> Frontend(const Mat<S>& x, FrontendCache* cache = nullptr) {
    if (x.cols() != cfg_.n_mels)
      throw Error("encoder: feature map has " + std::to_string(x.cols()) + " bins, expected " +
                  std::to_string(cfg_.n_mels));
    if (cache) cache->blocks.resize(blocks.size());
    Mat<S> h = stem.Forward(x, cache ? &cache->stem : nullptr);
    Mat<S> cat(x.rows(), cfg_.concat_dim());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      h = blocks[i].Forward(h, cache ? &cache->blocks[i] : nullptr);
      cat.middleCols(static_cast<Eigen::Index>(i) * cfg_.channels, cfg_.channels) = h;
    }
    return cat;
  }

  Mat<S> FrontendBackward(const FrontendCache& c, const Mat<S>& dcat) {
    Mat<S> dh = Mat<S>::Zero(dcat.rows(), cfg_.channels);
    for (std::size_t i = blocks.size(); i-- > 0;) {
      dh += dcat.middleCols(static_cast<Eigen::Index>(i) * cfg_.channels, cfg_.channels);
      dh = blocks[i].Backward(c.blocks[i], dh);
    }
    return stem.Backward(c.stem, dh);
  }

  /// Multi-layer feature aggregation: concat -> 1x1 conv -> ReLU.
  Mat<S> Mfa(const Mat<S>& concat) const { return nn::Relu<S>(mfa.Forward(concat)); }

  /// fbank -> per-frame speaker features (T x D).
  Mat<S> EncodeFeatures(const Mat<S>& x) { return Mfa(Frontend(x)); }

  /// Speaker features -> embedding.
  RowVec<S> PoolEmbedding(const Mat<S>& features) const {
    if (features.cols() != cfg_.mfa_dim)
      throw Error("pool_embedding: feature width " + std::to_string(features.cols()) +
                  ", expected " + std::to_string(cfg_.mfa_dim));
    return proj.Forward(pool.Forward(features, nullptr));
  }

  /// Full forward pass (fbank -> embedding), used when training the encoder.
  RowVec<S> Embed(const Mat<S>& x, Cache* cache) {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.concat = Frontend(x, &c.frontend);
    c.features = Mfa(c.concat);
    c.pooled = pool.Forward(c.features, &c.pool);
    return proj.Forward(c.pooled);
  }

  void Backward(const Cache& c, const RowVec<S>& dembed) {
    const Mat<S> dpooled = proj.Backward(c.pooled, dembed);
    const Mat<S> dfeat = nn::ReluBackward<S>(c.features, pool.Backward(c.pool, dpooled));
    FrontendBackward(c.frontend, mfa.Backward(c.concat, dfeat));
  }

  /// Fits the normalisation statistics: each norm layer sees the inputs it
  /// would see at inference time and stores their per-channel moments.
  void CalibrateNorms(const std::vector<Mat<S>>& inputs) {
    ForEachNorm([](nn::ChannelNorm<S>& n) { n.BeginCalibration(); });
    for (const auto& x : inputs) Frontend(x);
    ForEachNorm([](nn::ChannelNorm<S>& n) { n.FinishCalibration(); });
  }

  template <typename F>
  void ForEachFrontendParam(const std::string& prefix, F&& f) {
    stem.ForEachParam(prefix + "stem.", f);
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].ForEachParam(prefix + "block" + std::to_string(i) + ".", f);
  }

  template <typename F>
  void ForEachHeadParam(const std::string& prefix, F&& f) {
    mfa.ForEachParam(prefix + "mfa.", f);
    pool.ForEachParam(prefix + "pool.", f);
    proj.ForEachParam(prefix + "proj.", f);
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    ForEachFrontendParam(prefix, f);
    ForEachHeadParam(prefix, f);
  }

  template <typename F>
  void ForEachNorm(F&& f) {
    stem.ForEachNorm(f);
    for (auto& b : blocks) b.ForEachNorm(f);
  }

  nn::ConvReluNorm<S> stem;
  std::vector<nn::Res2Block<S>> blocks;
  nn::Conv1d<S> mfa;
  nn::AttentivePooling<S> pool;
  nn::Linear<S> proj;

 private:
  EncoderConfig cfg_;
};

}  // namespace tcssd

#endif  // TCSSD_ENCODER_HPP_
