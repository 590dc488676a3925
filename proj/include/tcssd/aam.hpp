// tcssd/aam.hpp

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

#ifndef TCSSD_AAM_HPP_
#define TCSSD_AAM_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tcssd/common.hpp"

namespace tcssd {

struct AamConfig {
  double margin = 0.4;  // radians
  double scale = 30.0;

  void Validate() const {
    if (!(margin >= 0.0 && margin < std::numbers::pi / 2))
      throw Error("aam: margin must lie in [0, pi/2)");
    if (!(scale > 0.0)) throw Error("aam: scale must be positive");
  }
};

template <typename S>
struct AamResult {
  S loss = 0;
  Mat<S> d_embeddings;  // B x E
  Mat<S> d_weights;     // K x E
};

/// Additive angular margin softmax, mean over the batch.
///
/// With unit-normalised embeddings and class rows, cos_j = <e, w_j>. The
/// target logit is s*cos(theta_y + m) while theta_y < pi - m and falls back
/// to s*(cos_y - m*sin m) beyond that point; other logits are s*cos_j.
template <typename S>
AamResult<S> AamSoftmaxLoss(const Mat<S>& embeddings, const std::vector<int>& labels,
                            const Mat<S>& weights, const AamConfig& cfg) {
  cfg.Validate();
  const Eigen::Index batch = embeddings.rows(), n_cls = weights.rows();
  if (static_cast<Eigen::Index>(labels.size()) != batch)
    throw Error("aam: label count does not match batch");
  if (weights.cols() != embeddings.cols()) throw Error("aam: embedding/class width mismatch");

  const Vec<S> e_norm = embeddings.rowwise().norm();
  const Vec<S> w_norm = weights.rowwise().norm();
  if ((e_norm.array() == S(0)).any()) throw Error("aam: zero-norm embedding");
  if ((w_norm.array() == S(0)).any()) throw Error("aam: zero-norm class weight");
  const Mat<S> e_hat = e_norm.cwiseInverse().asDiagonal() * embeddings;
  const Mat<S> w_hat = w_norm.cwiseInverse().asDiagonal() * weights;
  const Mat<S> cosine = e_hat * w_hat.transpose();

  const S m = static_cast<S>(cfg.margin), s = static_cast<S>(cfg.scale);
  const S cos_m = std::cos(m), sin_m = std::sin(m);
  const S threshold = std::cos(static_cast<S>(std::numbers::pi) - m);

  Mat<S> logits = s * cosine;
  Vec<S> target_slope(batch);  // d(target logit)/d(cos_y), before the scale
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= n_cls) throw Error("aam: label out of range");
    const S c = std::clamp(cosine(b, y), S(-1), S(1));
    if (c > threshold) {
      const S sine = std::sqrt(std::max(S(0), S(1) - c * c));
      logits(b, y) = s * (c * cos_m - sine * sin_m);
      target_slope[b] = cos_m + c * sin_m / std::max(sine, S(1e-12));
    } else {
      logits(b, y) = s * (c - m * sin_m);
      target_slope[b] = S(1);
    }
  }

  AamResult<S> out;
  Mat<S> dlogits(batch, n_cls);
  S total = 0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const S mx = logits.row(b).maxCoeff();
    const RowVec<S> ex = (logits.row(b).array() - mx).exp().matrix();
    const S sum = ex.sum();
    const int y = labels[static_cast<std::size_t>(b)];
    total += std::log(sum) + mx - logits(b, y);
    dlogits.row(b) = ex / sum;
    dlogits(b, y) -= S(1);
  }
  out.loss = total / static_cast<S>(batch);
  dlogits /= static_cast<S>(batch);

  Mat<S> dcos = s * dlogits;
  for (Eigen::Index b = 0; b < batch; ++b) dcos(b, labels[static_cast<std::size_t>(b)]) *= target_slope[b];

  const Mat<S> de_hat = dcos * w_hat;
  const Mat<S> dw_hat = dcos.transpose() * e_hat;
  // Through the normalisation: d x = (I - x_hat x_hat^T) d x_hat / |x|.
  out.d_embeddings = e_norm.cwiseInverse().asDiagonal() *
                     (de_hat - (de_hat.cwiseProduct(e_hat).rowwise().sum()).asDiagonal() * e_hat);
  out.d_weights = w_norm.cwiseInverse().asDiagonal() *
                  (dw_hat - (dw_hat.cwiseProduct(w_hat).rowwise().sum()).asDiagonal() * w_hat);
  return out;
}

/// cos(e, w_bonafide) - cos(e, w_spoof); bounded in [-2, 2].
template <typename S>
S CosineScore(const RowVec<S>& embedding, const Mat<S>& class_weights) {
  const S en = embedding.norm();
  if (en == S(0)) throw Error("score: zero-norm embedding");
  const S cb = embedding.dot(class_weights.row(0)) / (en * class_weights.row(0).norm());
  const S cs = embedding.dot(class_weights.row(1)) / (en * class_weights.row(1).norm());
  return cb - cs;
}

}  // namespace tcssd

#endif  // TCSSD_AAM_HPP_
