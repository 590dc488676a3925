// tcssd/gru.hpp

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

#ifndef TCSSD_GRU_HPP_
#define TCSSD_GRU_HPP_

#include <string>
#include <vector>

#include "tcssd/nn.hpp"

namespace tcssd::nn {

/// One gated recurrent layer. Gate rows are stacked [reset; update; new]:
///
///   r_t = sigmoid(W_r x_t + b_ir + U_r h_{t-1} + b_hr)
///   z_t = sigmoid(W_z x_t + b_iz + U_z h_{t-1} + b_hz)
///   n_t = tanh(W_n x_t + b_in + U_n (r_t * h_{t-1}) + b_hn)
///   h_t = (1 - z_t) * n_t + z_t * h_{t-1},   h_0 = 0
template <typename S>
class GruLayer {
 public:
  struct Cache {
    Mat<S> x;       // T x I
    Mat<S> h;       // (T + 1) x H, row 0 is h_0
    Mat<S> r, z, n; // T x H
  };

  GruLayer() = default;
  GruLayer(Eigen::Index input, Eigen::Index hidden) {
    w_ih.Reset(3 * hidden, input);
    w_hh.Reset(3 * hidden, hidden);
    b_ih.Reset(3 * hidden, 1);
    b_hh.Reset(3 * hidden, 1);
  }

  void Init(std::mt19937_64& rng) {
    GlorotInit(w_ih, input_dim(), hidden_dim(), rng);
    GlorotInit(w_hh, hidden_dim(), hidden_dim(), rng);
    b_ih.value.setZero();
    b_hh.value.setZero();
  }

  Eigen::Index input_dim() const { return w_ih.value.cols(); }
  Eigen::Index hidden_dim() const { return w_hh.value.cols(); }

  /// Returns the T x H output sequence.
  Mat<S> Forward(const Mat<S>& x, Cache* cache) const {
    if (x.cols() != input_dim())
      throw Error("GRU: input width " + std::to_string(x.cols()) + ", expected " +
                  std::to_string(input_dim()));
    const Eigen::Index t_len = x.rows(), hd = hidden_dim();
    const Mat<S> gi = (x * w_ih.value.transpose()).rowwise() + b_ih.value.col(0).transpose();
    const auto u_rz = w_hh.value.topRows(2 * hd);
    const auto u_n = w_hh.value.bottomRows(hd);
    const RowVec<S> b_rz = b_hh.value.col(0).head(2 * hd).transpose();
    const RowVec<S> b_n = b_hh.value.col(0).tail(hd).transpose();

    Cache c;
    c.h = Mat<S>::Zero(t_len + 1, hd);
    c.r.resize(t_len, hd);
    c.z.resize(t_len, hd);
    c.n.resize(t_len, hd);
    RowVec<S> h_prev = RowVec<S>::Zero(hd);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const RowVec<S> gh = h_prev * u_rz.transpose() + b_rz;
      const RowVec<S> r = Sigmoid<S>(gi.row(t).head(hd) + gh.head(hd));
      const RowVec<S> z = Sigmoid<S>(gi.row(t).segment(hd, hd) + gh.tail(hd));
      const RowVec<S> rh = r.cwiseProduct(h_prev);
      const RowVec<S> n = (gi.row(t).tail(hd) + rh * u_n.transpose() + b_n).array().tanh().matrix();
      h_prev = (S(1) - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h_prev);
      c.r.row(t) = r;
      c.z.row(t) = z;
      c.n.row(t) = n;
      c.h.row(t + 1) = h_prev;
    }
    Mat<S> out = c.h.bottomRows(t_len);
    if (cache) {
      c.x = x;
      *cache = std::move(c);
    }
    return out;
  }

  /// dout is the gradient with respect to every output h_1..h_T.
  Mat<S> Backward(const Cache& c, const Mat<S>& dout) {
    const Eigen::Index t_len = c.x.rows(), hd = hidden_dim();
    const auto u_r = w_hh.value.topRows(hd);
    const auto u_z = w_hh.value.middleRows(hd, hd);
    const auto u_n = w_hh.value.bottomRows(hd);

    Mat<S> dgi(t_len, 3 * hd);
    RowVec<S> dh_next = RowVec<S>::Zero(hd);
    for (Eigen::Index t = t_len; t-- > 0;) {
      const RowVec<S> h_prev = c.h.row(t);
      const RowVec<S> r = c.r.row(t), z = c.z.row(t), n = c.n.row(t);
      const RowVec<S> dh = dout.row(t) + dh_next;

      const RowVec<S> dn_pre = dh.cwiseProduct((S(1) - z.array()).matrix())
                                   .cwiseProduct((S(1) - n.array().square()).matrix());
      const RowVec<S> dz_pre = dh.cwiseProduct(h_prev - n)
                                   .cwiseProduct(z.cwiseProduct((S(1) - z.array()).matrix()));
      const RowVec<S> rh = r.cwiseProduct(h_prev);
      const RowVec<S> drh = dn_pre * u_n;
      const RowVec<S> dr_pre = drh.cwiseProduct(h_prev)
                                   .cwiseProduct(r.cwiseProduct((S(1) - r.array()).matrix()));

      w_hh.grad.topRows(hd).noalias() += dr_pre.transpose() * h_prev;
      w_hh.grad.middleRows(hd, hd).noalias() += dz_pre.transpose() * h_prev;
      w_hh.grad.bottomRows(hd).noalias() += dn_pre.transpose() * rh;
      b_hh.grad.col(0).head(hd) += dr_pre.transpose();
      b_hh.grad.col(0).segment(hd, hd) += dz_pre.transpose();
      b_hh.grad.col(0).tail(hd) += dn_pre.transpose();

      dh_next = dh.cwiseProduct(z) + drh.cwiseProduct(r) + dr_pre * u_r + dz_pre * u_z;
      dgi.row(t) << dr_pre, dz_pre, dn_pre;
    }
    w_ih.grad.noalias() += dgi.transpose() * c.x;
    b_ih.grad.col(0) += dgi.colwise().sum().transpose();
    return dgi * w_ih.value;
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    f(prefix + "w_ih", w_ih);
    f(prefix + "w_hh", w_hh);
    f(prefix + "b_ih", b_ih);
    f(prefix + "b_hh", b_hh);
  }

  Param<S> w_ih, w_hh, b_ih, b_hh;
};

/// Stacked GRU; layer k+1 consumes the full output sequence of layer k.
template <typename S>
class Gru {
 public:
  struct Cache {
    std::vector<typename GruLayer<S>::Cache> layers;
  };

  Gru() = default;
  Gru(Eigen::Index input, Eigen::Index hidden, int n_layers) {
    for (int i = 0; i < n_layers; ++i) layers.emplace_back(i == 0 ? input : hidden, hidden);
  }

  void Init(std::mt19937_64& rng) {
    for (auto& l : layers) l.Init(rng);
  }

  Eigen::Index hidden_dim() const { return layers.back().hidden_dim(); }

  /// Final hidden state of the last layer.
  RowVec<S> Forward(const Mat<S>& x, Cache* cache) const {
    if (x.rows() < 1) throw Error("GRU: empty input sequence");
    if (cache) cache->layers.resize(layers.size());
    Mat<S> seq = x;
    for (std::size_t i = 0; i < layers.size(); ++i)
      seq = layers[i].Forward(seq, cache ? &cache->layers[i] : nullptr);
    return seq.bottomRows(1);
  }

  Mat<S> Backward(const Cache& c, const RowVec<S>& dlast) {
    const Eigen::Index t_len = c.layers.front().x.rows();
    Mat<S> d = Mat<S>::Zero(t_len, hidden_dim());
    d.bottomRows(1) = dlast;
    for (std::size_t i = layers.size(); i-- > 0;) d = layers[i].Backward(c.layers[i], d);
    return d;
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    for (std::size_t i = 0; i < layers.size(); ++i)
      layers[i].ForEachParam(prefix + "l" + std::to_string(i) + ".", f);
  }

  std::vector<GruLayer<S>> layers;
};

}  // namespace tcssd::nn

#endif  // TCSSD_GRU_HPP_
