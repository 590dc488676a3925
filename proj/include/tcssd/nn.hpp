// tcssd/nn.hpp

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

#ifndef TCSSD_NN_HPP_
#define TCSSD_NN_HPP_

// Dense layers with explicit forward/backward passes. Activations are laid
// out frame-major: a sequence is a T x C matrix, one row per frame.
// Backward passes accumulate into Param::grad and return the gradient with
// respect to the layer input.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "tcssd/common.hpp"

namespace tcssd::nn {

template <typename S>
struct Param {
  Mat<S> value;
  Mat<S> grad;
  // Normalisation statistics are stored like parameters but never trained.
  bool trainable = true;

  void Reset(Eigen::Index rows, Eigen::Index cols) {
    value = Mat<S>::Zero(rows, cols);
    grad = Mat<S>::Zero(rows, cols);
  }
  void ZeroGrad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

/// Glorot-uniform fill.
template <typename S>
void GlorotInit(Param<S>& p, Eigen::Index fan_in, Eigen::Index fan_out,
                std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < p.value.size(); ++i)
    p.value.data()[i] = static_cast<S>(dist(rng));
}

template <typename S>
Mat<S> Relu(const Mat<S>& x) {
  return x.cwiseMax(S(0));
}

/// dy masked by the post-activation output y.
template <typename S>
Mat<S> ReluBackward(const Mat<S>& y, const Mat<S>& dy) {
  return (y.array() > S(0)).select(dy.array(), S(0)).matrix();
}

template <typename S>
Mat<S> Sigmoid(const Mat<S>& x) {
  return (S(1) + (-x.array()).exp()).inverse().matrix();
}

// ---------------------------------------------------------------------------

template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(Eigen::Index in, Eigen::Index out) {
    weight.Reset(out, in);
    bias.Reset(out, 1);
  }

  void Init(std::mt19937_64& rng) {
    GlorotInit(weight, in_dim(), out_dim(), rng);
    bias.value.setZero();
  }

  Eigen::Index in_dim() const { return weight.value.cols(); }
  Eigen::Index out_dim() const { return weight.value.rows(); }

  Mat<S> Forward(const Mat<S>& x) const {
    return (x * weight.value.transpose()).rowwise() + bias.value.col(0).transpose();
  }

  Mat<S> Backward(const Mat<S>& x, const Mat<S>& dy) {
    weight.grad.noalias() += dy.transpose() * x;
    bias.grad.col(0) += dy.colwise().sum().transpose();
    return dy * weight.value;
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    f(prefix + "weight", weight);
    f(prefix + "bias", bias);
  }

  Param<S> weight;  // out x in
  Param<S> bias;    // out x 1
};

// ---------------------------------------------------------------------------

/// 1-D convolution over frames with same-padding (odd kernel). The weight
/// is out x (kernel * in); column block k holds the tap at frame offset
/// (k - kernel/2) * dilation.
template <typename S>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Eigen::Index in, Eigen::Index out, int kernel, int dilation = 1)
      : in_(in), kernel_(kernel), dilation_(dilation) {
    if (kernel % 2 != 1) throw Error("Conv1d: kernel must be odd");
    weight.Reset(out, in * kernel);
    bias.Reset(out, 1);
  }

  void Init(std::mt19937_64& rng) {
    GlorotInit(weight, in_ * kernel_, out_dim() * kernel_, rng);
    bias.value.setZero();
  }

  Eigen::Index in_dim() const { return in_; }
  Eigen::Index out_dim() const { return weight.value.rows(); }
  int kernel() const { return kernel_; }
  int dilation() const { return dilation_; }

  Mat<S> Forward(const Mat<S>& x) const {
    const Mat<S> cols = Im2Col(x);
    return (cols * weight.value.transpose()).rowwise() + bias.value.col(0).transpose();
  }

  Mat<S> Backward(const Mat<S>& x, const Mat<S>& dy) {
    const Mat<S> cols = Im2Col(x);
    weight.grad.noalias() += dy.transpose() * cols;
    bias.grad.col(0) += dy.colwise().sum().transpose();
    return Col2Im(dy * weight.value, x.rows());
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    f(prefix + "weight", weight);
    f(prefix + "bias", bias);
  }

  Param<S> weight;
  Param<S> bias;

 private:
  Eigen::Index Offset(int k) const { return static_cast<Eigen::Index>(k - kernel_ / 2) * dilation_; }

  Mat<S> Im2Col(const Mat<S>& x) const {
    if (x.cols() != in_) throw Error("Conv1d: input has " + std::to_string(x.cols()) +
                                     " channels, expected " + std::to_string(in_));
    if (kernel_ == 1) return x;
    const Eigen::Index t_len = x.rows();
    Mat<S> cols = Mat<S>::Zero(t_len, in_ * kernel_);
    for (int k = 0; k < kernel_; ++k) {
      const Eigen::Index off = Offset(k);
      const Eigen::Index lo = std::max<Eigen::Index>(0, -off);
      const Eigen::Index hi = std::min<Eigen::Index>(t_len, t_len - off);
      if (hi > lo) cols.block(lo, k * in_, hi - lo, in_) = x.middleRows(lo + off, hi - lo);
    }
    return cols;
  }

  Mat<S> Col2Im(const Mat<S>& dcols, Eigen::Index t_len) const {
    if (kernel_ == 1) return dcols;
    Mat<S> dx = Mat<S>::Zero(t_len, in_);
    for (int k = 0; k < kernel_; ++k) {
      const Eigen::Index off = Offset(k);
      const Eigen::Index lo = std::max<Eigen::Index>(0, -off);
      const Eigen::Index hi = std::min<Eigen::Index>(t_len, t_len - off);
      if (hi > lo) dx.middleRows(lo + off, hi - lo) += dcols.block(lo, k * in_, hi - lo, in_);
    }
    return dx;
  }

  Eigen::Index in_ = 0;
  int kernel_ = 1;
  int dilation_ = 1;
};

// ---------------------------------------------------------------------------

/// Per-channel affine normalisation with stored statistics (batch-norm in
/// inference form). Statistics are buffers: they change only through
/// Calibrate/FinishCalibration, never through gradients.
template <typename S>
class ChannelNorm {
 public:
  static constexpr double kEps = 1e-5;

  ChannelNorm() = default;
  explicit ChannelNorm(Eigen::Index channels) {
    gamma.Reset(channels, 1);
    beta.Reset(channels, 1);
    mean.Reset(channels, 1);
    var.Reset(channels, 1);
    gamma.value.setOnes();
    var.value.setOnes();
    mean.trainable = false;
    var.trainable = false;
  }

  Eigen::Index channels() const { return gamma.value.rows(); }

  RowVec<S> Scale() const {
    return (gamma.value.array() / (var.value.array() + S(kEps)).sqrt()).transpose().matrix();
  }

  Mat<S> Forward(const Mat<S>& x) {
    if (calibrating_) return CalibrationForward(x);
    const RowVec<S> scale = Scale();
    const RowVec<S> shift = beta.value.col(0).transpose() - mean.value.col(0).transpose().cwiseProduct(scale);
    return (x.array().rowwise() * scale.array()).rowwise() + shift.array();
  }

  Mat<S> Backward(const Mat<S>& x, const Mat<S>& dy) {
    const RowVec<S> inv_std = (var.value.array() + S(kEps)).rsqrt().transpose().matrix();
    const Mat<S> xhat = ((x.rowwise() - mean.value.col(0).transpose()).array().rowwise() * inv_std.array()).matrix();
    gamma.grad.col(0) += dy.cwiseProduct(xhat).colwise().sum().transpose();
    beta.grad.col(0) += dy.colwise().sum().transpose();
    return (dy.array().rowwise() * Scale().array()).matrix();
  }

  /// While calibrating, Forward normalises with the statistics of its own
  /// input and accumulates them; FinishCalibration stores the averages.
  void BeginCalibration() {
    calibrating_ = true;
    sum_ = Vec<double>::Zero(channels());
    sum_sq_ = Vec<double>::Zero(channels());
    count_ = 0;
  }

  void FinishCalibration() {
    calibrating_ = false;
    if (count_ == 0) return;
    const Vec<double> m = sum_ / static_cast<double>(count_);
    const Vec<double> v = (sum_sq_ / static_cast<double>(count_) - m.cwiseAbs2()).cwiseMax(0.0);
    mean.value.col(0) = m.cast<S>();
    var.value.col(0) = v.cast<S>();
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    f(prefix + "gamma", gamma);
    f(prefix + "beta", beta);
    f(prefix + "mean", mean);
    f(prefix + "var", var);
  }

  Param<S> gamma, beta, mean, var;

 private:
  Mat<S> CalibrationForward(const Mat<S>& x) {
    const Mat<double> xd = x.template cast<double>();
    sum_ += xd.colwise().sum().transpose();
    sum_sq_ += xd.cwiseAbs2().colwise().sum().transpose();
    count_ += x.rows();
    const RowVec<double> m = xd.colwise().mean();
    const RowVec<double> v = ((xd.rowwise() - m).cwiseAbs2().colwise().mean()).cwiseMax(0.0);
    const RowVec<double> scale = (gamma.value.col(0).transpose().template cast<double>().array() /
                                  (v.array() + kEps).sqrt()).matrix();
    return (((xd.rowwise() - m).array().rowwise() * scale.array()).rowwise() +
            beta.value.col(0).transpose().template cast<double>().array())
        .matrix()
        .template cast<S>();
  }

  bool calibrating_ = false;
  Vec<double> sum_, sum_sq_;
  Eigen::Index count_ = 0;
};

// ---------------------------------------------------------------------------

/// Squeeze-excitation: channel gates from the time-averaged input.
template <typename S>
class SqueezeExcite {
 public:
  struct Cache {
    Mat<S> x, mean, hidden, gate;
  };

  SqueezeExcite() = default;
  SqueezeExcite(Eigen::Index channels, Eigen::Index bottleneck)
      : fc1(channels, bottleneck), fc2(bottleneck, channels) {}

  void Init(std::mt19937_64& rng) {
    fc1.Init(rng);
    fc2.Init(rng);
  }

  Mat<S> Forward(const Mat<S>& x, Cache* cache) const {
    Cache c;
    c.mean = x.colwise().mean();
    c.hidden = Relu<S>(fc1.Forward(c.mean));
    c.gate = Sigmoid<S>(fc2.Forward(c.hidden));
    Mat<S> y = (x.array().rowwise() * c.gate.row(0).array()).matrix();
    if (cache) {
      c.x = x;
      *cache = std::move(c);
    }
    return y;
  }

  Mat<S> Backward(const Cache& c, const Mat<S>& dy) {
    const Mat<S> dgate = dy.cwiseProduct(c.x).colwise().sum();
    const Mat<S> dpre2 = dgate.cwiseProduct(c.gate).cwiseProduct((S(1) - c.gate.array()).matrix());
    const Mat<S> dhidden = ReluBackward<S>(c.hidden, fc2.Backward(c.hidden, dpre2));
    const Mat<S> dmean = fc1.Backward(c.mean, dhidden);
    Mat<S> dx = (dy.array().rowwise() * c.gate.row(0).array()).matrix();
    dx.rowwise() += dmean.row(0) / static_cast<S>(c.x.rows());
    return dx;
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    fc1.ForEachParam(prefix + "fc1.", f);
    fc2.ForEachParam(prefix + "fc2.", f);
  }

  Linear<S> fc1, fc2;
};

// ---------------------------------------------------------------------------

/// Conv -> ReLU -> norm, the unit repeated throughout the encoder.
template <typename S>
class ConvReluNorm {
 public:
  struct Cache {
    Mat<S> x, act;
  };

  ConvReluNorm() = default;
  ConvReluNorm(Eigen::Index in, Eigen::Index out, int kernel, int dilation = 1)
      : conv(in, out, kernel, dilation), norm(out) {}

  void Init(std::mt19937_64& rng) { conv.Init(rng); }

  Mat<S> Forward(const Mat<S>& x, Cache* cache) {
    Mat<S> act = Relu<S>(conv.Forward(x));
    Mat<S> y = norm.Forward(act);
    if (cache) {
      cache->x = x;
      cache->act = std::move(act);
    }
    return y;
  }

  Mat<S> Backward(const Cache& c, const Mat<S>& dy) {
    return conv.Backward(c.x, ReluBackward<S>(c.act, norm.Backward(c.act, dy)));
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    conv.ForEachParam(prefix + "conv.", f);
    norm.ForEachParam(prefix + "norm.", f);
  }

  template <typename F>
  void ForEachNorm(F&& f) { f(norm); }

  Conv1d<S> conv;
  ChannelNorm<S> norm;
};

// ---------------------------------------------------------------------------

/// SE-Res2 block: 1x1 unit, hierarchical dilated convolutions over channel
/// groups (the last group passes through), 1x1 unit, squeeze-excitation,
/// residual connection.
template <typename S>
class Res2Block {
 public:
  struct Cache {
    typename ConvReluNorm<S>::Cache in_unit, out_unit;
    std::vector<typename ConvReluNorm<S>::Cache> groups;
    typename SqueezeExcite<S>::Cache se;
  };

  Res2Block() = default;
  Res2Block(Eigen::Index channels, int scale, int dilation, Eigen::Index se_bottleneck)
      : scale_(scale),
        width_(channels / scale),
        in_unit(channels, channels, 1),
        out_unit(channels, channels, 1),
        se(channels, se_bottleneck) {
    if (scale < 2 || channels % scale != 0)
      throw Error("Res2Block: channels must be divisible by scale >= 2");
    for (int i = 0; i + 1 < scale; ++i) groups.emplace_back(width_, width_, 3, dilation);
  }

  void Init(std::mt19937_64& rng) {
    in_unit.Init(rng);
    for (auto& g : groups) g.Init(rng);
    out_unit.Init(rng);
    se.Init(rng);
  }

  Mat<S> Forward(const Mat<S>& x, Cache* cache) {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.groups.resize(groups.size());
    const Mat<S> h = in_unit.Forward(x, &c.in_unit);
    Mat<S> cat(h.rows(), h.cols());
    Mat<S> carry;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto cols = static_cast<Eigen::Index>(i) * width_;
      Mat<S> in = h.middleCols(cols, width_);
      if (i > 0) in += carry;
      carry = groups[i].Forward(in, &c.groups[i]);
      cat.middleCols(cols, width_) = carry;
    }
    const auto last = static_cast<Eigen::Index>(groups.size()) * width_;
    cat.middleCols(last, width_) = h.middleCols(last, width_);
    const Mat<S> o = out_unit.Forward(cat, &c.out_unit);
    return se.Forward(o, &c.se) + x;
  }

  Mat<S> Backward(const Cache& c, const Mat<S>& dy) {
    const Mat<S> dcat = out_unit.Backward(c.out_unit, se.Backward(c.se, dy));
    Mat<S> dh(dcat.rows(), dcat.cols());
    const auto last = static_cast<Eigen::Index>(groups.size()) * width_;
    dh.middleCols(last, width_) = dcat.middleCols(last, width_);
    Mat<S> carry;
    for (std::size_t i = groups.size(); i-- > 0;) {
      const auto cols = static_cast<Eigen::Index>(i) * width_;
      Mat<S> dout = dcat.middleCols(cols, width_);
      if (i + 1 < groups.size()) dout += carry;
      carry = groups[i].Backward(c.groups[i], dout);
      dh.middleCols(cols, width_) = carry;
    }
    return in_unit.Backward(c.in_unit, dh) + dy;
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    in_unit.ForEachParam(prefix + "in.", f);
    for (std::size_t i = 0; i < groups.size(); ++i)
      groups[i].ForEachParam(prefix + "res2." + std::to_string(i) + ".", f);
    out_unit.ForEachParam(prefix + "out.", f);
    se.ForEachParam(prefix + "se.", f);
  }

  template <typename F>
  void ForEachNorm(F&& f) {
    in_unit.ForEachNorm(f);
    for (auto& g : groups) g.ForEachNorm(f);
    out_unit.ForEachNorm(f);
  }

 private:
  int scale_ = 2;
  Eigen::Index width_ = 0;

 public:
  ConvReluNorm<S> in_unit;
  std::vector<ConvReluNorm<S>> groups;
  ConvReluNorm<S> out_unit;
  SqueezeExcite<S> se;
};

// ---------------------------------------------------------------------------

/// Attentive statistics pooling with channel-wise attention. Each channel
/// gets its own softmax over frames; the output row is [mean, std].
template <typename S>
class AttentivePooling {
 public:
  // Derivative of sqrt is evaluated at max(var, kVarEps).
  static constexpr double kVarEps = 1e-8;

  struct Cache {
    Mat<S> x, hidden, alpha, mean, var, std;
  };

  AttentivePooling() = default;
  AttentivePooling(Eigen::Index channels, Eigen::Index bottleneck)
      : att1(channels, bottleneck), att2(bottleneck, channels) {}

  void Init(std::mt19937_64& rng) {
    att1.Init(rng);
    att2.Init(rng);
  }

  Eigen::Index channels() const { return att2.out_dim(); }

  /// Frame weights, T x C; every column sums to one.
  Mat<S> Weights(const Mat<S>& x, Mat<S>* hidden = nullptr) const {
    Mat<S> h = att1.Forward(x).array().tanh().matrix();
    Mat<S> e = att2.Forward(h);
    e.rowwise() -= e.colwise().maxCoeff();
    Mat<S> a = e.array().exp().matrix();
    a.array().rowwise() /= a.colwise().sum().array();
    if (hidden) *hidden = std::move(h);
    return a;
  }

  Mat<S> Forward(const Mat<S>& x, Cache* cache) const {
    if (x.rows() < 1) throw Error("pooling: empty sequence");
    Cache c;
    c.alpha = Weights(x, &c.hidden);
    c.mean = c.alpha.cwiseProduct(x).colwise().sum();
    const Mat<S> centred = x.rowwise() - c.mean.row(0);
    c.var = c.alpha.cwiseProduct(centred.cwiseAbs2()).colwise().sum();
    c.std = c.var.cwiseMax(S(0)).cwiseSqrt();
    Mat<S> out(1, 2 * x.cols());
    out << c.mean, c.std;
    if (cache) {
      c.x = x;
      *cache = std::move(c);
    }
    return out;
  }

  Mat<S> Backward(const Cache& c, const Mat<S>& dout) {
    const Eigen::Index d = c.x.cols();
    const RowVec<S> dmean = dout.leftCols(d);
    const RowVec<S> dvar = (dout.rightCols(d).array() * S(0.5) /
                            c.var.row(0).array().max(S(kVarEps)).sqrt()).matrix();
    const Mat<S> centred = c.x.rowwise() - c.mean.row(0);
    // v = sum a x^2 - mu^2, so dv/da_t = x_t^2 - 2 mu x_t = (x_t - mu)^2 - mu^2.
    Mat<S> dalpha = (c.x.array().rowwise() * dmean.array()).matrix();
    dalpha += ((centred.cwiseAbs2().rowwise() - c.mean.row(0).cwiseAbs2()).array().rowwise() *
               dvar.array()).matrix();
    Mat<S> dx = (c.alpha.array() * ((centred.array().rowwise() * (S(2) * dvar).array()).rowwise() +
                                    dmean.array())).matrix();
    // Column-wise softmax backward.
    Mat<S> de = c.alpha.cwiseProduct(dalpha);
    de = (c.alpha.array() * (dalpha.rowwise() - de.colwise().sum()).array()).matrix();
    const Mat<S> dhidden = att2.Backward(c.hidden, de);
    const Mat<S> dpre = dhidden.cwiseProduct((S(1) - c.hidden.array().square()).matrix());
    dx += att1.Backward(c.x, dpre);
    return dx;
  }

  template <typename F>
  void ForEachParam(const std::string& prefix, F&& f) {
    att1.ForEachParam(prefix + "att1.", f);
    att2.ForEachParam(prefix + "att2.", f);
  }

  Linear<S> att1, att2;
};

}  // namespace tcssd::nn

#endif  // TCSSD_NN_HPP_
