// tests/oracles.hpp

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

// Reference implementations used only by tests. They follow the textbook
// definitions directly and share no code with the library.

#ifndef TCSSD_TESTS_ORACLES_HPP_
#define TCSSD_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcssd/nn.hpp"

namespace oracle {

// O(N^2) DFT power spectrum of a zero-padded frame, bins 0..n_fft/2.
inline std::vector<double> DftPower(const std::vector<double>& frame, int n_fft) {
  std::vector<double> out(static_cast<std::size_t>(n_fft / 2 + 1));
  for (int k = 0; k <= n_fft / 2; ++k) {
    std::complex<long double> acc = 0;
    for (std::size_t n = 0; n < frame.size(); ++n) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * k * static_cast<long double>(n) / n_fft;
      acc += static_cast<long double>(frame[n]) * std::complex<long double>(std::cos(ang), std::sin(ang));
    }
    out[static_cast<std::size_t>(k)] = static_cast<double>(std::norm(acc));
  }
  return out;
}

inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Weight of triangular filter m at frequency f (HTK mel scale).
inline double TriangleWeight(int m, double f, int n_mels, double lo_hz, double hi_hz) {
  const double lo = HzToMel(lo_hz), hi = HzToMel(hi_hz);
  auto edge = [&](int i) { return MelToHz(lo + (hi - lo) * i / (n_mels + 1)); };
  const double l = edge(m), c = edge(m + 1), r = edge(m + 2);
  if (f <= l || f >= r) return 0.0;
  return f <= c ? (f - l) / (c - l) : (r - f) / (r - c);
}

// Log mel energies of one frame (already sliced, 400 samples).
inline std::vector<double> FbankFrame(const std::vector<double>& samples, int n_mels = 80) {
  const int n_fft = 512;
  const auto len = samples.size();
  std::vector<double> windowed(len);
  for (std::size_t i = 0; i < len; ++i)
    windowed[i] = samples[i] * (0.54 - 0.46 * std::cos(2 * std::numbers::pi * static_cast<double>(i) /
                                                        static_cast<double>(len - 1)));
  const auto power = DftPower(windowed, n_fft);
  std::vector<double> out(static_cast<std::size_t>(n_mels));
  for (int m = 0; m < n_mels; ++m) {
    double e = 0;
    for (int k = 0; k <= n_fft / 2; ++k)
      e += TriangleWeight(m, 16000.0 * k / n_fft, n_mels, 20.0, 7600.0) * power[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(m)] = std::log(std::max(e, 1e-6));
  }
  return out;
}

// Frame-RMS silence scan: pad frame_len/2 zeros each side, RMS per frame,
// dB relative to the loudest frame. Returns kept sample range.
inline std::pair<long, long> TrimScan(const std::vector<double>& x, double top_db, long frame_len = 2048,
                                      long hop = 512) {
  std::vector<double> padded(static_cast<std::size_t>(frame_len / 2), 0.0);
  padded.insert(padded.end(), x.begin(), x.end());
  padded.insert(padded.end(), static_cast<std::size_t>(frame_len / 2), 0.0);
  const long n_frames = 1 + (static_cast<long>(padded.size()) - frame_len) / hop;
  std::vector<double> db(static_cast<std::size_t>(n_frames));
  double peak = -std::numeric_limits<double>::infinity();
  for (long f = 0; f < n_frames; ++f) {
    double sq = 0;
    for (long j = 0; j < frame_len; ++j) sq += padded[static_cast<std::size_t>(f * hop + j)] * padded[static_cast<std::size_t>(f * hop + j)];
    const double rms = std::sqrt(sq / static_cast<double>(frame_len));
    db[static_cast<std::size_t>(f)] = 20.0 * std::log10(std::max(rms, 1e-5));
    peak = std::max(peak, db[static_cast<std::size_t>(f)]);
  }
  long first = -1, last = -1;
  bool any_signal = false;
  for (double v : x) any_signal = any_signal || v != 0.0;
  if (!any_signal) return {0, 0};
  for (long f = 0; f < n_frames; ++f)
    if (db[static_cast<std::size_t>(f)] > peak - top_db) {
      if (first < 0) first = f;
      last = f;
    }
  const long n = static_cast<long>(x.size());
  return {std::min(n, first * hop), std::min(n, (last + 1) * hop)};
}

// EER by direct evaluation at every midpoint (and +-inf), O(n^2).
struct Eer {
  double eer, threshold;
};
inline Eer BruteForceEer(const std::vector<double>& bona, const std::vector<double>& spoof) {
  std::vector<double> all(bona);
  all.insert(all.end(), spoof.begin(), spoof.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> ts{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) ts.push_back(0.5 * (all[i] + all[i + 1]));
  ts.push_back(std::numeric_limits<double>::infinity());
  Eer best{0, 0};
  double gap = std::numeric_limits<double>::infinity();
  for (double t : ts) {
    double fr = 0, fa = 0;
    for (double b : bona) fr += b < t;
    for (double s : spoof) fa += s >= t;
    fr /= static_cast<double>(bona.size());
    fa /= static_cast<double>(spoof.size());
    if (std::abs(fa - fr) < gap) {
      gap = std::abs(fa - fr);
      best = {0.5 * (fa + fr), t};
    }
  }
  return best;
}

// Central finite differences over every element of every trainable
// parameter visited. Analytic gradients must already be in p.grad.
struct GradReport {
  double max_rel = 0;
  std::string worst;
  long checked = 0;
};

inline double RelErr(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

template <typename Visit>
GradReport CheckGradients(Visit&& visit, const std::function<double()>& loss, double h = 1e-5) {
  GradReport r;
  visit([&](const std::string& name, tcssd::nn::Param<double>& p) {
    if (!p.trainable) return;
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double keep = p.value.data()[i];
      p.value.data()[i] = keep + h;
      const double up = loss();
      p.value.data()[i] = keep - h;
      const double down = loss();
      p.value.data()[i] = keep;
      const double rel = RelErr(p.grad.data()[i], (up - down) / (2 * h));
      ++r.checked;
      if (rel > r.max_rel) {
        r.max_rel = rel;
        r.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  });
  return r;
}

// Same check for an input matrix with analytic gradient dx.
inline GradReport CheckInputGradient(Eigen::MatrixXd& x, const Eigen::MatrixXd& dx,
                                     const std::function<double()>& loss, double h = 1e-5) {
  GradReport r;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = loss();
    x.data()[i] = keep - h;
    const double down = loss();
    x.data()[i] = keep;
    const double rel = RelErr(dx.data()[i], (up - down) / (2 * h));
    ++r.checked;
    if (rel > r.max_rel) {
      r.max_rel = rel;
      r.worst = "x[" + std::to_string(i) + "]";
    }
  }
  return r;
}

}  // namespace oracle

#endif  // TCSSD_TESTS_ORACLES_HPP_
