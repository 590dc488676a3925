// tcssd/frontend.hpp

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

#ifndef TCSSD_FRONTEND_HPP_
#define TCSSD_FRONTEND_HPP_

#include <cstdint>
#include <string>

#include "tcssd/common.hpp"

namespace tcssd {

struct Waveform {
  Eigen::VectorXd samples;
  int sample_rate = kSampleRate;

  Eigen::Index size() const { return samples.size(); }
  bool empty() const { return samples.size() == 0; }
};

/// Frame-level features, T frames x M bins. FBank maps carry the analysis
/// geometry; precomputed speaker-feature maps (simulator output) carry
/// frame_len == n_fft == 0.
struct FeatureMap {
  Eigen::MatrixXd values;
  std::uint32_t frame_hop = kFbankHop;
  std::uint32_t frame_len = 400;
  std::uint32_t n_fft = 512;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index bins() const { return values.cols(); }
  bool is_fbank() const { return n_fft != 0; }
};

struct FbankOptions {
  int frame_len = 400;
  int hop = kFbankHop;
  int n_fft = 512;
  int n_mels = 80;
  double low_hz = 20.0;
  double high_hz = 7600.0;
  double log_floor = 1e-6;
};

struct TrimOptions {
  double top_db = 40.0;
  int frame_len = 2048;
  int hop = 512;
};

struct AugmentPolicy {
  int n_freq_masks = 1;
  int max_freq_width = 8;
  int n_time_masks = 1;
  int max_time_width = 10;
};

struct CropOptions {
  double min_dur = 2.0;
  double max_dur = 4.0;
};

Waveform LoadWaveform(const std::string& path);
void SaveWaveform(const Waveform& w, const std::string& path);

/// Removes leading and trailing low-energy frames. Frames are centred
/// (frame i spans [i*hop - frame_len/2, i*hop + frame_len/2) with zero
/// padding); a frame is kept when its mean power is within top_db of the
/// loudest frame. The result spans [first*hop, min(N, (last+1)*hop)).
/// Returns an empty waveform when no frame qualifies.
Waveform TrimSilence(const Waveform& w, const TrimOptions& opts = {});

/// Sample range [begin, end) that TrimSilence keeps.
std::pair<Eigen::Index, Eigen::Index> TrimBounds(const Waveform& w,
                                                 const TrimOptions& opts = {});

/// Centre frequencies of the mel filters, Hz.
Eigen::VectorXd MelCenters(const FbankOptions& opts = {});
/// n_mels x (n_fft/2 + 1) triangular filter weights.
Eigen::MatrixXd MelFilterbank(const FbankOptions& opts = {});

FeatureMap ComputeFbank(const Waveform& w, const FbankOptions& opts = {});

/// Zero-fills random frequency and time bands. Untouched cells are copied
/// bit-for-bit.
FeatureMap SpecAugment(const FeatureMap& f, const AugmentPolicy& p,
                       std::uint64_t seed);

FeatureMap RandomCrop(const FeatureMap& f, const CropOptions& opts,
                      std::uint64_t seed);

/// Feature cache: 9-byte magic "TCSSD-FEA", then version, T, M, hop,
/// frame_len, n_fft as little-endian uint32, then T*M little-endian float32
/// values, frame-major.
void SaveFeatureMap(const FeatureMap& f, const std::string& path);
FeatureMap LoadFeatureMap(const std::string& path);

}  // namespace tcssd

#endif  // TCSSD_FRONTEND_HPP_
