// src/frontend.cpp

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

#include "tcssd/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "byteio.hpp"

namespace tcssd {

namespace {

constexpr char kFeaMagic[9] = {'T', 'C', 'S', 'S', 'D', '-', 'F', 'E', 'A'};
constexpr std::uint32_t kFeaVersion = 1;

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// n_mels + 2 edge frequencies, Hz.
std::vector<double> MelEdges(const FbankOptions& opts) {
  const double lo = HzToMel(opts.low_hz), hi = HzToMel(opts.high_hz);
  std::vector<double> edges(opts.n_mels + 2);
  for (int i = 0; i < opts.n_mels + 2; ++i)
    edges[i] = MelToHz(lo + (hi - lo) * i / (opts.n_mels + 1));
  return edges;
}

std::vector<unsigned char> ReadAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Waveform LoadWaveform(const std::string& path) {
  const auto bytes = ReadAll(path);
  const unsigned char* p = bytes.data();
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw Error(path + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = io::ReadU32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    const std::size_t avail = n - pos - 8;
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw Error(path + ": truncated fmt chunk");
      format = io::ReadU16(body);
      channels = io::ReadU16(body + 2);
      rate = io::ReadU32(body + 4);
      bits = io::ReadU16(body + 14);
      // WAVE_FORMAT_EXTENSIBLE carries the real format tag in the subformat GUID.
      if (format == 0xFFFE && size >= 40 && avail >= 40) format = io::ReadU16(body + 24);
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw Error(path + ": data chunk before fmt chunk");
      if (format != 1 || bits != 16)
        throw Error(path + ": unsupported encoding (PCM16 required)");
      if (channels != 1) throw Error(path + ": mono required, got " +
                                     std::to_string(channels) + " channels");
      if (rate != static_cast<std::uint32_t>(kSampleRate))
        throw Error(path + ": sample rate mismatch, expected " +
                    std::to_string(kSampleRate) + " Hz, got " + std::to_string(rate));
      const std::size_t len = std::min<std::size_t>(size, avail) / 2;
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(static_cast<Eigen::Index>(len));
      for (std::size_t i = 0; i < len; ++i) {
        const auto raw = static_cast<std::int16_t>(io::ReadU16(body + 2 * i));
        w.samples[static_cast<Eigen::Index>(i)] = raw / 32768.0;
      }
      return w;
    }
    pos += 8 + size + (size & 1);
  }
  throw Error(path + ": no data chunk");
}

void SaveWaveform(const Waveform& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  const auto n = static_cast<std::uint32_t>(w.size());
  out.write("RIFF", 4);
  io::PutU32(out, 36 + 2 * n);
  out.write("WAVEfmt ", 8);
  io::PutU32(out, 16);
  io::PutU16(out, 1);
  io::PutU16(out, 1);
  io::PutU32(out, static_cast<std::uint32_t>(w.sample_rate));
  io::PutU32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  io::PutU16(out, 2);
  io::PutU16(out, 16);
  out.write("data", 4);
  io::PutU32(out, 2 * n);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double v = std::clamp(std::round(w.samples[i] * 32768.0), -32768.0, 32767.0);
    io::PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

std::pair<Eigen::Index, Eigen::Index> TrimBounds(const Waveform& w,
                                                 const TrimOptions& opts) {
  if (w.empty()) throw Error("trim: empty waveform");
  const Eigen::Index n = w.size();
  const Eigen::Index half = opts.frame_len / 2;
  const Eigen::Index n_frames = 1 + n / opts.hop;

  std::vector<double> power(static_cast<std::size_t>(n_frames));
  for (Eigen::Index i = 0; i < n_frames; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i * opts.hop - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n, i * opts.hop - half + opts.frame_len);
    double acc = 0.0;
    for (Eigen::Index j = lo; j < hi; ++j) acc += w.samples[j] * w.samples[j];
    power[static_cast<std::size_t>(i)] = acc / opts.frame_len;
  }
  const double ref = *std::max_element(power.begin(), power.end());
  if (ref <= 0.0) return {0, 0};

  constexpr double kAmin = 1e-10;
  const double ref_db = 10.0 * std::log10(std::max(kAmin, ref));
  Eigen::Index first = -1, last = -1;
  for (Eigen::Index i = 0; i < n_frames; ++i) {
    const double db = 10.0 * std::log10(std::max(kAmin, power[static_cast<std::size_t>(i)])) - ref_db;
    if (db > -opts.top_db) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) return {0, 0};
  return {std::min(n, first * opts.hop), std::min(n, (last + 1) * opts.hop)};
}

Waveform TrimSilence(const Waveform& w, const TrimOptions& opts) {
  const auto [begin, end] = TrimBounds(w, opts);
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = w.samples.segment(begin, end - begin);
  return out;
}

Eigen::VectorXd MelCenters(const FbankOptions& opts) {
  const auto edges = MelEdges(opts);
  Eigen::VectorXd c(opts.n_mels);
  for (int m = 0; m < opts.n_mels; ++m) c[m] = edges[m + 1];
  return c;
}

Eigen::MatrixXd MelFilterbank(const FbankOptions& opts) {
  const auto edges = MelEdges(opts);
  const int n_bins = opts.n_fft / 2 + 1;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(opts.n_mels, n_bins);
  for (int m = 0; m < opts.n_mels; ++m) {
    const double l = edges[m], c = edges[m + 1], r = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / opts.n_fft;
      fb(m, k) = std::max(0.0, std::min((f - l) / (c - l), (r - f) / (r - c)));
    }
  }
  return fb;
}

FeatureMap ComputeFbank(const Waveform& w, const FbankOptions& opts) {
  if (w.size() < opts.frame_len)
    throw Error("fbank: need at least " + std::to_string(opts.frame_len) +
                " samples, got " + std::to_string(w.size()));
  const Eigen::Index n_frames = (w.size() - opts.frame_len) / opts.hop + 1;
  const int n_bins = opts.n_fft / 2 + 1;

  Eigen::VectorXd window(opts.frame_len);
  for (int i = 0; i < opts.frame_len; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (opts.frame_len - 1));
  const Eigen::MatrixXd fb = MelFilterbank(opts);

  Eigen::FFT<double> fft;
  std::vector<double> frame(static_cast<std::size_t>(opts.n_fft), 0.0);
  std::vector<std::complex<double>> spec;
  Eigen::VectorXd power(n_bins);

  FeatureMap out;
  out.frame_hop = static_cast<std::uint32_t>(opts.hop);
  out.frame_len = static_cast<std::uint32_t>(opts.frame_len);
  out.n_fft = static_cast<std::uint32_t>(opts.n_fft);
  out.values.resize(n_frames, opts.n_mels);
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    for (int i = 0; i < opts.frame_len; ++i)
      frame[static_cast<std::size_t>(i)] = w.samples[t * opts.hop + i] * window[i];
    fft.fwd(spec, frame);
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(spec[static_cast<std::size_t>(k)]);
    out.values.row(t) = (fb * power).cwiseMax(opts.log_floor).array().log().transpose();
  }
  return out;
}

FeatureMap SpecAugment(const FeatureMap& f, const AugmentPolicy& p,
                       std::uint64_t seed) {
  FeatureMap out = f;
  std::mt19937_64 rng(seed);
  const auto n_bins = static_cast<int>(f.bins());
  const auto n_frames = static_cast<int>(f.frames());
  for (int i = 0; i < p.n_freq_masks; ++i) {
    const int width = std::uniform_int_distribution<int>(0, std::min(p.max_freq_width, n_bins))(rng);
    const int start = std::uniform_int_distribution<int>(0, n_bins - width)(rng);
    out.values.middleCols(start, width).setZero();
  }
  for (int i = 0; i < p.n_time_masks; ++i) {
    const int width = std::uniform_int_distribution<int>(0, std::min(p.max_time_width, n_frames))(rng);
    const int start = std::uniform_int_distribution<int>(0, n_frames - width)(rng);
    out.values.middleRows(start, width).setZero();
  }
  return out;
}

FeatureMap RandomCrop(const FeatureMap& f, const CropOptions& opts,
                      std::uint64_t seed) {
  const Eigen::Index n = f.frames();
  if (n == 0) throw Error("crop: empty feature map");
  const double fps = static_cast<double>(kSampleRate) / f.frame_hop;
  const auto min_frames = static_cast<Eigen::Index>(std::lround(opts.min_dur * fps));
  const auto max_frames = static_cast<Eigen::Index>(std::lround(opts.max_dur * fps));

  FeatureMap out = f;
  if (n < min_frames) {
    out.values.resize(min_frames, f.bins());
    for (Eigen::Index t = 0; t < min_frames; ++t) out.values.row(t) = f.values.row(t % n);
    return out;
  }
  std::mt19937_64 rng(seed);
  const Eigen::Index hi = std::min(max_frames, n);
  const auto len = std::uniform_int_distribution<Eigen::Index>(std::min(min_frames, hi), hi)(rng);
  const auto start = std::uniform_int_distribution<Eigen::Index>(0, n - len)(rng);
  out.values = f.values.middleRows(start, len);
  return out;
}

void SaveFeatureMap(const FeatureMap& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(kFeaMagic, sizeof(kFeaMagic));
  io::PutU32(out, kFeaVersion);
  io::PutU32(out, static_cast<std::uint32_t>(f.frames()));
  io::PutU32(out, static_cast<std::uint32_t>(f.bins()));
  io::PutU32(out, f.frame_hop);
  io::PutU32(out, f.frame_len);
  io::PutU32(out, f.n_fft);
  for (Eigen::Index t = 0; t < f.frames(); ++t)
    for (Eigen::Index m = 0; m < f.bins(); ++m)
      io::PutF32(out, static_cast<float>(f.values(t, m)));
  if (!out) throw Error("write failed for '" + path + "'");
}

FeatureMap LoadFeatureMap(const std::string& path) {
  const auto bytes = ReadAll(path);
  constexpr std::size_t kHeader = sizeof(kFeaMagic) + 6 * 4;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kFeaMagic, sizeof(kFeaMagic)) != 0)
    throw Error(path + ": not a feature cache file");
  const unsigned char* h = bytes.data() + sizeof(kFeaMagic);
  if (io::ReadU32(h) != kFeaVersion)
    throw Error(path + ": unsupported feature cache version " + std::to_string(io::ReadU32(h)));
  const std::uint64_t rows = io::ReadU32(h + 4), cols = io::ReadU32(h + 8);
  FeatureMap f;
  f.frame_hop = io::ReadU32(h + 12);
  f.frame_len = io::ReadU32(h + 16);
  f.n_fft = io::ReadU32(h + 20);
  if (f.frame_hop == 0) throw Error(path + ": zero frame hop");
  if (bytes.size() != kHeader + rows * cols * 4)
    throw Error(path + ": payload size does not match header (" + std::to_string(rows) + "x" +
                std::to_string(cols) + ")");
  f.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* d = bytes.data() + kHeader;
  for (Eigen::Index t = 0; t < f.values.rows(); ++t)
    for (Eigen::Index m = 0; m < f.values.cols(); ++m, d += 4) f.values(t, m) = io::ReadF32(d);
  return f;
}

}  // namespace tcssd
