// src/analysis.cpp

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

#include "tcssd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <random>

#include <Eigen/Eigenvalues>

namespace tcssd {

double CosineSimilarity(const Eigen::Ref<const Eigen::VectorXd>& a,
                        const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw Error("cosine_similarity: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) throw Error("cosine_similarity: zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

SimilarityMatrix SimilarityFromEmbeddings(const Eigen::MatrixXd& embeddings,
                                          std::vector<double> segment_times) {
  const Eigen::Index k = embeddings.rows();
  if (static_cast<std::size_t>(k) != segment_times.size())
    throw Error("similarity: embedding count and segment times differ");
  SimilarityMatrix m;
  m.values = Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j)
      m.values(i, j) = m.values(j, i) =
          CosineSimilarity(embeddings.row(i).transpose(), embeddings.row(j).transpose());
  m.segment_times = std::move(segment_times);
  return m;
}

std::vector<Eigen::Index> SampleSegmentStarts(Eigen::Index n_frames, Eigen::Index seg_frames,
                                              int k, std::uint64_t seed) {
  if (k < 2) throw Error("tc_similarity: need k >= 2 segments");
  if (seg_frames < 1 || n_frames < seg_frames)
    throw Error("tc_similarity: utterance shorter than the segment duration");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> start(0, n_frames - seg_frames);
  std::vector<Eigen::Index> out(static_cast<std::size_t>(k));
  for (auto& s : out) s = start(rng);
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd SegmentMean(const Eigen::MatrixXd& segment) {
  return segment.colwise().mean().transpose();
}

SimilarityMatrix TcSimilarityMatrix(const Eigen::MatrixXd& features, int k, double seg_dur,
                                    std::uint64_t seed, const SegmentEmbedder& embed) {
  const auto seg = static_cast<Eigen::Index>(std::lround(seg_dur * kFramesPerSecond));
  const auto starts = SampleSegmentStarts(features.rows(), seg, k, seed);
  Eigen::MatrixXd emb;
  std::vector<double> times;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const Eigen::VectorXd e = embed(features.middleRows(starts[i], seg));
    if (i == 0) emb.resize(k, e.size());
    emb.row(static_cast<Eigen::Index>(i)) = e.transpose();
    times.push_back(static_cast<double>(starts[i]) / kFramesPerSecond);
  }
  return SimilarityFromEmbeddings(emb, std::move(times));
}

SimilarityMatrix TcSimilarityMatrix(const Waveform& w, int k, double seg_dur, std::uint64_t seed,
                                    Encoder<float>& encoder) {
  if (static_cast<double>(w.samples.size()) < seg_dur * w.sample_rate)
    throw Error("tc_similarity: utterance shorter than the segment duration");
  const FeatureMap fbank = ComputeFbank(w);
  const Mat<float> speaker = encoder.EncodeFeatures(fbank.values.cast<float>());
  return TcSimilarityMatrix(speaker.cast<double>(), k, seg_dur, seed,
                            [&](const Eigen::MatrixXd& s) -> Eigen::VectorXd {
                              return encoder.PoolEmbedding(s.cast<float>()).transpose().cast<double>();
                            });
}

TcStatistic ComputeTcStatistic(const Eigen::MatrixXd& m) {
  const Eigen::Index k = m.rows();
  if (k < 2 || m.cols() != k) throw Error("tc_statistic: need a square matrix with K >= 2");
  double sum = 0, lo = m(0, 1), hi = m(0, 1);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      sum += m(i, j);
      lo = std::min(lo, m(i, j));
      hi = std::max(hi, m(i, j));
    }
  return {sum / static_cast<double>(k * (k - 1) / 2), hi - lo};
}

PcaResult PcaProject(const Eigen::MatrixXd& x, int out_dim) {
  if (x.rows() < 2) throw Error("pca: need at least 2 points");
  if (out_dim < 1 || out_dim > x.cols()) throw Error("pca: invalid output dimension");
  PcaResult r;
  r.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - r.mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("pca: eigen decomposition failed");
  // Ascending from the solver; reverse to descending.
  const Eigen::Index e = x.cols();
  r.eigenvalues = solver.eigenvalues().reverse();
  r.axes.resize(e, out_dim);
  for (int j = 0; j < out_dim; ++j) {
    Eigen::VectorXd axis = solver.eigenvectors().col(e - 1 - j);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis[arg] < 0) axis = -axis;
    r.axes.col(j) = axis;
  }
  r.coords = centered * r.axes;
  return r;
}

void SimConfig::Validate() const {
  if (dim < 2 || n_frames < 2) throw Error("sim config: dim and n_frames must be >= 2");
  if (!(drift_sigma >= 0) || !(noise_sigma >= 0) || !(base_scale >= 0))
    throw Error("sim config: scales must be >= 0");
}

namespace {

Eigen::VectorXd RandomDirection(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = nd(rng);
  } while (v.norm() == 0);
  return v.normalized();
}

// Random walk starting at zero: row 0 is zero, row t sums t steps.
Eigen::MatrixXd Drift(int n_frames, int dim, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_frames, dim);
  for (int t = 1; t < n_frames; ++t)
    for (int c = 0; c < dim; ++c) d(t, c) = d(t - 1, c) + sigma * nd(rng);
  return d;
}

void AddNoise(Eigen::MatrixXd& m, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index t = 0; t < m.rows(); ++t)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(t, c) += sigma * nd(rng);
}

std::string Id(const std::string& tag, char kind, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%c_%05d", kind, i);
  return tag + buf;
}

}  // namespace

std::vector<SimulatedUtterance> SimulateTrajectories(const SimConfig& cfg, int n_per_class,
                                                     const std::string& tag) {
  cfg.Validate();
  if (n_per_class < 0) throw Error("simulate: negative utterance count");
  std::mt19937_64 rng(cfg.seed);
  std::vector<SimulatedUtterance> out;
  for (int cls = 0; cls < 2; ++cls) {
    const bool bona = cls == 0;
    for (int i = 0; i < n_per_class; ++i) {
      SimulatedUtterance u;
      u.speaker = Id(tag + "SPK", bona ? 'B' : 'S', i);
      u.utt = Id(tag, bona ? 'B' : 'S', i);
      u.key = bona ? Key::kBonafide : Key::kSpoof;
      u.attack = bona ? "-" : "SIM";
      const Eigen::RowVectorXd b = cfg.base_scale * RandomDirection(cfg.dim, rng).transpose();
      u.values = bona ? Drift(cfg.n_frames, cfg.dim, cfg.drift_sigma, rng)
                      : Eigen::MatrixXd::Zero(cfg.n_frames, cfg.dim);
      u.values.rowwise() += b;
      AddNoise(u.values, cfg.noise_sigma, rng);
      out.push_back(std::move(u));
    }
  }
  return out;
}

std::vector<SimulatedUtterance> SimulateComplementary(const SimConfig& cfg,
                                                      const ComplementaryConfig& comp,
                                                      int n_per_class, const std::string& tag) {
  cfg.Validate();
  if (!(comp.jitter_sigma >= 0)) throw Error("simulate: jitter must be >= 0");
  std::mt19937_64 dir_rng(comp.direction_seed);
  const Eigen::RowVectorXd shift = comp.id_shift * RandomDirection(cfg.dim, dir_rng).transpose();
  std::mt19937_64 rng(cfg.seed);
  std::vector<SimulatedUtterance> out;
  for (int cls = 0; cls < 2; ++cls) {
    const bool bona = cls == 0;
    for (int i = 0; i < n_per_class; ++i) {
      SimulatedUtterance u;
      u.speaker = Id(tag + "SPK", bona ? 'B' : 'S', i);
      u.utt = Id(tag, bona ? 'B' : 'S', i);
      u.key = bona ? Key::kBonafide : Key::kSpoof;
      const bool tc_kind = !bona && i % 2 == 0;
      u.attack = bona ? "-" : (tc_kind ? "TC" : "ID");
      Eigen::RowVectorXd b = cfg.base_scale * RandomDirection(cfg.dim, rng).transpose();
      if (tc_kind) {
        u.values = Eigen::MatrixXd::Zero(cfg.n_frames, cfg.dim);
        u.values.rowwise() += b;
        AddNoise(u.values, std::hypot(cfg.noise_sigma, comp.jitter_sigma), rng);
      } else {
        if (!bona) b += shift;
        u.values = Drift(cfg.n_frames, cfg.dim, cfg.drift_sigma, rng);
        u.values.rowwise() += b;
        AddNoise(u.values, cfg.noise_sigma, rng);
      }
      out.push_back(std::move(u));
    }
  }
  return out;
}

double RocAuc(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) throw Error("auc: need both classes");
  std::vector<double> neg(negative.begin(), negative.end());
  std::sort(neg.begin(), neg.end());
  double wins = 0;
  for (double p : positive) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(positive.size()) * static_cast<double>(neg.size()));
}

void WriteSimilarityMatrix(std::ostream& out, const SimilarityMatrix& m) {
  out << std::setprecision(6);
  for (std::size_t i = 0; i < m.segment_times.size(); ++i) out << (i ? " " : "") << m.segment_times[i];
  out << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) out << (j ? " " : "") << m.values(i, j);
    out << '\n';
  }
}

void WriteProjection(std::ostream& out, const std::vector<std::string>& utts,
                     const Eigen::MatrixXd& coords, const std::vector<std::string>& labels) {
  if (utts.size() != static_cast<std::size_t>(coords.rows()) || labels.size() != utts.size())
    throw Error("projection dump: size mismatch");
  out << std::setprecision(8);
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << utts[i] << '\t' << coords(r, 0) << '\t' << (coords.cols() > 1 ? coords(r, 1) : 0.0)
        << '\t' << labels[i] << '\n';
  }
}

}  // namespace tcssd
