// tcssd/analysis.hpp

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

#ifndef TCSSD_ANALYSIS_HPP_
#define TCSSD_ANALYSIS_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tcssd/common.hpp"
#include "tcssd/encoder.hpp"
#include "tcssd/frontend.hpp"

namespace tcssd {

double CosineSimilarity(const Eigen::Ref<const Eigen::VectorXd>& a,
                        const Eigen::Ref<const Eigen::VectorXd>& b);

struct SimilarityMatrix {
  Eigen::MatrixXd values;             // K x K
  std::vector<double> segment_times;  // start seconds, ascending
};

/// Rows of `embeddings` are segment embeddings in chronological order.
SimilarityMatrix SimilarityFromEmbeddings(const Eigen::MatrixXd& embeddings,
                                          std::vector<double> segment_times);

/// k segment starts drawn uniformly from [0, n_frames - seg_frames], sorted.
/// Segments may overlap.
std::vector<Eigen::Index> SampleSegmentStarts(Eigen::Index n_frames, Eigen::Index seg_frames,
                                              int k, std::uint64_t seed);

using SegmentEmbedder = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Per-segment mean over frames; the embedder used for simulator maps.
Eigen::VectorXd SegmentMean(const Eigen::MatrixXd& segment);

/// TC similarity matrix of a frame-level map (T x D, 100 frames per second).
SimilarityMatrix TcSimilarityMatrix(const Eigen::MatrixXd& features, int k, double seg_dur,
                                    std::uint64_t seed,
                                    const SegmentEmbedder& embed = SegmentMean);

/// Waveform version: fbank -> speaker features -> per-segment pooled
/// embeddings from the encoder tail.
SimilarityMatrix TcSimilarityMatrix(const Waveform& w, int k, double seg_dur, std::uint64_t seed,
                                    Encoder<float>& encoder);

struct TcStatistic {
  double mean_offdiag = 0;
  double range_offdiag = 0;
};

/// Mean and max - min over the strictly upper triangle.
TcStatistic ComputeTcStatistic(const Eigen::MatrixXd& m);

struct PcaResult {
  Eigen::MatrixXd coords;       // N x out_dim
  Eigen::MatrixXd axes;         // E x out_dim, unit columns
  Eigen::VectorXd eigenvalues;  // all E, descending (covariance with 1/N)
  Eigen::RowVectorXd mean;
};

/// Centers and projects onto the leading principal axes. Each axis is signed
/// so that its largest-magnitude component is positive.
PcaResult PcaProject(const Eigen::MatrixXd& x, int out_dim = 2);

struct SimConfig {
  int dim = 24;
  int n_frames = 200;
  double drift_sigma = 0.05;
  double noise_sigma = 0.02;
  double base_scale = 1.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct SimulatedUtterance {
  std::string speaker;
  std::string utt;
  std::string attack;  // "-" for bonafide
  Key key = Key::kBonafide;
  Eigen::MatrixXd values;  // n_frames x dim
};

/// Bonafide frames: b + cumulative random-walk drift + iid noise. Spoof
/// frames: b + iid noise. b has norm base_scale and a uniform direction.
/// Output holds n bonafide then n spoof utterances; `tag` prefixes the ids.
std::vector<SimulatedUtterance> SimulateTrajectories(const SimConfig& cfg, int n_per_class,
                                                     const std::string& tag = "SIM");

struct ComplementaryConfig {
  // Spoof kind A ("TC"): frozen base plus iid jitter of this scale and no
  // drift. Spoof kind B ("ID"): bonafide-like drift on a base shifted by
  // id_shift along one fixed direction shared by the whole set.
  double jitter_sigma = 0.29;
  double id_shift = 1.0;
  std::uint64_t direction_seed = 99;
};

/// Bonafide as in SimulateTrajectories; spoofs alternate between kinds A and
/// B (attack ids "TC" and "ID").
std::vector<SimulatedUtterance> SimulateComplementary(const SimConfig& cfg,
                                                      const ComplementaryConfig& comp,
                                                      int n_per_class,
                                                      const std::string& tag = "CMP");

/// Probability that a positive outscores a negative; ties count one half.
double RocAuc(std::span<const double> positive, std::span<const double> negative);

void WriteSimilarityMatrix(std::ostream& out, const SimilarityMatrix& m);
void WriteProjection(std::ostream& out, const std::vector<std::string>& utts,
                     const Eigen::MatrixXd& coords, const std::vector<std::string>& labels);

}  // namespace tcssd

#endif  // TCSSD_ANALYSIS_HPP_
