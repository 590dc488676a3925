// tcssd/scoring.hpp

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

#ifndef TCSSD_SCORING_HPP_
#define TCSSD_SCORING_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tcssd/common.hpp"

namespace tcssd {

struct TrialRecord {
  std::string speaker;
  std::string utt;
  std::string attack;  // "-" for bonafide
  Key key = Key::kBonafide;

  bool operator==(const TrialRecord&) const = default;
};

/// ASVspoof CM protocol: one trial per line, five whitespace-separated
/// fields (speaker, utterance, unused, attack, key). Blank lines and lines
/// starting with '#' are skipped.
std::vector<TrialRecord> ParseProtocol(std::istream& in, const std::string& source = "<stream>");
std::vector<TrialRecord> LoadProtocol(const std::string& path);
void WriteProtocol(std::ostream& out, const std::vector<TrialRecord>& trials);

struct ScoreEntry {
  std::string utt;
  double score = 0;
  Key key = Key::kBonafide;
};

struct ScoreSet {
  std::string system_id;
  std::vector<ScoreEntry> entries;
};

/// Score files hold `utt_id<TAB>score` lines; '#' lines are headers.
std::vector<std::pair<std::string, double>> ReadScoreFile(const std::string& path);
void WriteScoreFile(const std::string& path, const ScoreSet& scores,
                    const std::vector<std::string>& header = {});

/// Joins raw scores with protocol keys. Every scored utterance must be in
/// the protocol and every trial must be scored.
ScoreSet AttachKeys(const std::vector<std::pair<std::string, double>>& scores,
                    const std::vector<TrialRecord>& protocol, const std::string& system_id);

struct EerResult {
  double eer = 0;
  double threshold = 0;
  std::size_t n_bonafide = 0;
  std::size_t n_spoof = 0;
};

/// Equal error rate with higher scores meaning bonafide.
///
/// FRR(t) is the fraction of bonafide scores below t, FAR(t) the fraction
/// of spoof scores at or above t. Candidate thresholds are -inf, +inf and
/// the midpoints between adjacent distinct scores; the reported EER is
/// (FAR + FRR) / 2 at the candidate minimising |FAR - FRR|, the lowest such
/// threshold on ties.
EerResult ComputeEer(std::span<const double> bonafide, std::span<const double> spoof);
EerResult ComputeEer(const ScoreSet& scores);

enum class FusionNorm { kNone, kMinMax, kZNorm };

FusionNorm ParseFusionNorm(const std::string& name);
ScoreSet NormalizeScores(const ScoreSet& s, FusionNorm norm);

/// Per-utterance w*a + (1-w)*b after normalising each system over its own
/// entries. Both sets must cover the same utterances.
ScoreSet FuseScores(const ScoreSet& a, const ScoreSet& b, double weight = 0.5,
                    FusionNorm norm = FusionNorm::kNone);

}  // namespace tcssd

#endif  // TCSSD_SCORING_HPP_
