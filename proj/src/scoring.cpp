// src/scoring.cpp

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

#include "tcssd/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace tcssd {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string JoinLimited(const std::vector<std::string>& names, std::size_t limit = 5) {
  std::string out;
  for (std::size_t i = 0; i < names.size() && i < limit; ++i) out += (i ? ", " : "") + names[i];
  if (names.size() > limit) out += ", ... (" + std::to_string(names.size()) + " total)";
  return out;
}

}  // namespace

std::vector<TrialRecord> ParseProtocol(std::istream& in, const std::string& source) {
  std::vector<TrialRecord> out;
  std::unordered_set<std::string> seen;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream fields(t);
    std::vector<std::string> f{std::istream_iterator<std::string>(fields),
                               std::istream_iterator<std::string>()};
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (f.size() != 5)
      throw Error(where + "expected 5 fields, got " + std::to_string(f.size()));
    TrialRecord r{f[0], f[1], f[3], Key::kBonafide};
    if (f[4] == "bonafide") {
      r.key = Key::kBonafide;
      if (r.attack != "-") throw Error(where + "bonafide trial with attack '" + r.attack + "'");
    } else if (f[4] == "spoof") {
      r.key = Key::kSpoof;
      if (r.attack == "-") throw Error(where + "spoof trial without attack id");
    } else {
      throw Error(where + "unknown key '" + f[4] + "'");
    }
    if (!seen.insert(r.utt).second) throw Error(where + "duplicate utterance '" + r.utt + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TrialRecord> LoadProtocol(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open protocol '" + path + "'");
  return ParseProtocol(in, path);
}

void WriteProtocol(std::ostream& out, const std::vector<TrialRecord>& trials) {
  for (const auto& t : trials)
    out << t.speaker << ' ' << t.utt << " - " << t.attack << ' ' << KeyName(t.key) << '\n';
}

std::vector<std::pair<std::string, double>> ReadScoreFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open score file '" + path + "'");
  std::vector<std::pair<std::string, double>> out;
  std::unordered_set<std::string> seen;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream fields(t);
    std::string utt, value, extra;
    fields >> utt >> value;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    if (value.empty() || (fields >> extra)) throw Error(where + "expected 'utt_id<TAB>score'");
    double score = 0;
    try {
      std::size_t used = 0;
      score = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw Error(where + "bad score '" + value + "'");
    }
    if (!std::isfinite(score)) throw Error(where + "non-finite score");
    if (!seen.insert(utt).second) throw Error(where + "duplicate utterance '" + utt + "'");
    out.emplace_back(utt, score);
  }
  return out;
}

void WriteScoreFile(const std::string& path, const ScoreSet& scores,
                    const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write score file '" + path + "'");
  for (const auto& h : header) out << "# " << h << '\n';
  out << std::setprecision(9);
  for (const auto& e : scores.entries) out << e.utt << '\t' << e.score << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

ScoreSet AttachKeys(const std::vector<std::pair<std::string, double>>& scores,
                    const std::vector<TrialRecord>& protocol, const std::string& system_id) {
  std::unordered_map<std::string, Key> keys;
  for (const auto& t : protocol) keys.emplace(t.utt, t.key);
  ScoreSet out;
  out.system_id = system_id;
  std::vector<std::string> unknown;
  for (const auto& [utt, score] : scores) {
    const auto it = keys.find(utt);
    if (it == keys.end()) {
      unknown.push_back(utt);
      continue;
    }
    out.entries.push_back({utt, score, it->second});
  }
  if (!unknown.empty()) throw Error("scores for utterances not in protocol: " + JoinLimited(unknown));
  if (out.entries.size() != protocol.size()) {
    std::unordered_set<std::string> scored;
    for (const auto& e : out.entries) scored.insert(e.utt);
    std::vector<std::string> missing;
    for (const auto& t : protocol)
      if (!scored.count(t.utt)) missing.push_back(t.utt);
    throw Error("protocol trials without scores: " + JoinLimited(missing));
  }
  return out;
}

EerResult ComputeEer(std::span<const double> bonafide, std::span<const double> spoof) {
  if (bonafide.empty() || spoof.empty())
    throw Error("eer: need at least one bonafide and one spoof score");
  std::vector<double> bona(bonafide.begin(), bonafide.end());
  std::vector<double> spf(spoof.begin(), spoof.end());
  std::sort(bona.begin(), bona.end());
  std::sort(spf.begin(), spf.end());
  std::vector<double> all(bona);
  all.insert(all.end(), spf.begin(), spf.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> thresholds;
  thresholds.reserve(all.size() + 1);
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < all.size(); ++i) thresholds.push_back((all[i] + all[i + 1]) / 2);
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double nb = static_cast<double>(bona.size()), ns = static_cast<double>(spf.size());
  EerResult best;
  best.n_bonafide = bona.size();
  best.n_spoof = spf.size();
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t ib = 0, is = 0;  // counts of scores below the threshold
  for (double t : thresholds) {
    while (ib < bona.size() && bona[ib] < t) ++ib;
    while (is < spf.size() && spf[is] < t) ++is;
    const double frr = static_cast<double>(ib) / nb;
    const double far = static_cast<double>(spf.size() - is) / ns;
    const double gap = std::abs(far - frr);
    if (gap < best_gap) {
      best_gap = gap;
      best.eer = (far + frr) / 2;
      best.threshold = t;
    }
  }
  return best;
}

EerResult ComputeEer(const ScoreSet& scores) {
  std::vector<double> bona, spoof;
  for (const auto& e : scores.entries) (e.key == Key::kBonafide ? bona : spoof).push_back(e.score);
  return ComputeEer(bona, spoof);
}

FusionNorm ParseFusionNorm(const std::string& name) {
  if (name == "none") return FusionNorm::kNone;
  if (name == "minmax") return FusionNorm::kMinMax;
  if (name == "znorm") return FusionNorm::kZNorm;
  throw Error("unknown normalisation '" + name + "' (none|minmax|znorm)");
}

ScoreSet NormalizeScores(const ScoreSet& s, FusionNorm norm) {
  ScoreSet out = s;
  if (norm == FusionNorm::kNone || s.entries.empty()) return out;
  Eigen::VectorXd v(static_cast<Eigen::Index>(s.entries.size()));
  for (std::size_t i = 0; i < s.entries.size(); ++i) v[static_cast<Eigen::Index>(i)] = s.entries[i].score;
  double shift = 0, scale = 1;
  if (norm == FusionNorm::kMinMax) {
    shift = v.minCoeff();
    scale = v.maxCoeff() - shift;
  } else {
    shift = v.mean();
    scale = std::sqrt((v.array() - shift).square().mean());
  }
  for (auto& e : out.entries) e.score = scale > 0 ? (e.score - shift) / scale : 0.0;
  return out;
}

ScoreSet FuseScores(const ScoreSet& a, const ScoreSet& b, double weight, FusionNorm norm) {
  std::unordered_map<std::string, const ScoreEntry*> bmap;
  for (const auto& e : b.entries) bmap.emplace(e.utt, &e);
  std::unordered_set<std::string> anames;
  for (const auto& e : a.entries) anames.insert(e.utt);
  std::vector<std::string> only_a, only_b;
  for (const auto& e : a.entries)
    if (!bmap.count(e.utt)) only_a.push_back(e.utt);
  for (const auto& e : b.entries)
    if (!anames.count(e.utt)) only_b.push_back(e.utt);
  if (!only_a.empty() || !only_b.empty())
    throw Error("fuse: utterance sets differ; only in '" + a.system_id + "': [" +
                JoinLimited(only_a) + "], only in '" + b.system_id + "': [" + JoinLimited(only_b) + "]");

  const ScoreSet na = NormalizeScores(a, norm), nb = NormalizeScores(b, norm);
  std::unordered_map<std::string, double> bnorm;
  for (const auto& e : nb.entries) bnorm.emplace(e.utt, e.score);
  ScoreSet out;
  out.system_id = "fusion(" + a.system_id + "," + b.system_id + ")";
  for (const auto& e : na.entries) {
    if (bmap.at(e.utt)->key != e.key) throw Error("fuse: key mismatch for '" + e.utt + "'");
    out.entries.push_back({e.utt, weight * e.score + (1.0 - weight) * bnorm.at(e.utt), e.key});
  }
  return out;
}

}  // namespace tcssd
