// tcssd/pipeline.hpp

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

#ifndef TCSSD_PIPELINE_HPP_
#define TCSSD_PIPELINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "tcssd/analysis.hpp"
#include "tcssd/checkpoint.hpp"
#include "tcssd/config.hpp"
#include "tcssd/frontend.hpp"
#include "tcssd/scoring.hpp"
#include "tcssd/training.hpp"

namespace tcssd {

enum class CmKind { kCm1, kCm2, kFrontendToy };

CmKind ParseCmKind(const std::string& name);  // "1", "2", "frontend-toy"
std::string CmName(CmKind kind);              // "cm1", "cm2", "frontend"

struct Example {
  TrialRecord trial;
  FeatureMap features;
};

std::string FeaturePath(const std::string& feature_dir, const std::string& utt);

/// Loads `<feature_dir>/<utt>.fea` for every trial. All maps must share one
/// input kind (FBank or speaker features) and width.
std::vector<Example> LoadExamples(const std::vector<TrialRecord>& trials,
                                  const std::string& feature_dir);

/// Writes simulator output as a protocol plus a feature cache directory.
void WriteSimulation(const std::vector<SimulatedUtterance>& utts, const std::string& out_dir,
                     const std::vector<std::string>& header);

/// Reads `train.*`, `aam.*`, `augment.*` and `crop.*` keys over the defaults.
TrainConfig TrainConfigFrom(const FlatConfig& c, TrainConfig base = {});
EncoderConfig EncoderConfigFrom(const FlatConfig& c, EncoderConfig base);
Cm1Config Cm1ConfigFrom(const FlatConfig& c, Cm1Config base);
Cm2Config Cm2ConfigFrom(const FlatConfig& c, Cm2Config base);
SimConfig SimConfigFrom(const FlatConfig& c, SimConfig base = {});

/// Model sizes used when neither a checkpoint nor the config fixes them.
/// The defaults are toy scale; set e.g. `cm1.hidden = 1536` for the full
/// model.
struct ModelOverrides {
  std::optional<EncoderConfig> encoder;
  std::optional<Cm1Config> cm1;
  std::optional<Cm2Config> cm2;
};

struct TrainRequest {
  CmKind cm = CmKind::kCm1;
  TrainConfig train;
  ModelOverrides models;
  // Checkpoint holding the encoder; its tensors are copied into the output
  // and marked frozen. Required for CM1/CM2 on FBank input.
  std::optional<Checkpoint> init;
  std::string out_dir;  // empty: keep in memory only
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainLogEntry> log;
};

TrainResult TrainCountermeasure(const TrainRequest& req, const std::vector<Example>& examples);

/// Scores every trial with the CM head stored in the checkpoint (full
/// utterances, no cropping). Utterances are processed in chunks of
/// batch_size; the result does not depend on the chunking.
ScoreSet ScoreTrials(CmKind cm, const Checkpoint& ckpt, const std::vector<TrialRecord>& trials,
                     const std::string& feature_dir, int batch_size = 32);

ScoreSet ScoreExamples(CmKind cm, const Checkpoint& ckpt, const std::vector<Example>& examples);

}  // namespace tcssd

#endif  // TCSSD_PIPELINE_HPP_
