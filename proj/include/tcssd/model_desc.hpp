// tcssd/model_desc.hpp

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

#ifndef TCSSD_MODEL_DESC_HPP_
#define TCSSD_MODEL_DESC_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "tcssd/cm_distribution.hpp"
#include "tcssd/cm_temporal.hpp"
#include "tcssd/encoder.hpp"

namespace tcssd {

struct TensorSpec {
  std::string name;
  std::vector<std::int64_t> shape;
  bool trainable = true;

  std::int64_t count() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

enum class LayerKind { kConv, kLinear, kGru };

/// Compute cost of one layer. Per-frame layers run once per frame (plus
/// frame_offset, e.g. -1 for a layer fed frame differences); the others run
/// once per utterance.
struct LayerCost {
  std::string name;
  LayerKind kind = LayerKind::kLinear;
  std::int64_t in = 0, out = 0;
  std::int64_t kernel = 1;
  bool per_frame = true;
  std::int64_t frame_offset = 0;

  std::int64_t MacsPerRun() const;
};

/// Declared tensors and layer costs of a model, independent of any
/// instantiated weights (so full-scale models can be accounted without
/// allocating them).
struct ModelDescription {
  std::vector<TensorSpec> tensors;
  std::vector<LayerCost> layers;

  ModelDescription& Append(const ModelDescription& other);
  ModelDescription& Freeze();
};

/// Trainable scalar count; frozen tensors and statistics buffers excluded.
std::int64_t CountParameters(const ModelDescription& d);

/// FBank frame count for an utterance of the given duration.
std::int64_t FramesForDuration(double seconds);

/// 2 * multiply-accumulates over all conv/linear/recurrent layers.
std::int64_t EstimateFlopsForFrames(const ModelDescription& d, std::int64_t frames);
std::int64_t EstimateFlops(const ModelDescription& d, double seconds);

ModelDescription DescribeLinear(const std::string& name, std::int64_t in, std::int64_t out,
                                bool per_frame = true);
ModelDescription DescribeConv(const std::string& name, std::int64_t in, std::int64_t out,
                              std::int64_t kernel);
ModelDescription DescribeGru(const std::string& name, std::int64_t in, std::int64_t hidden,
                             int n_layers, std::int64_t frame_offset = 0);

ModelDescription DescribeEncoderFrontend(const EncoderConfig& cfg);
/// MFA conv, pooling and projection under the given prefix ("encoder." or
/// "cm2.").
ModelDescription DescribeEncoderTail(const std::string& prefix, std::int64_t input_dim,
                                     std::int64_t mfa_dim, std::int64_t attn_bottleneck,
                                     std::int64_t embed_dim);
ModelDescription DescribeEncoder(const EncoderConfig& cfg);
ModelDescription DescribeCm1(const Cm1Config& cfg);
ModelDescription DescribeCm2(const Cm2Config& cfg);

/// Complete detectors including the frozen encoder parts they run on.
ModelDescription DescribeCm1System(const EncoderConfig& enc, const Cm1Config& cm1);
ModelDescription DescribeCm2System(const EncoderConfig& enc, const Cm2Config& cm2);
ModelDescription DescribeFusionSystem(const EncoderConfig& enc, const Cm1Config& cm1,
                                      const Cm2Config& cm2);

}  // namespace tcssd

#endif  // TCSSD_MODEL_DESC_HPP_
