// src/model_desc.cpp

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

#include "tcssd/model_desc.hpp"

#include <cmath>

namespace tcssd {

namespace {

void AddNorm(ModelDescription& d, const std::string& prefix, std::int64_t c) {
  d.tensors.push_back({prefix + "gamma", {c, 1}, true});
  d.tensors.push_back({prefix + "beta", {c, 1}, true});
  d.tensors.push_back({prefix + "mean", {c, 1}, false});
  d.tensors.push_back({prefix + "var", {c, 1}, false});
}

void AddConvUnit(ModelDescription& d, const std::string& prefix, std::int64_t in,
                 std::int64_t out, std::int64_t kernel) {
  d.Append(DescribeConv(prefix + "conv.", in, out, kernel));
  AddNorm(d, prefix + "norm.", out);
}

}  // namespace

std::int64_t LayerCost::MacsPerRun() const {
  switch (kind) {
    case LayerKind::kConv:
      return in * out * kernel;
    case LayerKind::kLinear:
      return in * out;
    case LayerKind::kGru:
      return 3 * (in * out + out * out);
  }
  return 0;
}

ModelDescription& ModelDescription::Append(const ModelDescription& other) {
  tensors.insert(tensors.end(), other.tensors.begin(), other.tensors.end());
  layers.insert(layers.end(), other.layers.begin(), other.layers.end());
  return *this;
}

ModelDescription& ModelDescription::Freeze() {
  for (auto& t : tensors) t.trainable = false;
  return *this;
}

std::int64_t CountParameters(const ModelDescription& d) {
  std::int64_t n = 0;
  for (const auto& t : d.tensors)
    if (t.trainable) n += t.count();
  return n;
}

std::int64_t FramesForDuration(double seconds) {
  const auto n = static_cast<std::int64_t>(std::llround(seconds * kSampleRate));
  return n < 400 ? 0 : (n - 400) / kFbankHop + 1;
}

std::int64_t EstimateFlopsForFrames(const ModelDescription& d, std::int64_t frames) {
  if (frames <= 0) return 0;
  std::int64_t macs = 0;
  for (const auto& l : d.layers) {
    const std::int64_t runs = l.per_frame ? std::max<std::int64_t>(0, frames + l.frame_offset) : 1;
    macs += l.MacsPerRun() * runs;
  }
  return 2 * macs;
}

std::int64_t EstimateFlops(const ModelDescription& d, double seconds) {
  return EstimateFlopsForFrames(d, FramesForDuration(seconds));
}

ModelDescription DescribeLinear(const std::string& name, std::int64_t in, std::int64_t out,
                                bool per_frame) {
  ModelDescription d;
  d.tensors.push_back({name + "weight", {out, in}, true});
  d.tensors.push_back({name + "bias", {out, 1}, true});
  d.layers.push_back({name, LayerKind::kLinear, in, out, 1, per_frame, 0});
  return d;
}

ModelDescription DescribeConv(const std::string& name, std::int64_t in, std::int64_t out,
                              std::int64_t kernel) {
  ModelDescription d;
  d.tensors.push_back({name + "weight", {out, in * kernel}, true});
  d.tensors.push_back({name + "bias", {out, 1}, true});
  d.layers.push_back({name, LayerKind::kConv, in, out, kernel, true, 0});
  return d;
}

ModelDescription DescribeGru(const std::string& name, std::int64_t in, std::int64_t hidden,
                             int n_layers, std::int64_t frame_offset) {
  ModelDescription d;
  for (int i = 0; i < n_layers; ++i) {
    const std::string p = name + "l" + std::to_string(i) + ".";
    const std::int64_t width = i == 0 ? in : hidden;
    d.tensors.push_back({p + "w_ih", {3 * hidden, width}, true});
    d.tensors.push_back({p + "w_hh", {3 * hidden, hidden}, true});
    d.tensors.push_back({p + "b_ih", {3 * hidden, 1}, true});
    d.tensors.push_back({p + "b_hh", {3 * hidden, 1}, true});
    d.layers.push_back({p, LayerKind::kGru, width, hidden, 1, true, frame_offset});
  }
  return d;
}

ModelDescription DescribeEncoderFrontend(const EncoderConfig& cfg) {
  cfg.Validate();
  ModelDescription d;
  const std::int64_t c = cfg.channels, w = c / cfg.res2_scale;
  AddConvUnit(d, "encoder.stem.", cfg.n_mels, c, 5);
  for (int b = 0; b < cfg.n_blocks(); ++b) {
    const std::string p = "encoder.block" + std::to_string(b) + ".";
    AddConvUnit(d, p + "in.", c, c, 1);
    for (int g = 0; g + 1 < cfg.res2_scale; ++g)
      AddConvUnit(d, p + "res2." + std::to_string(g) + ".", w, w, 3);
    AddConvUnit(d, p + "out.", c, c, 1);
    d.Append(DescribeLinear(p + "se.fc1.", c, cfg.se_bottleneck, false));
    d.Append(DescribeLinear(p + "se.fc2.", cfg.se_bottleneck, c, false));
  }
  return d;
}

ModelDescription DescribeEncoderTail(const std::string& prefix, std::int64_t input_dim,
                                     std::int64_t mfa_dim, std::int64_t attn_bottleneck,
                                     std::int64_t embed_dim) {
  ModelDescription d;
  d.Append(DescribeConv(prefix + "mfa.", input_dim, mfa_dim, 1));
  d.Append(DescribeLinear(prefix + "pool.att1.", mfa_dim, attn_bottleneck));
  d.Append(DescribeLinear(prefix + "pool.att2.", attn_bottleneck, mfa_dim));
  d.Append(DescribeLinear(prefix + "proj.", 2 * mfa_dim, embed_dim, false));
  return d;
}

ModelDescription DescribeEncoder(const EncoderConfig& cfg) {
  ModelDescription d = DescribeEncoderFrontend(cfg);
  d.Append(DescribeEncoderTail("encoder.", cfg.concat_dim(), cfg.mfa_dim, cfg.attn_bottleneck,
                               cfg.embed_dim));
  return d;
}

ModelDescription DescribeCm1(const Cm1Config& cfg) {
  ModelDescription d = DescribeGru("cm1.gru.", cfg.input_dim, cfg.hidden, cfg.n_layers, -1);
  d.Append(DescribeLinear("cm1.fc1.", cfg.hidden, cfg.fc1_dim, false));
  d.Append(DescribeLinear("cm1.fc2.", cfg.fc1_dim, cfg.embed_dim, false));
  d.tensors.push_back({"cm1.classes", {2, cfg.embed_dim}, true});
  d.layers.push_back({"cm1.classes", LayerKind::kLinear, cfg.embed_dim, 2, 1, false, 0});
  return d;
}

ModelDescription DescribeCm2(const Cm2Config& cfg) {
  ModelDescription d = DescribeEncoderTail("cm2.", cfg.input_dim, cfg.mfa_dim,
                                           cfg.attn_bottleneck, cfg.embed_dim);
  d.tensors.push_back({"cm2.classes", {2, cfg.embed_dim}, true});
  d.layers.push_back({"cm2.classes", LayerKind::kLinear, cfg.embed_dim, 2, 1, false, 0});
  return d;
}

ModelDescription DescribeCm1System(const EncoderConfig& enc, const Cm1Config& cm1) {
  ModelDescription d = DescribeEncoderFrontend(enc);
  d.Append(DescribeConv("encoder.mfa.", enc.concat_dim(), enc.mfa_dim, 1));
  d.Freeze();
  return d.Append(DescribeCm1(cm1));
}

ModelDescription DescribeCm2System(const EncoderConfig& enc, const Cm2Config& cm2) {
  ModelDescription d = DescribeEncoderFrontend(enc);
  d.Freeze();
  return d.Append(DescribeCm2(cm2));
}

ModelDescription DescribeFusionSystem(const EncoderConfig& enc, const Cm1Config& cm1,
                                      const Cm2Config& cm2) {
  ModelDescription d = DescribeCm1System(enc, cm1);
  return d.Append(DescribeCm2(cm2));
}

}  // namespace tcssd
