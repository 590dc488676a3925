// tcssd/checkpoint.hpp

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

#ifndef TCSSD_CHECKPOINT_HPP_
#define TCSSD_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcssd/cm_distribution.hpp"
#include "tcssd/cm_temporal.hpp"
#include "tcssd/encoder.hpp"

namespace tcssd {

struct TensorEntry {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;
  bool frozen = false;

  std::int64_t count() const;
};

/// Named float32 tensors plus a JSON config. On disk a checkpoint is a
/// directory holding manifest.json (format tag, version, config, and for
/// each tensor its name, shape, byte offset and frozen flag) and
/// weights.bin (the tensors packed as little-endian float32 in manifest
/// order).
class Checkpoint {
 public:
  static constexpr int kVersion = 1;

  nlohmann::json config = nlohmann::json::object();

  const std::vector<TensorEntry>& tensors() const { return tensors_; }
  const TensorEntry* Find(const std::string& name) const;
  bool HasPrefix(const std::string& prefix) const;
  std::vector<std::string> FrozenNames() const;

  /// Inserts or replaces a tensor.
  void Put(TensorEntry entry);

  void Save(const std::string& dir) const;
  static Checkpoint Load(const std::string& dir);

 private:
  std::vector<TensorEntry> tensors_;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const Cm1Config& c);
void from_json(const nlohmann::json& j, Cm1Config& c);
void to_json(nlohmann::json& j, const Cm2Config& c);
void from_json(const nlohmann::json& j, Cm2Config& c);

/// Visitor that copies parameters into a checkpoint. Statistics buffers are
/// always written as frozen.
template <typename S>
struct ParamExporter {
  Checkpoint* ckpt;
  bool frozen;

  void operator()(const std::string& name, nn::Param<S>& p) const {
    TensorEntry e;
    e.name = name;
    e.shape = {p.value.rows(), p.value.cols()};
    e.data.resize(static_cast<std::size_t>(p.value.size()));
    for (Eigen::Index i = 0; i < p.value.size(); ++i)
      e.data[static_cast<std::size_t>(i)] = static_cast<float>(p.value.data()[i]);
    e.frozen = frozen || !p.trainable;
    ckpt->Put(std::move(e));
  }
};

/// Visitor that loads parameters from a checkpoint, checking shapes.
template <typename S>
struct ParamImporter {
  const Checkpoint* ckpt;

  void operator()(const std::string& name, nn::Param<S>& p) const {
    const TensorEntry* e = ckpt->Find(name);
    if (!e) throw Error("checkpoint: missing tensor '" + name + "'");
    if (e->shape.size() != 2 || e->shape[0] != p.value.rows() || e->shape[1] != p.value.cols())
      throw Error("checkpoint: shape mismatch for '" + name + "'");
    for (Eigen::Index i = 0; i < p.value.size(); ++i)
      p.value.data()[i] = static_cast<S>(e->data[static_cast<std::size_t>(i)]);
  }
};

/// Rebuilds models from a checkpoint; the matching config section must be
/// present.
template <typename S>
Encoder<S> LoadEncoder(const Checkpoint& ckpt) {
  if (!ckpt.config.contains("encoder")) throw Error("checkpoint: no encoder config");
  Encoder<S> enc(ckpt.config.at("encoder").get<EncoderConfig>());
  enc.ForEachParam("encoder.", ParamImporter<S>{&ckpt});
  return enc;
}

template <typename S>
Cm1Model<S> LoadCm1(const Checkpoint& ckpt) {
  if (!ckpt.config.contains("cm1")) throw Error("checkpoint: no cm1 config");
  Cm1Model<S> m(ckpt.config.at("cm1").get<Cm1Config>());
  m.ForEachParam(ParamImporter<S>{&ckpt});
  return m;
}

template <typename S>
Cm2Model<S> LoadCm2(const Checkpoint& ckpt) {
  if (!ckpt.config.contains("cm2")) throw Error("checkpoint: no cm2 config");
  Cm2Model<S> m(ckpt.config.at("cm2").get<Cm2Config>());
  m.ForEachParam(ParamImporter<S>{&ckpt});
  return m;
}

}  // namespace tcssd

#endif  // TCSSD_CHECKPOINT_HPP_
