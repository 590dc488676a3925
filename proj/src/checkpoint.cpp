// src/checkpoint.cpp

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

#include "tcssd/checkpoint.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>

#include "byteio.hpp"

namespace tcssd {

namespace fs = std::filesystem;
using nlohmann::json;

std::int64_t TensorEntry::count() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const TensorEntry* Checkpoint::Find(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return &t;
  return nullptr;
}

bool Checkpoint::HasPrefix(const std::string& prefix) const {
  return std::any_of(tensors_.begin(), tensors_.end(),
                     [&](const TensorEntry& t) { return t.name.rfind(prefix, 0) == 0; });
}

std::vector<std::string> Checkpoint::FrozenNames() const {
  std::vector<std::string> out;
  for (const auto& t : tensors_)
    if (t.frozen) out.push_back(t.name);
  return out;
}

void Checkpoint::Put(TensorEntry entry) {
  if (entry.count() != static_cast<std::int64_t>(entry.data.size()))
    throw Error("checkpoint: tensor '" + entry.name + "' shape does not match data");
  for (auto& t : tensors_) {
    if (t.name == entry.name) {
      t = std::move(entry);
      return;
    }
  }
  tensors_.push_back(std::move(entry));
}

void Checkpoint::Save(const std::string& dir) const {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "tcssd-checkpoint";
  manifest["version"] = kVersion;
  manifest["config"] = config;
  json list = json::array();
  std::int64_t offset = 0;
  for (const auto& t : tensors_) {
    list.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"frozen", t.frozen}});
    offset += t.count() * 4;
  }
  manifest["tensors"] = std::move(list);

  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
  mf << manifest.dump(2) << '\n';
  std::ofstream wf(fs::path(dir) / "weights.bin", std::ios::binary | std::ios::trunc);
  for (const auto& t : tensors_)
    for (float v : t.data) io::PutF32(wf, v);
  if (!mf || !wf) throw Error("checkpoint: write failed in '" + dir + "'");
}

Checkpoint Checkpoint::Load(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw Error("checkpoint: cannot open '" + (fs::path(dir) / "manifest.json").string() + "'");
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: corrupt manifest: ") + e.what());
  }

  std::ifstream wf(fs::path(dir) / "weights.bin", std::ios::binary);
  if (!wf) throw Error("checkpoint: cannot open weights.bin in '" + dir + "'");
  const std::vector<unsigned char> blob{std::istreambuf_iterator<char>(wf),
                                        std::istreambuf_iterator<char>()};

  Checkpoint ck;
  try {
    if (manifest.at("format").get<std::string>() != "tcssd-checkpoint")
      throw Error("checkpoint: unknown format tag");
    const int version = manifest.at("version").get<int>();
    if (version != kVersion)
      throw Error("checkpoint: version mismatch (file " + std::to_string(version) +
                  ", expected " + std::to_string(kVersion) + ")");
    ck.config = manifest.at("config");
    std::int64_t expected_end = 0;
    for (const auto& item : manifest.at("tensors")) {
      TensorEntry t;
      t.name = item.at("name").get<std::string>();
      t.shape = item.at("shape").get<std::vector<std::int64_t>>();
      t.frozen = item.at("frozen").get<bool>();
      const auto offset = item.at("offset").get<std::int64_t>();
      std::int64_t count = 1;
      for (auto d : t.shape) {
        if (d < 0 || (d > 0 && count > std::numeric_limits<std::int64_t>::max() / 8 / d))
          throw Error("checkpoint: shape overflow for tensor '" + t.name + "'");
        count *= d;
      }
      if (offset < 0 || offset > static_cast<std::int64_t>(blob.size()) ||
          count * 4 > static_cast<std::int64_t>(blob.size()) - offset)
        throw Error("checkpoint: truncated blob, cannot read tensor '" + t.name + "'");
      t.data.resize(static_cast<std::size_t>(count));
      for (std::int64_t i = 0; i < count; ++i)
        t.data[static_cast<std::size_t>(i)] = io::ReadF32(blob.data() + offset + 4 * i);
      expected_end = std::max(expected_end, offset + 4 * count);
      ck.Put(std::move(t));
    }
    if (expected_end != static_cast<std::int64_t>(blob.size()))
      throw Error("checkpoint: manifest describes " + std::to_string(expected_end) +
                  " bytes but weights.bin holds " + std::to_string(blob.size()));
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: corrupt manifest: ") + e.what());
  }
  return ck;
}

void to_json(json& j, const EncoderConfig& c) {
  j = {{"n_mels", c.n_mels},         {"channels", c.channels},
       {"dilations", c.dilations},   {"res2_scale", c.res2_scale},
       {"se_bottleneck", c.se_bottleneck}, {"mfa_dim", c.mfa_dim},
       {"attn_bottleneck", c.attn_bottleneck}, {"embed_dim", c.embed_dim}};
}

void from_json(const json& j, EncoderConfig& c) {
  j.at("n_mels").get_to(c.n_mels);
  j.at("channels").get_to(c.channels);
  j.at("dilations").get_to(c.dilations);
  j.at("res2_scale").get_to(c.res2_scale);
  j.at("se_bottleneck").get_to(c.se_bottleneck);
  j.at("mfa_dim").get_to(c.mfa_dim);
  j.at("attn_bottleneck").get_to(c.attn_bottleneck);
  j.at("embed_dim").get_to(c.embed_dim);
}

void to_json(json& j, const Cm1Config& c) {
  j = {{"input_dim", c.input_dim}, {"hidden", c.hidden},       {"n_layers", c.n_layers},
       {"fc1_dim", c.fc1_dim},     {"embed_dim", c.embed_dim}};
}

void from_json(const json& j, Cm1Config& c) {
  j.at("input_dim").get_to(c.input_dim);
  j.at("hidden").get_to(c.hidden);
  j.at("n_layers").get_to(c.n_layers);
  j.at("fc1_dim").get_to(c.fc1_dim);
  j.at("embed_dim").get_to(c.embed_dim);
}

void to_json(json& j, const Cm2Config& c) {
  j = {{"input_dim", c.input_dim},
       {"mfa_dim", c.mfa_dim},
       {"attn_bottleneck", c.attn_bottleneck},
       {"embed_dim", c.embed_dim}};
}

void from_json(const json& j, Cm2Config& c) {
  j.at("input_dim").get_to(c.input_dim);
  j.at("mfa_dim").get_to(c.mfa_dim);
  j.at("attn_bottleneck").get_to(c.attn_bottleneck);
  j.at("embed_dim").get_to(c.embed_dim);
}

}  // namespace tcssd
