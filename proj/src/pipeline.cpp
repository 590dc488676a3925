// src/pipeline.cpp

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

#include "tcssd/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>

namespace tcssd {

namespace fs = std::filesystem;

namespace {

constexpr const char* kInputFbank = "fbank";
constexpr const char* kInputFeatures = "speaker_features";

// Encoder trained as a speaker classifier, for the frontend-toy target.
struct FrontendToyModel {
  using Cache = typename Encoder<float>::Cache;

  Encoder<float> encoder;
  nn::Param<float> classes;

  RowVec<float> Embed(const Mat<float>& x, Cache* c) { return encoder.Embed(x, c); }
  void Backward(const Cache& c, const RowVec<float>& d) { encoder.Backward(c, d); }

  template <typename F>
  void ForEachParam(F&& f) {
    encoder.ForEachParam("encoder.", f);
    f(std::string("speaker.classes"), classes);
  }
};

void RandomRows(nn::Param<float>& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<float>(nd(rng));
}

void CopyPrefix(const Checkpoint& from, const std::string& prefix, bool frozen, Checkpoint& to) {
  for (const auto& t : from.tensors()) {
    if (t.name.rfind(prefix, 0) != 0) continue;
    TensorEntry e = t;
    e.frozen = frozen || t.frozen;
    to.Put(std::move(e));
  }
}

std::string InputKind(const std::vector<Example>& examples) {
  return examples.front().features.is_fbank() ? kInputFbank : kInputFeatures;
}

nlohmann::json TrainJson(const TrainConfig& t) {
  return {{"epochs", t.epochs},       {"batch_size", t.batch_size}, {"base_lr", t.base_lr},
          {"warmup_steps", t.warmup_steps}, {"seed", t.seed},     {"max_steps", t.max_steps},
          {"balanced", t.balanced},   {"augment", t.augment},      {"aam_margin", t.aam.margin},
          {"aam_scale", t.aam.scale}};
}

}  // namespace

CmKind ParseCmKind(const std::string& name) {
  if (name == "1" || name == "cm1") return CmKind::kCm1;
  if (name == "2" || name == "cm2") return CmKind::kCm2;
  if (name == "frontend-toy") return CmKind::kFrontendToy;
  throw Error("unknown countermeasure '" + name + "' (1|2|frontend-toy)");
}

std::string CmName(CmKind kind) {
  switch (kind) {
    case CmKind::kCm1: return "cm1";
    case CmKind::kCm2: return "cm2";
    case CmKind::kFrontendToy: return "frontend";
  }
  return "?";
}

std::string FeaturePath(const std::string& feature_dir, const std::string& utt) {
  return (fs::path(feature_dir) / (utt + ".fea")).string();
}

std::vector<Example> LoadExamples(const std::vector<TrialRecord>& trials,
                                  const std::string& feature_dir) {
  std::vector<Example> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    const std::string path = FeaturePath(feature_dir, t.utt);
    if (!fs::exists(path)) throw Error("no features for utterance '" + t.utt + "' (" + path + ")");
    out.push_back({t, LoadFeatureMap(path)});
    const FeatureMap& f = out.back().features;
    const FeatureMap& first = out.front().features;
    if (f.is_fbank() != first.is_fbank() || f.bins() != first.bins())
      throw Error("features for '" + t.utt + "' differ in kind or width from '" +
                  out.front().trial.utt + "'");
  }
  return out;
}

void WriteSimulation(const std::vector<SimulatedUtterance>& utts, const std::string& out_dir,
                     const std::vector<std::string>& header) {
  const fs::path feat_dir = fs::path(out_dir) / "features";
  fs::create_directories(feat_dir);
  std::ofstream proto(fs::path(out_dir) / "protocol.txt", std::ios::trunc);
  if (!proto) throw Error("cannot write protocol in '" + out_dir + "'");
  for (const auto& h : header) proto << "# " << h << '\n';
  std::vector<TrialRecord> trials;
  for (const auto& u : utts) {
    trials.push_back({u.speaker, u.utt, u.attack, u.key});
    FeatureMap f;
    f.values = u.values;
    f.frame_len = 0;
    f.n_fft = 0;
    SaveFeatureMap(f, FeaturePath(feat_dir.string(), u.utt));
  }
  WriteProtocol(proto, trials);
  if (!proto) throw Error("write failed in '" + out_dir + "'");
}

TrainConfig TrainConfigFrom(const FlatConfig& c, TrainConfig t) {
  t.epochs = static_cast<int>(c.GetInt("train.epochs", t.epochs));
  t.batch_size = static_cast<int>(c.GetInt("train.batch_size", t.batch_size));
  t.base_lr = c.GetDouble("train.base_lr", t.base_lr);
  t.warmup_steps = static_cast<int>(c.GetInt("train.warmup_steps", t.warmup_steps));
  t.beta1 = c.GetDouble("train.beta1", t.beta1);
  t.beta2 = c.GetDouble("train.beta2", t.beta2);
  t.adam_eps = c.GetDouble("train.adam_eps", t.adam_eps);
  t.weight_decay = c.GetDouble("train.weight_decay", t.weight_decay);
  t.max_steps = c.GetInt("train.max_steps", t.max_steps);
  t.balanced = c.GetBool("train.balanced", t.balanced);
  t.augment = c.GetBool("train.augment", t.augment);
  t.seed = c.GetU64("train.seed", t.seed);
  t.aam.margin = c.GetDouble("aam.margin", t.aam.margin);
  t.aam.scale = c.GetDouble("aam.scale", t.aam.scale);
  auto& a = t.augment_policy;
  a.n_freq_masks = static_cast<int>(c.GetInt("augment.n_freq_masks", a.n_freq_masks));
  a.max_freq_width = static_cast<int>(c.GetInt("augment.max_freq_width", a.max_freq_width));
  a.n_time_masks = static_cast<int>(c.GetInt("augment.n_time_masks", a.n_time_masks));
  a.max_time_width = static_cast<int>(c.GetInt("augment.max_time_width", a.max_time_width));
  t.crop.min_dur = c.GetDouble("crop.min_dur", t.crop.min_dur);
  t.crop.max_dur = c.GetDouble("crop.max_dur", t.crop.max_dur);
  t.Validate();
  return t;
}

EncoderConfig EncoderConfigFrom(const FlatConfig& c, EncoderConfig e) {
  e.n_mels = static_cast<int>(c.GetInt("encoder.n_mels", e.n_mels));
  e.channels = static_cast<int>(c.GetInt("encoder.channels", e.channels));
  e.res2_scale = static_cast<int>(c.GetInt("encoder.res2_scale", e.res2_scale));
  e.se_bottleneck = static_cast<int>(c.GetInt("encoder.se_bottleneck", e.se_bottleneck));
  e.mfa_dim = static_cast<int>(c.GetInt("encoder.mfa_dim", e.mfa_dim));
  e.attn_bottleneck = static_cast<int>(c.GetInt("encoder.attn_bottleneck", e.attn_bottleneck));
  e.embed_dim = static_cast<int>(c.GetInt("encoder.embed_dim", e.embed_dim));
  e.Validate();
  return e;
}

Cm1Config Cm1ConfigFrom(const FlatConfig& c, Cm1Config m) {
  m.hidden = static_cast<int>(c.GetInt("cm1.hidden", m.hidden));
  m.n_layers = static_cast<int>(c.GetInt("cm1.n_layers", m.n_layers));
  m.fc1_dim = static_cast<int>(c.GetInt("cm1.fc1_dim", m.fc1_dim));
  m.embed_dim = static_cast<int>(c.GetInt("cm1.embed_dim", m.embed_dim));
  if (m.hidden < 1 || m.n_layers < 1 || m.fc1_dim < 1 || m.embed_dim < 1)
    throw Error("cm1 config: sizes must be positive");
  return m;
}

Cm2Config Cm2ConfigFrom(const FlatConfig& c, Cm2Config m) {
  m.mfa_dim = static_cast<int>(c.GetInt("cm2.mfa_dim", m.mfa_dim));
  m.attn_bottleneck = static_cast<int>(c.GetInt("cm2.attn_bottleneck", m.attn_bottleneck));
  m.embed_dim = static_cast<int>(c.GetInt("cm2.embed_dim", m.embed_dim));
  if (m.mfa_dim < 1 || m.attn_bottleneck < 1 || m.embed_dim < 1)
    throw Error("cm2 config: sizes must be positive");
  return m;
}

SimConfig SimConfigFrom(const FlatConfig& c, SimConfig s) {
  s.dim = static_cast<int>(c.GetInt("sim.dim", s.dim));
  s.n_frames = static_cast<int>(c.GetInt("sim.n_frames", s.n_frames));
  s.drift_sigma = c.GetDouble("sim.drift_sigma", s.drift_sigma);
  s.noise_sigma = c.GetDouble("sim.noise_sigma", s.noise_sigma);
  s.base_scale = c.GetDouble("sim.base_scale", s.base_scale);
  s.Validate();
  return s;
}

TrainResult TrainCountermeasure(const TrainRequest& req, const std::vector<Example>& examples) {
  if (examples.empty()) throw Error("train: empty manifest");
  const TrainConfig& cfg = req.train;
  cfg.Validate();
  const std::string input_kind = InputKind(examples);
  const bool fbank = input_kind == kInputFbank;
  const int width = static_cast<int>(examples.front().features.bins());

  std::optional<Encoder<float>> encoder;
  if (req.init && req.init->config.contains("encoder")) encoder = LoadEncoder<float>(*req.init);
  if (fbank && req.cm != CmKind::kFrontendToy && !encoder)
    throw Error("train: FBank input needs --ckpt with a trained encoder");

  TrainResult result;
  Checkpoint& out = result.checkpoint;
  out.config["input"] = input_kind;
  out.config["train"] = TrainJson(cfg);

  std::ofstream log_file;
  if (!req.out_dir.empty()) {
    fs::create_directories(req.out_dir);
    log_file.open(fs::path(req.out_dir) / "train.log", std::ios::trunc);
    if (!log_file) throw Error("cannot write train.log in '" + req.out_dir + "'");
    log_file << std::setprecision(8);
  }
  TrainHooks hooks;
  hooks.on_step = [&](const TrainLogEntry& e) {
    if (log_file.is_open()) log_file << e.step << '\t' << e.lr << '\t' << e.loss << '\n';
  };

  // Crop first, then augment FBank inputs. Speaker-feature maps are cropped
  // only.
  auto cropped = [&](std::size_t i, std::uint64_t seed) {
    FeatureMap f = RandomCrop(examples[i].features, cfg.crop, seed);
    if (fbank && cfg.augment) f = SpecAugment(f, cfg.augment_policy, seed ^ 0xa5a5a5a5ULL);
    return Mat<float>(f.values.cast<float>());
  };

  if (req.cm == CmKind::kFrontendToy) {
    if (!fbank) throw Error("train: frontend-toy needs FBank features");
    std::map<std::string, int> speakers;
    std::vector<std::size_t> chosen;
    std::vector<int> labels;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (examples[i].trial.key != Key::kBonafide) continue;
      const auto [it, added] =
          speakers.emplace(examples[i].trial.speaker, static_cast<int>(speakers.size()));
      chosen.push_back(i);
      labels.push_back(it->second);
    }
    if (speakers.size() < 2) throw Error("train: frontend-toy needs at least 2 bonafide speakers");
    EncoderConfig ec = encoder ? encoder->config()
                               : req.models.encoder.value_or(EncoderConfig::Toy());
    if (!encoder) ec.n_mels = width;
    FrontendToyModel model{Encoder<float>(ec), {}};
    if (encoder) model.encoder = *encoder;
    else model.encoder.Init(cfg.seed);
    model.classes.Reset(static_cast<Eigen::Index>(speakers.size()), ec.embed_dim);
    RandomRows(model.classes, cfg.seed + 1);
    std::vector<Mat<float>> calib;
    for (std::size_t i : chosen) calib.push_back(examples[i].features.values.cast<float>());
    model.encoder.CalibrateNorms(calib);

    auto save = [&] {
      out.config["encoder"] = ec;
      model.encoder.ForEachParam("encoder.", ParamExporter<float>{&out, false});
      ParamExporter<float>{&out, false}("speaker.classes", model.classes);
      if (!req.out_dir.empty()) out.Save(req.out_dir);
    };
    hooks.on_epoch = [&](int) { save(); };
    result.log = TrainModel<float>(
        model, labels, TrainConfig{[&] {
          TrainConfig t = cfg;
          t.balanced = false;  // speaker classes, not bonafide/spoof
          return t;
        }()},
        [&](std::size_t j, std::uint64_t seed) { return cropped(chosen[j], seed); }, hooks);
    save();
    return result;
  }

  std::vector<int> labels;
  bool has[2] = {false, false};
  for (const auto& e : examples) {
    labels.push_back(static_cast<int>(e.trial.key));
    has[labels.back()] = true;
  }
  if (!has[0] || !has[1]) throw Error("train: manifest holds a single class");

  if (encoder) {
    out.config["encoder"] = encoder->config();
    CopyPrefix(*req.init, "encoder.", true, out);
  }

  if (req.cm == CmKind::kCm1) {
    const int in_dim = fbank ? encoder->config().mfa_dim : width;
    Cm1Config mc = req.models.cm1.value_or(Cm1Config::Toy(in_dim));
    mc.input_dim = in_dim;
    Cm1Model<float> model(mc);
    model.Init(cfg.seed);
    auto save = [&] {
      out.config["cm1"] = mc;
      model.ForEachParam(ParamExporter<float>{&out, false});
      if (!req.out_dir.empty()) out.Save(req.out_dir);
    };
    hooks.on_epoch = [&](int) { save(); };
    result.log = TrainModel<float>(
        model, labels, cfg,
        [&](std::size_t i, std::uint64_t seed) {
          Mat<float> x = cropped(i, seed);
          return fbank ? encoder->EncodeFeatures(x) : x;
        },
        hooks);
    save();
    return result;
  }

  // CM2
  const int in_dim = fbank ? encoder->config().concat_dim() : width;
  Cm2Config mc = req.models.cm2.value_or(encoder && fbank ? Cm2Config::FromEncoder(encoder->config())
                                                          : Cm2Config::Toy(in_dim));
  mc.input_dim = in_dim;
  Cm2Model<float> model(mc);
  model.Init(cfg.seed);
  if (encoder && fbank && Cm2Config::FromEncoder(encoder->config()).mfa_dim == mc.mfa_dim &&
      encoder->config().attn_bottleneck == mc.attn_bottleneck &&
      encoder->config().embed_dim == mc.embed_dim)
    model.InitFromEncoder(*encoder);
  auto save = [&] {
    out.config["cm2"] = mc;
    model.ForEachParam(ParamExporter<float>{&out, false});
    if (!req.out_dir.empty()) out.Save(req.out_dir);
  };
  hooks.on_epoch = [&](int) { save(); };
  result.log = TrainModel<float>(
      model, labels, cfg,
      [&](std::size_t i, std::uint64_t seed) {
        Mat<float> x = cropped(i, seed);
        return fbank ? encoder->Frontend(x) : x;
      },
      hooks);
  save();
  return result;
}

ScoreSet ScoreExamples(CmKind cm, const Checkpoint& ckpt, const std::vector<Example>& examples) {
  if (cm == CmKind::kFrontendToy) throw Error("score: choose --cm 1 or --cm 2");
  const std::string name = CmName(cm);
  if (!ckpt.config.contains(name)) throw Error("score: checkpoint has no " + name + " head");
  const std::string input = ckpt.config.value("input", std::string(kInputFeatures));
  std::optional<Encoder<float>> encoder;
  if (input == kInputFbank) encoder = LoadEncoder<float>(ckpt);

  std::optional<Cm1Model<float>> m1;
  std::optional<Cm2Model<float>> m2;
  if (cm == CmKind::kCm1) m1 = LoadCm1<float>(ckpt);
  else m2 = LoadCm2<float>(ckpt);

  ScoreSet out;
  out.system_id = name;
  for (const auto& ex : examples) {
    if ((input == kInputFbank) != ex.features.is_fbank())
      throw Error("score: '" + ex.trial.utt + "' has the wrong feature kind for this checkpoint");
    const Mat<float> x = ex.features.values.cast<float>();
    float s = 0;
    if (m1) s = m1->Score(encoder ? encoder->EncodeFeatures(x) : x);
    else s = m2->Score(encoder ? encoder->Frontend(x) : x);
    out.entries.push_back({ex.trial.utt, static_cast<double>(s), ex.trial.key});
  }
  return out;
}

ScoreSet ScoreTrials(CmKind cm, const Checkpoint& ckpt, const std::vector<TrialRecord>& trials,
                     const std::string& feature_dir, int batch_size) {
  if (batch_size < 1) throw Error("score: batch size must be positive");
  ScoreSet out;
  out.system_id = CmName(cm);
  for (std::size_t b = 0; b < trials.size(); b += static_cast<std::size_t>(batch_size)) {
    const auto e = std::min(trials.size(), b + static_cast<std::size_t>(batch_size));
    const std::vector<TrialRecord> chunk(trials.begin() + static_cast<std::ptrdiff_t>(b),
                                         trials.begin() + static_cast<std::ptrdiff_t>(e));
    const ScoreSet part = ScoreExamples(cm, ckpt, LoadExamples(chunk, feature_dir));
    out.entries.insert(out.entries.end(), part.entries.begin(), part.entries.end());
  }
  return out;
}

}  // namespace tcssd
