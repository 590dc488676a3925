// src/cli.cpp

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

#include "tcssd/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "tcssd/model_desc.hpp"
#include "tcssd/pipeline.hpp"

namespace tcssd {

namespace fs = std::filesystem;

namespace {

// Missing or conflicting arguments that the parser cannot express.
struct UsageError : Error {
  using Error::Error;
};

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string ckpt;
  std::string out;
  std::string device = "cpu";
};

// Effective configuration: the --config file with command-line values laid
// over it. Its hash and the seed go into every provenance header.
struct RunContext {
  std::string command;
  FlatConfig cfg;
  std::uint64_t seed = 0;

  std::vector<std::string> Header() const {
    return {"tcssd " + std::string(kVersion) + " seed=" + std::to_string(seed) +
                " config=" + cfg.HashHex(),
            "command: " + command};
  }
};

// Shortest text that reads back to the same double.
std::string ToText(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

RunContext MakeContext(const std::string& command, const CommonFlags& c,
                       const std::vector<std::pair<std::string, std::string>>& overrides,
                       std::ostream& err) {
  RunContext ctx;
  ctx.command = command;
  if (!c.config.empty()) ctx.cfg = FlatConfig::Load(c.config);
  for (const auto& [k, v] : overrides) ctx.cfg.Set(k, v);
  if (c.seed) ctx.cfg.Set("seed", std::to_string(*c.seed));
  ctx.seed = ctx.cfg.GetU64("seed", 0);
  if (c.device != "cpu") err << "warning: device '" << c.device << "' unavailable, using cpu\n";
  return ctx;
}

std::ofstream OpenOut(const std::string& path) {
  if (path.empty()) throw UsageError("--out is required");
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write '" + path + "'");
  return f;
}

void WriteHeader(std::ostream& out, const RunContext& ctx) {
  for (const auto& h : ctx.Header()) out << "# " << h << '\n';
}

std::string Fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string Millions(std::int64_t n) { return Fixed(static_cast<double>(n) / 1e6, 2) + " M"; }
std::string Giga(std::int64_t n) { return Fixed(static_cast<double>(n) / 1e9, 2) + " G"; }

// ---------------------------------------------------------------------------

int RunExtract(const CommonFlags& c, const std::vector<std::string>& files,
               const std::string& protocol, const std::string& wav_dir, bool trim, double top_db,
               std::ostream& out, std::ostream& err) {
  RunContext ctx = MakeContext("extract", c,
                               {{"extract.trim", trim ? "true" : "false"},
                                {"extract.top_db", ToText(top_db)}},
                               err);
  TrimOptions topts;
  topts.top_db = ctx.cfg.GetDouble("extract.top_db", top_db);
  const bool do_trim = ctx.cfg.GetBool("extract.trim", trim);
  auto convert = [&](const std::string& in, const std::string& dst) {
    Waveform w = LoadWaveform(in);
    if (do_trim) w = TrimSilence(w, topts);
    if (w.size() < 400) throw Error("'" + in + "' is shorter than one analysis frame");
    SaveFeatureMap(ComputeFbank(w), dst);
  };
  if (!files.empty()) {
    if (files.size() != 2 || !protocol.empty()) throw UsageError("extract: give IN.wav OUT.fea or --protocol");
    convert(files[0], files[1]);
    return 0;
  }
  if (protocol.empty() || wav_dir.empty() || c.out.empty())
    throw UsageError("extract: need --protocol, --wav-dir and --out (or IN.wav OUT.fea)");
  fs::create_directories(c.out);
  const auto trials = LoadProtocol(protocol);
  for (const auto& t : trials) {
    const std::string wav = (fs::path(wav_dir) / (t.utt + ".wav")).string();
    if (!fs::exists(wav)) throw Error("no audio for utterance '" + t.utt + "' (" + wav + ")");
    convert(wav, FeaturePath(c.out, t.utt));
  }
  std::ofstream prov = OpenOut((fs::path(c.out) / "provenance.txt").string());
  WriteHeader(prov, ctx);
  prov << "utterances: " << trials.size() << '\n';
  out << "extracted " << trials.size() << " utterances\n";
  return 0;
}

int RunTrim(const CommonFlags& c, const std::string& in, const std::string& dst, double top_db,
            std::ostream& out, std::ostream& err) {
  RunContext ctx = MakeContext("trim", c, {{"trim.top_db", ToText(top_db)}}, err);
  TrimOptions opts;
  opts.top_db = ctx.cfg.GetDouble("trim.top_db", top_db);
  const Waveform w = LoadWaveform(in);
  const Waveform t = TrimSilence(w, opts);
  if (t.empty()) throw Error("empty after trim: '" + in + "' has no frame within " +
                             ToText(opts.top_db) + " dB of its peak");
  SaveWaveform(t, dst);
  const auto [b, e] = TrimBounds(w, opts);
  out << "kept samples [" << b << ", " << e << ") of " << w.size() << '\n';
  return 0;
}

int RunTrain(const CommonFlags& c, const std::string& cm, const std::string& protocol,
             const std::string& features, const std::vector<std::pair<std::string, std::string>>& ov,
             std::ostream& out, std::ostream& err) {
  if (c.out.empty()) throw UsageError("train: --out <checkpoint dir> is required");
  RunContext ctx = MakeContext("train --cm " + cm, c, ov, err);
  TrainRequest req;
  req.cm = ParseCmKind(cm);
  TrainConfig base;
  base.seed = ctx.seed;
  req.train = TrainConfigFrom(ctx.cfg, base);
  req.train.seed = ctx.seed;
  if (!c.ckpt.empty()) req.init = Checkpoint::Load(c.ckpt);
  req.out_dir = c.out;

  const auto examples = LoadExamples(LoadProtocol(protocol), features);
  const int width = static_cast<int>(examples.front().features.bins());
  if (req.cm == CmKind::kFrontendToy) {
    EncoderConfig e = EncoderConfig::Toy();
    e.n_mels = width;
    req.models.encoder = EncoderConfigFrom(ctx.cfg, e);
  } else {
    int in_dim = width;
    if (req.init && req.init->config.contains("encoder") && examples.front().features.is_fbank())
      in_dim = req.init->config.at("encoder").get<EncoderConfig>().mfa_dim;
    if (req.cm == CmKind::kCm1) req.models.cm1 = Cm1ConfigFrom(ctx.cfg, Cm1Config::Toy(in_dim));
    if (req.cm == CmKind::kCm2 &&
        std::any_of(ctx.cfg.values().begin(), ctx.cfg.values().end(),
                    [](const auto& kv) { return kv.first.rfind("cm2.", 0) == 0; }))
      req.models.cm2 = Cm2ConfigFrom(ctx.cfg, Cm2Config::Toy(in_dim));
  }

  TrainResult r = TrainCountermeasure(req, examples);
  r.checkpoint.config["provenance"] = ctx.Header();
  r.checkpoint.Save(c.out);
  // Prepend the provenance header to the step log.
  const fs::path log_path = fs::path(c.out) / "train.log";
  std::stringstream body;
  body << std::ifstream(log_path).rdbuf();
  std::ofstream log = OpenOut(log_path.string());
  WriteHeader(log, ctx);
  log << body.str();
  out << "trained " << CmName(req.cm) << " for " << r.log.size() << " steps, final loss "
      << Fixed(r.log.back().loss, 6) << '\n';
  return 0;
}

int RunScore(const CommonFlags& c, const std::string& cm, const std::string& protocol,
             const std::string& features, int batch, std::ostream& out, std::ostream& err) {
  if (c.ckpt.empty()) throw UsageError("score: --ckpt is required");
  RunContext ctx = MakeContext("score --cm " + cm, c, {}, err);
  const Checkpoint ckpt = Checkpoint::Load(c.ckpt);
  const auto trials = LoadProtocol(protocol);
  const ScoreSet s = ScoreTrials(ParseCmKind(cm), ckpt, trials, features, batch);
  if (c.out.empty()) throw UsageError("score: --out is required");
  OpenOut(c.out).close();
  WriteScoreFile(c.out, s, ctx.Header());
  out << "scored " << s.entries.size() << " trials\n";
  return 0;
}

ScoreSet ReadScores(const std::string& path, const std::vector<TrialRecord>* protocol) {
  const auto raw = ReadScoreFile(path);
  if (protocol) return AttachKeys(raw, *protocol, fs::path(path).stem().string());
  ScoreSet s;
  s.system_id = fs::path(path).stem().string();
  for (const auto& [u, v] : raw) s.entries.push_back({u, v, Key::kBonafide});
  return s;
}

int RunFuse(const CommonFlags& c, const std::vector<std::string>& inputs,
            const std::string& protocol, double weight, const std::string& norm,
            std::ostream& out, std::ostream& err) {
  RunContext ctx = MakeContext("fuse", c, {{"fuse.weight", ToText(weight)}, {"fuse.norm", norm}},
                               err);
  std::optional<std::vector<TrialRecord>> trials;
  if (!protocol.empty()) trials = LoadProtocol(protocol);
  const ScoreSet a = ReadScores(inputs[0], trials ? &*trials : nullptr);
  const ScoreSet b = ReadScores(inputs[1], trials ? &*trials : nullptr);
  const ScoreSet f = FuseScores(a, b, ctx.cfg.GetDouble("fuse.weight", weight),
                                ParseFusionNorm(ctx.cfg.GetString("fuse.norm", norm)));
  if (c.out.empty()) throw UsageError("fuse: --out is required");
  OpenOut(c.out).close();
  WriteScoreFile(c.out, f, ctx.Header());
  out << "fused " << f.entries.size() << " trials\n";
  return 0;
}

int RunEvaluate(const CommonFlags& c, const std::string& scores, const std::string& protocol,
                std::ostream& out, std::ostream& err) {
  RunContext ctx = MakeContext("evaluate", c, {}, err);
  const auto trials = LoadProtocol(protocol);
  const EerResult r = ComputeEer(ReadScores(scores, &trials));
  const std::string line = "EER=" + Fixed(r.eer, 4) + "@threshold=" + Fixed(r.threshold, 4);
  out << line << '\n';
  if (!c.out.empty()) {
    std::ofstream f = OpenOut(c.out);
    WriteHeader(f, ctx);
    f << line << "\nn_bonafide=" << r.n_bonafide << "\nn_spoof=" << r.n_spoof << '\n';
  }
  return 0;
}

// Segment embedder for TC analysis: encoder tail on FBank input, segment
// mean on speaker-feature maps.
struct TcSource {
  std::optional<Encoder<float>> encoder;

  SimilarityMatrix Matrix(const FeatureMap& f, int k, double seg, std::uint64_t seed) {
    if (!f.is_fbank()) return TcSimilarityMatrix(f.values, k, seg, seed);
    if (!encoder) throw Error("analyze-tc: FBank features need --ckpt with an encoder");
    Encoder<float>& enc = *encoder;
    const Eigen::MatrixXd s = enc.EncodeFeatures(f.values.cast<float>()).cast<double>();
    return TcSimilarityMatrix(s, k, seg, seed, [&](const Eigen::MatrixXd& x) -> Eigen::VectorXd {
      return enc.PoolEmbedding(x.cast<float>()).transpose().cast<double>();
    });
  }
};

int RunAnalyzeTc(const CommonFlags& c, const std::string& protocol, const std::string& features,
                 const std::string& wav, int k, double seg_dur, const std::string& matrix_dir,
                 std::ostream& out, std::ostream& err) {
  RunContext ctx = MakeContext("analyze-tc", c,
                               {{"tc.k", std::to_string(k)}, {"tc.seg_dur", ToText(seg_dur)}}, err);
  k = static_cast<int>(ctx.cfg.GetInt("tc.k", k));
  seg_dur = ctx.cfg.GetDouble("tc.seg_dur", seg_dur);
  TcSource src;
  if (!c.ckpt.empty()) {
    const Checkpoint ck = Checkpoint::Load(c.ckpt);
    if (ck.config.contains("encoder")) src.encoder = LoadEncoder<float>(ck);
  }
  if (!wav.empty()) {
    if (!src.encoder) throw UsageError("analyze-tc: --wav needs --ckpt with an encoder");
    const SimilarityMatrix m = TcSimilarityMatrix(LoadWaveform(wav), k, seg_dur, ctx.seed, *src.encoder);
    const TcStatistic st = ComputeTcStatistic(m.values);
    if (!c.out.empty()) {
      std::ofstream f = OpenOut(c.out);
      WriteHeader(f, ctx);
      WriteSimilarityMatrix(f, m);
    } else {
      WriteSimilarityMatrix(out, m);
    }
    out << "mean_offdiag=" << Fixed(st.mean_offdiag, 6) << " range_offdiag=" << Fixed(st.range_offdiag, 6)
        << '\n';
    return 0;
  }
  if (protocol.empty() || features.empty())
    throw UsageError("analyze-tc: need --protocol and --features (or --wav)");
  if (c.out.empty()) throw UsageError("analyze-tc: --out is required");
  const auto trials = LoadProtocol(protocol);
  std::ofstream f = OpenOut(c.out);
  WriteHeader(f, ctx);
  f << "# utt\tmean_offdiag\trange_offdiag\tkey\n" << std::setprecision(8);
  if (!matrix_dir.empty()) fs::create_directories(matrix_dir);
  std::vector<double> spoof, bona;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    const FeatureMap fm = LoadExamples({t}, features).front().features;
    const SimilarityMatrix m = src.Matrix(fm, k, seg_dur, ItemSeed(ctx.seed, 0, i));
    const TcStatistic st = ComputeTcStatistic(m.values);
    f << t.utt << '\t' << st.mean_offdiag << '\t' << st.range_offdiag << '\t' << KeyName(t.key) << '\n';
    (t.key == Key::kSpoof ? spoof : bona).push_back(st.mean_offdiag);
    if (!matrix_dir.empty()) {
      std::ofstream mf = OpenOut((fs::path(matrix_dir) / (t.utt + ".txt")).string());
      WriteSimilarityMatrix(mf, m);
    }
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  out << "mean_offdiag bonafide=" << Fixed(mean(bona), 6) << " spoof=" << Fixed(mean(spoof), 6) << '\n';
  if (!bona.empty() && !spoof.empty()) out << "auc=" << Fixed(RocAuc(spoof, bona), 6) << '\n';
  return 0;
}

int RunAnalyzeDist(const CommonFlags& c, const std::string& protocol, const std::string& features,
                   std::ostream& out, std::ostream& err) {
  RunContext ctx = MakeContext("analyze-dist", c, {}, err);
  std::optional<Checkpoint> ck;
  if (!c.ckpt.empty()) ck = Checkpoint::Load(c.ckpt);
  const auto trials = LoadProtocol(protocol);
  const auto examples = LoadExamples(trials, features);
  const bool fbank = examples.front().features.is_fbank();

  std::optional<Encoder<float>> enc;
  std::optional<Cm2Model<float>> cm2;
  if (ck && ck->config.contains("encoder")) enc = LoadEncoder<float>(*ck);
  if (ck && ck->config.contains("cm2")) cm2 = LoadCm2<float>(*ck);
  if (fbank && !enc) throw Error("analyze-dist: FBank features need --ckpt with an encoder");

  std::string source;
  Eigen::MatrixXd emb;
  std::vector<std::string> utts, labels;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Mat<float> x = examples[i].features.values.cast<float>();
    Eigen::VectorXd e;
    if (cm2) {
      source = "cm2";
      e = cm2->Embed(fbank ? enc->Frontend(x) : x).transpose().cast<double>();
    } else if (fbank) {
      source = "encoder";
      e = enc->Embed(x, nullptr).transpose().cast<double>();
    } else {
      source = "feature-mean";
      e = SegmentMean(examples[i].features.values);
    }
    if (i == 0) emb.resize(static_cast<Eigen::Index>(examples.size()), e.size());
    emb.row(static_cast<Eigen::Index>(i)) = e.transpose();
    utts.push_back(examples[i].trial.utt);
    labels.push_back(examples[i].trial.key == Key::kBonafide ? "bonafide" : examples[i].trial.attack);
  }
  const PcaResult p = PcaProject(emb, 2);
  if (c.out.empty()) throw UsageError("analyze-dist: --out is required");
  std::ofstream f = OpenOut(c.out);
  WriteHeader(f, ctx);
  f << "# embeddings: " << source << '\n';
  WriteProjection(f, utts, p.coords, labels);
  const double total = p.eigenvalues.sum();
  out << "embeddings=" << source << " explained_variance=" << Fixed(total > 0 ? p.eigenvalues.head(2).sum() / total : 0.0, 4)
      << '\n';
  return 0;
}

int RunSimulate(const CommonFlags& c, int n, const std::string& kind, const std::string& tag,
                std::ostream& out, std::ostream& err) {
  if (c.out.empty()) throw UsageError("simulate: --out is required");
  RunContext ctx = MakeContext("simulate", c,
                               {{"sim.n_per_class", std::to_string(n)}, {"sim.kind", kind}, {"sim.tag", tag}},
                               err);
  SimConfig sc = SimConfigFrom(ctx.cfg);
  sc.seed = ctx.seed;
  n = static_cast<int>(ctx.cfg.GetInt("sim.n_per_class", n));
  const std::string k = ctx.cfg.GetString("sim.kind", kind);
  std::vector<SimulatedUtterance> utts;
  if (k == "trajectories") {
    utts = SimulateTrajectories(sc, n, tag);
  } else if (k == "complementary") {
    ComplementaryConfig cc;
    cc.jitter_sigma = ctx.cfg.GetDouble("sim.jitter_sigma", cc.jitter_sigma);
    cc.id_shift = ctx.cfg.GetDouble("sim.id_shift", cc.id_shift);
    utts = SimulateComplementary(sc, cc, n, tag);
  } else {
    throw Error("simulate: unknown kind '" + k + "'");
  }
  auto header = ctx.Header();
  header.push_back("sim: dim=" + std::to_string(sc.dim) + " n_frames=" + std::to_string(sc.n_frames) +
                   " drift_sigma=" + ToText(sc.drift_sigma) + " noise_sigma=" + ToText(sc.noise_sigma) +
                   " base_scale=" + ToText(sc.base_scale) + " kind=" + k);
  WriteSimulation(utts, c.out, header);
  out << "simulated " << utts.size() << " utterances into " << c.out << '\n';
  return 0;
}

struct PublishedFigures {
  const char* params;
  const char* flops;
};

struct DescribedModel {
  ModelDescription desc;
  std::optional<PublishedFigures> published;
};

DescribedModel Describe(const std::string& model, const std::string& scale,
                        const std::optional<Checkpoint>& ck, const FlatConfig& cfg) {
  const bool full = scale == "full";
  EncoderConfig enc = full ? EncoderConfig{} : EncoderConfig::Toy();
  std::optional<Cm1Config> cm1;
  std::optional<Cm2Config> cm2;
  if (ck) {
    if (ck->config.contains("encoder")) enc = ck->config.at("encoder").get<EncoderConfig>();
    if (ck->config.contains("cm1")) cm1 = ck->config.at("cm1").get<Cm1Config>();
    if (ck->config.contains("cm2")) cm2 = ck->config.at("cm2").get<Cm2Config>();
  }
  enc = EncoderConfigFrom(cfg, enc);
  if (!cm1) cm1 = full ? Cm1Config::Full() : Cm1Config::Toy(enc.mfa_dim);
  if (!cm2) cm2 = Cm2Config::FromEncoder(enc);
  cm1 = Cm1ConfigFrom(cfg, *cm1);
  cm2 = Cm2ConfigFrom(cfg, *cm2);
  cm1->input_dim = enc.mfa_dim;
  cm2->input_dim = enc.concat_dim();

  DescribedModel d;
  const bool literal = full && !ck;
  if (model == "cm1") {
    d.desc = DescribeCm1System(enc, *cm1);
    if (literal) d.published = PublishedFigures{"32.37 M", "24.67 G"};
  } else if (model == "cm2") {
    d.desc = DescribeCm2System(enc, *cm2);
    if (literal) d.published = PublishedFigures{"6.57 M", "8.51 G"};
  } else if (model == "fusion") {
    d.desc = DescribeFusionSystem(enc, *cm1, *cm2);
    if (literal) d.published = PublishedFigures{"38.94 M", "28.49 G"};
  } else if (model == "encoder") {
    d.desc = DescribeEncoder(enc);
  } else {
    throw Error("unknown model '" + model + "'");
  }
  return d;
}

int RunCountParams(const CommonFlags& c, const std::string& model, const std::string& scale,
                   bool verbose, std::ostream& out, std::ostream& err) {
  RunContext ctx = MakeContext("count-params", c, {{"model", model}, {"scale", scale}}, err);
  std::optional<Checkpoint> ck;
  if (!c.ckpt.empty()) ck = Checkpoint::Load(c.ckpt);
  const DescribedModel d = Describe(model, scale, ck, ctx.cfg);
  std::ostringstream r;
  r << "model=" << model << " scale=" << (ck ? "checkpoint" : scale) << '\n';
  if (verbose) {
    for (const auto& t : d.desc.tensors) {
      r << "  " << t.name << " [";
      for (std::size_t i = 0; i < t.shape.size(); ++i) r << (i ? "x" : "") << t.shape[i];
      r << "] " << t.count() << (t.trainable ? "" : " (frozen)") << '\n';
    }
  }
  const std::int64_t n = CountParameters(d.desc);
  r << "trainable_params=" << n << " (" << Millions(n) << ")\n";
  if (d.published) {
    r << "published=" << d.published->params << '\n';
    if (model == "cm1" || model == "fusion")
      r << "note: the published figure exceeds the sum of the documented tensor shapes; the "
           "extra parameters are not described, so the two numbers are reported side by side\n";
    else
      r << "note: the published figure depends on layers of the baseline encoder that are not "
           "described; this count covers the tensors defined here\n";
  }
  out << r.str();
  if (!c.out.empty()) {
    std::ofstream f = OpenOut(c.out);
    WriteHeader(f, ctx);
    f << r.str();
  }
  return 0;
}

int RunFlops(const CommonFlags& c, const std::string& model, const std::string& scale,
             double duration, std::ostream& out, std::ostream& err) {
  RunContext ctx = MakeContext("flops", c,
                               {{"model", model}, {"scale", scale}, {"flops.duration", ToText(duration)}},
                               err);
  duration = ctx.cfg.GetDouble("flops.duration", duration);
  if (!(duration >= 0)) throw Error("flops: duration must be >= 0");
  std::optional<Checkpoint> ck;
  if (!c.ckpt.empty()) ck = Checkpoint::Load(c.ckpt);
  const DescribedModel d = Describe(model, scale, ck, ctx.cfg);
  const std::int64_t f = EstimateFlops(d.desc, duration);
  std::ostringstream r;
  r << "model=" << model << " scale=" << (ck ? "checkpoint" : scale) << " duration=" << Fixed(duration, 2)
    << "s frames=" << FramesForDuration(duration) << '\n'
    << "flops=" << f << " (" << Giga(f) << ")\n";
  if (d.published)
    r << "published=" << d.published->flops << " (input duration not stated there)\n";
  out << r.str();
  if (!c.out.empty()) {
    std::ofstream o = OpenOut(c.out);
    WriteHeader(o, ctx);
    o << r.str();
  }
  return 0;
}

void AddCommon(CLI::App* sc, CommonFlags& c) {
  sc->add_option("--seed", c.seed, "Random seed (recorded in output headers)");
  sc->add_option("--config", c.config, "Flat key = value config file; flags override it")
      ->check(CLI::ExistingFile);
  sc->add_option("--ckpt", c.ckpt, "Checkpoint directory");
  sc->add_option("--out", c.out, "Output path");
  sc->add_option("--device", c.device, "Compute device (only cpu is available)");
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"tcssd: synthetic speech detection from speaker-feature consistency", "tcssd"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  CommonFlags common;
  std::function<int()> action;

  // extract
  std::vector<std::string> ex_files;
  std::string protocol, features, wav_dir;
  bool ex_trim = false;
  double top_db = 40.0;
  auto* ex = app.add_subcommand("extract", "Waveforms to FBank feature cache");
  AddCommon(ex, common);
  ex->add_option("files", ex_files, "IN.wav OUT.fea (single-file mode)");
  ex->add_option("--protocol", protocol, "Protocol listing utterances");
  ex->add_option("--wav-dir", wav_dir, "Directory holding <utt>.wav");
  ex->add_flag("--trim", ex_trim, "Trim silence before extraction");
  ex->add_option("--top-db", top_db, "Trim threshold in dB below peak");
  ex->callback([&] {
    action = [&] { return RunExtract(common, ex_files, protocol, wav_dir, ex_trim, top_db, out, err); };
  });

  // trim
  std::string trim_in, trim_out;
  auto* tr = app.add_subcommand("trim", "Silence trimming of a PCM16 WAV file");
  AddCommon(tr, common);
  tr->add_option("input", trim_in, "Input WAV")->required();
  tr->add_option("output", trim_out, "Output WAV")->required();
  tr->add_option("--top-db", top_db, "Threshold in dB below the loudest frame")->capture_default_str();
  tr->callback([&] { action = [&] { return RunTrim(common, trim_in, trim_out, top_db, out, err); }; });

  // train
  std::string cm;
  std::optional<long> steps, batch_size, warmup, epochs;
  std::optional<double> lr;
  std::optional<bool> augment;
  auto* trn = app.add_subcommand("train", "Train CM1, CM2 or the toy speaker encoder");
  AddCommon(trn, common);
  trn->add_option("--cm", cm, "Target: 1, 2 or frontend-toy")
      ->required()
      ->check(CLI::IsMember({"1", "2", "frontend-toy"}));
  trn->add_option("--protocol", protocol, "Training protocol")->required();
  trn->add_option("--features", features, "Feature cache directory")->required();
  trn->add_option("--steps", steps, "Stop after this many steps (train.max_steps)");
  trn->add_option("--epochs", epochs, "Epochs (train.epochs)");
  trn->add_option("--batch-size", batch_size, "Batch size (train.batch_size)");
  trn->add_option("--lr", lr, "Peak learning rate (train.base_lr)");
  trn->add_option("--warmup", warmup, "Warm-up steps (train.warmup_steps)");
  trn->add_option("--augment", augment, "SpecAugment on FBank input (train.augment)");
  trn->callback([&] {
    action = [&] {
      std::vector<std::pair<std::string, std::string>> ov;
      if (steps) ov.emplace_back("train.max_steps", std::to_string(*steps));
      if (epochs) ov.emplace_back("train.epochs", std::to_string(*epochs));
      if (batch_size) ov.emplace_back("train.batch_size", std::to_string(*batch_size));
      if (lr) ov.emplace_back("train.base_lr", ToText(*lr));
      if (warmup) ov.emplace_back("train.warmup_steps", std::to_string(*warmup));
      if (augment) ov.emplace_back("train.augment", *augment ? "true" : "false");
      return RunTrain(common, cm, protocol, features, ov, out, err);
    };
  });

  // score
  int score_batch = 32;
  auto* sc = app.add_subcommand("score", "Score trials with a trained countermeasure");
  AddCommon(sc, common);
  sc->add_option("--cm", cm, "Countermeasure: 1 or 2")->required()->check(CLI::IsMember({"1", "2"}));
  sc->add_option("--protocol", protocol, "Trial protocol")->required();
  sc->add_option("--features", features, "Feature cache directory")->required();
  sc->add_option("--batch-size", score_batch, "Utterances per chunk")->check(CLI::PositiveNumber);
  sc->callback([&] {
    action = [&] { return RunScore(common, cm, protocol, features, score_batch, out, err); };
  });

  // fuse
  std::vector<std::string> fuse_inputs;
  double weight = 0.5;
  std::string norm = "none";
  auto* fu = app.add_subcommand("fuse", "Weighted score-level fusion of two systems");
  AddCommon(fu, common);
  fu->add_option("scores", fuse_inputs, "Two score files")->required()->expected(2);
  fu->add_option("--protocol", protocol, "Protocol (keys are checked when given)");
  fu->add_option("--weight", weight, "Weight of the first system")->capture_default_str();
  fu->add_option("--norm", norm, "Per-system normalisation")
      ->check(CLI::IsMember({"none", "minmax", "znorm"}))
      ->capture_default_str();
  fu->callback([&] {
    action = [&] { return RunFuse(common, fuse_inputs, protocol, weight, norm, out, err); };
  });

  // evaluate
  std::string scores;
  auto* ev = app.add_subcommand("evaluate", "Equal error rate of a score file");
  AddCommon(ev, common);
  ev->add_option("--scores", scores, "Score file")->required();
  ev->add_option("--protocol", protocol, "Trial protocol with keys")->required();
  ev->callback([&] { action = [&] { return RunEvaluate(common, scores, protocol, out, err); }; });

  // analyze-tc
  std::string wav, matrix_dir;
  int k = 8;
  double seg_dur = 0.5;
  auto* at = app.add_subcommand("analyze-tc", "Temporal-consistency similarity matrices");
  AddCommon(at, common);
  at->add_option("--protocol", protocol, "Protocol");
  at->add_option("--features", features, "Feature cache directory");
  at->add_option("--wav", wav, "Single waveform (needs --ckpt)");
  at->add_option("--segments", k, "Segments per utterance")->capture_default_str();
  at->add_option("--seg-dur", seg_dur, "Segment duration, seconds")->capture_default_str();
  at->add_option("--matrix-dir", matrix_dir, "Also dump each matrix here");
  at->callback([&] {
    action = [&] {
      return RunAnalyzeTc(common, protocol, features, wav, k, seg_dur, matrix_dir, out, err);
    };
  });

  // analyze-dist
  auto* ad = app.add_subcommand("analyze-dist", "2-D projection of utterance embeddings");
  AddCommon(ad, common);
  ad->add_option("--protocol", protocol, "Protocol")->required();
  ad->add_option("--features", features, "Feature cache directory")->required();
  ad->callback([&] { action = [&] { return RunAnalyzeDist(common, protocol, features, out, err); }; });

  // simulate
  int n_per_class = 100;
  std::string sim_kind = "trajectories", tag = "SIM";
  auto* si = app.add_subcommand("simulate", "Synthetic speaker-feature trajectories");
  AddCommon(si, common);
  si->add_option("--n-per-class", n_per_class, "Utterances per class")->capture_default_str();
  si->add_option("--kind", sim_kind, "trajectories or complementary")
      ->check(CLI::IsMember({"trajectories", "complementary"}))
      ->capture_default_str();
  si->add_option("--tag", tag, "Utterance id prefix")->capture_default_str();
  si->callback([&] { action = [&] { return RunSimulate(common, n_per_class, sim_kind, tag, out, err); }; });

  // count-params / flops
  std::string model = "cm1", scale = "full";
  bool verbose = false;
  double duration = 4.0;
  auto* cp = app.add_subcommand("count-params", "Trainable parameter count");
  AddCommon(cp, common);
  cp->add_option("--model", model, "cm1, cm2, fusion or encoder")
      ->check(CLI::IsMember({"cm1", "cm2", "fusion", "encoder"}))
      ->capture_default_str();
  cp->add_option("--scale", scale, "full or toy")->check(CLI::IsMember({"full", "toy"}))->capture_default_str();
  cp->add_flag("--verbose", verbose, "List every tensor");
  cp->callback([&] { action = [&] { return RunCountParams(common, model, scale, verbose, out, err); }; });

  auto* fl = app.add_subcommand("flops", "FLOP estimate (2 x MACs) for an input duration");
  AddCommon(fl, common);
  fl->add_option("--model", model, "cm1, cm2, fusion or encoder")
      ->check(CLI::IsMember({"cm1", "cm2", "fusion", "encoder"}))
      ->capture_default_str();
  fl->add_option("--scale", scale, "full or toy")->check(CLI::IsMember({"full", "toy"}))->capture_default_str();
  fl->add_option("--duration", duration, "Input duration, seconds")->capture_default_str();
  fl->callback([&] { action = [&] { return RunFlops(common, model, scale, duration, out, err); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    const CLI::App* failed = &app;
    for (const CLI::App* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return 1;
  }
  try {
    return action ? action() : 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    const CLI::App* failed = &app;
    for (const CLI::App* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace tcssd
