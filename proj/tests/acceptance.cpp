// tests/acceptance.cpp

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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tcssd/analysis.hpp"
#include "tcssd/cli.hpp"
#include "tcssd/model_desc.hpp"
#include "tcssd/pipeline.hpp"

using namespace tcssd;
namespace fs = std::filesystem;
using Md = Eigen::MatrixXd;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void Report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::vector<Example> ToExamples(const std::vector<SimulatedUtterance>& utts) {
  std::vector<Example> out;
  for (const auto& u : utts) {
    FeatureMap f;
    f.values = u.values;
    f.frame_len = 0;
    f.n_fft = 0;
    out.push_back({{u.speaker, u.utt, u.attack, u.key}, f});
  }
  return out;
}

// ---------------------------------------------------------------------------

void Criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_int_distribution<int> size(2, 200);
    const int nb = size(rng), ns = size(rng);
    // Every third set lives on a coarse grid so that ties are exercised.
    const bool coarse = trial % 3 == 0;
    std::normal_distribution<double> nd;
    auto draw = [&](double shift) {
      const double v = nd(rng) + shift;
      return coarse ? std::round(v * 4) / 4 : v;
    };
    std::vector<double> b(nb), s(ns);
    for (double& v : b) v = draw(1.0);
    for (double& v : s) v = draw(0.0);
    const EerResult r = ComputeEer(b, s);
    const oracle::Eer o = oracle::BruteForceEer(b, s);
    if (r.eer != o.eer || r.threshold != o.threshold) ++mismatches;
  }
  const EerResult hand = ComputeEer(std::vector<double>{3, 2, 1}, std::vector<double>{2.5, 0.5, 0});
  const double dt = Seconds(t0);
  const bool ok = mismatches == 0 && std::abs(hand.eer - 1.0 / 3) <= 1e-12 && dt < 10;
  Report(1, "EER oracle equivalence", ok,
         Fmt("%d/1000 mismatches, hand case %.15f, %.2fs", mismatches, hand.eer, dt));
}

void Criterion2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  double worst_ce = 0;
  for (int batch = 0; batch < 100; ++batch) {
    const int n = std::uniform_int_distribution<int>(1, 16)(rng);
    const int k = std::uniform_int_distribution<int>(2, 6)(rng);
    const Md e = Md::Random(n, 8), w = Md::Random(k, 8);
    std::vector<int> y(n);
    for (int& v : y) v = std::uniform_int_distribution<int>(0, k - 1)(rng);
    long double want = 0;
    for (int b = 0; b < n; ++b) {
      long double z = 0;
      for (int j = 0; j < k; ++j)
        z += std::exp(static_cast<long double>(e.row(b).normalized().dot(w.row(j).normalized())));
      want += std::log(z) - e.row(b).normalized().dot(w.row(y[b]).normalized());
    }
    const double got = AamSoftmaxLoss<double>(e, y, w, {0.0, 1.0}).loss;
    worst_ce = std::max(worst_ce, std::abs(got - static_cast<double>(want / n)));
  }

  Md e1(1, 3), w1(2, 3);
  e1 << 0.5, 0, 0;
  w1 << 2, 0, 0, 0, 1, 0;
  const double closed = std::log1p(std::exp(-30.0 * std::cos(0.4)));
  const double closed_err = std::abs(AamSoftmaxLoss<double>(e1, {0}, w1, {}).loss - closed);

  double worst_grad = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Md e = Md::Random(6, 5), w = Md::Random(3, 5);
    const std::vector<int> y{0, 1, 2, 0, 1, 2};
    e.row(5) = -w.row(2) + 0.05 * Eigen::RowVectorXd::Random(5);  // beyond pi - m
    const AamConfig cfg{0.4, 30.0};
    auto loss = [&] { return AamSoftmaxLoss<double>(e, y, w, cfg).loss; };
    const auto r = AamSoftmaxLoss<double>(e, y, w, cfg);
    // At s = 30 the saturated softmax leaves some entries with gradients
    // near 1e-7, where a 1e-5 step is dominated by cancellation error.
    const double h = 1e-4;
    worst_grad = std::max(worst_grad, oracle::CheckInputGradient(e, r.d_embeddings, loss, h).max_rel);
    worst_grad = std::max(worst_grad, oracle::CheckInputGradient(w, r.d_weights, loss, h).max_rel);
  }
  const double dt = Seconds(t0);
  const bool ok = worst_ce <= 1e-9 && closed_err <= 1e-9 && worst_grad < 1e-4 && dt < 30;
  Report(2, "AAM-softmax correctness", ok,
         Fmt("CE gap %.2e, closed-form gap %.2e, worst grad rel %.2e, %.2fs", worst_ce, closed_err, worst_grad,
             dt));
}

void Criterion3() {
  const auto t0 = Clock::now();
  nn::GruLayer<double> g(1, 1);
  g.w_ih.value.setOnes();
  g.w_hh.value.setOnes();
  g.b_ih.value.setZero();
  g.b_hh.value.setZero();
  const double h1 = g.Forward(Md::Ones(1, 1), nullptr)(0, 0);
  const double oracle_h1 = (1.0 - 1.0 / (1.0 + std::exp(-1.0))) * std::tanh(1.0);
  const double stated = 0.204863;

  double worst = 0;
  for (int trial = 0; trial < 5; ++trial) {
    std::mt19937_64 rng(100 + trial);
    nn::Gru<double> gru(3, 4, 2);
    gru.Init(rng);
    gru.ForEachParam("", [](const std::string&, nn::Param<double>& p) {
      if (p.value.cols() == 1) p.value.setRandom();
    });
    Md x = Md::Random(5, 3);
    const Eigen::RowVectorXd probe = Eigen::RowVectorXd::Random(4);
    auto loss = [&] { return gru.Forward(x, nullptr).dot(probe); };
    gru.ForEachParam("", [](const std::string&, nn::Param<double>& p) { p.ZeroGrad(); });
    nn::Gru<double>::Cache c;
    gru.Forward(x, &c);
    const Md dx = gru.Backward(c, probe);
    worst = std::max(worst, oracle::CheckGradients([&](auto f) { gru.ForEachParam("", f); }, loss).max_rel);
    worst = std::max(worst, oracle::CheckInputGradient(x, dx, loss).max_rel);
  }
  const double dt = Seconds(t0);
  const bool hand_ok = std::abs(h1 - stated) <= 1e-6;
  const bool ok = hand_ok && worst < 1e-4 && dt < 60;
  Report(3, "GRU recurrence", ok,
         Fmt("h1=%.12f vs stated %.6f (|diff| %.1e, tol 1e-6); independent (1-sigmoid(1))*tanh(1)=%.12f "
             "(|diff| %.1e); BPTT worst rel %.2e, %.2fs",
             h1, stated, std::abs(h1 - stated), oracle_h1, std::abs(h1 - oracle_h1), worst, dt));
}

void Criterion4() {
  std::mt19937_64 rng(4);
  double recon = 0, offset = 0, constant = 0;
  Cm1Model<float> m(Cm1Config::Toy(24));
  m.Init(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int t = std::uniform_int_distribution<int>(2, 120)(rng);
    const Md s = Md::Random(t, 24);
    const Md d = DifferenceSequence(s);
    Md rebuilt(t, 24);
    rebuilt.row(0) = s.row(0);
    for (int i = 1; i < t; ++i) rebuilt.row(i) = rebuilt.row(i - 1) + d.row(i - 1);
    recon = std::max(recon, (rebuilt - s).cwiseAbs().maxCoeff());

    // Offsets representable in float, added exactly.
    const Eigen::RowVectorXf off =
        (Eigen::RowVectorXf::Random(24) * 64.0f).array().round().matrix() * 0.25f;
    const Mat<float> x = s.cast<float>();
    const Mat<float> shifted = x.rowwise() + off;
    offset = std::max(offset, static_cast<double>(std::abs(m.Score(shifted) - m.Score(x))));

    const Md c = Eigen::RowVectorXd::Random(24).replicate(t, 1);
    constant = std::max(constant, DifferenceSequence(c).cwiseAbs().maxCoeff());
  }
  const bool ok = recon <= 1e-12 && offset <= 1e-6 && constant == 0.0;
  Report(4, "Differencing invariants", ok,
         Fmt("prefix-sum error %.1e, offset score change %.1e (tol 1e-6), constant-input max diff %.1e", recon,
             offset, constant));
}

void Criterion5() {
  Encoder<float> enc(EncoderConfig::Toy());
  enc.Init(21);
  Checkpoint init;
  init.config["encoder"] = enc.config();
  enc.ForEachParam("encoder.", ParamExporter<float>{&init, true});

  std::mt19937_64 rng(22);
  std::normal_distribution<double> nd(-4, 2);
  std::vector<Example> ex;
  for (int i = 0; i < 16; ++i) {
    Example e;
    e.trial = {"S" + std::to_string(i % 4), "U" + std::to_string(i), i % 2 ? "A01" : "-",
               i % 2 ? Key::kSpoof : Key::kBonafide};
    e.features.values.resize(60, 80);
    for (Eigen::Index k = 0; k < e.features.values.size(); ++k) e.features.values.data()[k] = nd(rng);
    ex.push_back(e);
  }
  std::string detail;
  bool ok = true;
  for (CmKind cm : {CmKind::kCm1, CmKind::kCm2}) {
    TrainRequest req;
    req.cm = cm;
    req.train.batch_size = 8;
    req.train.max_steps = 5;
    req.train.warmup_steps = 2;
    req.init = init;
    const TrainResult r = TrainCountermeasure(req, ex);
    std::size_t same = 0, total = 0;
    for (const TensorEntry& t : init.tensors()) {
      ++total;
      const TensorEntry* o = r.checkpoint.Find(t.name);
      if (o && o->frozen && o->shape == t.shape &&
          std::memcmp(o->data.data(), t.data.data(), t.data.size() * sizeof(float)) == 0)
        ++same;
    }
    // The head must have moved, otherwise the check is vacuous.
    std::size_t head = 0;
    for (const TensorEntry& t : r.checkpoint.tensors())
      if (!t.frozen) ++head;
    ok = ok && same == total && total > 0 && head > 0 && r.log.size() == 5;
    detail += Fmt("%s: %zu/%zu frozen tensors bit-identical, %zu trained; ", CmName(cm).c_str(), same, total, head);
  }
  Report(5, "Freeze contract", ok, detail.substr(0, detail.size() - 2));
}

void Criterion6() {
  const auto t0 = Clock::now();
  SimConfig train_cfg;
  train_cfg.seed = 1;
  SimConfig test_cfg;
  test_cfg.seed = 2;

  // (a)
  std::vector<double> spoof, bona;
  const auto tc_utts = SimulateTrajectories(train_cfg, 100);
  for (std::size_t i = 0; i < tc_utts.size(); ++i) {
    const auto m = TcSimilarityMatrix(tc_utts[i].values, 8, 0.5, 1000 + i);
    (tc_utts[i].key == Key::kSpoof ? spoof : bona).push_back(ComputeTcStatistic(m.values).mean_offdiag);
  }
  const double auc = RocAuc(spoof, bona);

  auto train = [](CmKind cm, const std::vector<Example>& ex) {
    TrainRequest r;
    r.cm = cm;
    r.train.batch_size = 32;
    r.train.base_lr = 2e-3;
    r.train.warmup_steps = 20;
    r.train.max_steps = 200;
    r.train.seed = 3;
    r.train.augment = false;
    return TrainCountermeasure(r, ex).checkpoint;
  };

  // (b), (c)
  const auto tr = ToExamples(tc_utts);
  const auto te = ToExamples(SimulateTrajectories(test_cfg, 100, "EVL"));
  const double eer1 = ComputeEer(ScoreExamples(CmKind::kCm1, train(CmKind::kCm1, tr), te)).eer;
  const double eer2 = ComputeEer(ScoreExamples(CmKind::kCm2, train(CmKind::kCm2, tr), te)).eer;

  // (d) complementary split: half the spoofs have frozen speaker state but
  // jittery frames (CM2 sees them, CM1 struggles), half drift like humans
  // around a shifted identity (CM1 cannot see them, CM2 can).
  const ComplementaryConfig comp;
  const auto ctr = ToExamples(SimulateComplementary(train_cfg, comp, 300));
  const auto cte = ToExamples(SimulateComplementary(test_cfg, comp, 100, "EVL"));
  const ScoreSet c1 = ScoreExamples(CmKind::kCm1, train(CmKind::kCm1, ctr), cte);
  const ScoreSet c2 = ScoreExamples(CmKind::kCm2, train(CmKind::kCm2, ctr), cte);
  const double ec1 = ComputeEer(c1).eer, ec2 = ComputeEer(c2).eer;
  const double ef = ComputeEer(FuseScores(c1, c2, 0.5)).eer;

  const double dt = Seconds(t0);
  const bool ok_a = auc >= 0.95, ok_b = eer1 <= 0.05, ok_c = eer2 <= 0.10;
  const bool ok_d = ef <= std::min(ec1, ec2) + 0.01;
  Report(6, "Simulator end-to-end", ok_a && ok_b && ok_c && ok_d && dt < 600,
         Fmt("(a) AUC %.4f%s; (b) CM1 EER %.4f%s; (c) CM2 EER %.4f%s; (d) complementary CM1 %.4f, CM2 %.4f, "
             "fused %.4f%s; %.1fs",
             auc, ok_a ? "" : " [fail]", eer1, ok_b ? "" : " [fail]", eer2, ok_c ? "" : " [fail]", ec1, ec2, ef,
             ok_d ? "" : " [fail]", dt));
}

void Criterion7() {
  const std::int64_t stated = 29250432;
  const std::int64_t counted = CountParameters(DescribeCm1System(EncoderConfig{}, Cm1Config{}));
  std::ostringstream out, err;
  const int code = RunCli({"count-params", "--model", "cm1", "--scale", "full"}, out, err);
  const std::string report = out.str();
  const bool report_ok = code == 0 && report.find("trainable_params=" + std::to_string(counted)) != std::string::npos &&
                         report.find("32.37") != std::string::npos && report.find("note:") != std::string::npos;

  const std::int64_t gru_h = 1536, gru_i = 1536;
  const bool toy_ok = CountParameters(DescribeLinear("fc", 1536, 512)) == 786944 &&
                      CountParameters(DescribeGru("g", gru_i, gru_h, 1)) == 14164992 &&
                      CountParameters(DescribeGru("g", 3, 4, 1)) == 3 * (3 * 4 + 4 * 4 + 8) &&
                      CountParameters(ModelDescription{}) == 0 &&
                      EstimateFlopsForFrames(DescribeLinear("fc", 1536, 512), 1) == 1572864;
  Report(7, "Parameter accounting", counted == stated && report_ok && toy_ok,
         Fmt("sum of documented shapes %lld vs stated %lld (diff %lld); report lists published 32.37 M and note: %s; "
             "toy closed forms: %s",
             static_cast<long long>(counted), static_cast<long long>(stated),
             static_cast<long long>(counted - stated), report_ok ? "yes" : "no", toy_ok ? "exact" : "mismatch"));
}

void Criterion8() {
  std::mt19937_64 rng(88);
  int boundary_ok = 0, idem_ok = 0;
  for (int i = 0; i < 50; ++i) {
    std::uniform_int_distribution<Eigen::Index> len(0, 24000);
    std::uniform_real_distribution<double> hz(80, 6000), amp(0.005, 1.0);
    const Eigen::Index lead = len(rng), body = 400 + len(rng), tail = len(rng);
    const double f = hz(rng), a = amp(rng);
    Waveform w;
    w.samples = Eigen::VectorXd::Zero(lead + body + tail);
    for (Eigen::Index k = 0; k < body; ++k)
      w.samples[lead + k] = a * std::sin(2 * std::numbers::pi * f * static_cast<double>(k) / kSampleRate);
    const auto [b, e] = TrimBounds(w);
    const auto [ob, oe] =
        oracle::TrimScan(std::vector<double>(w.samples.data(), w.samples.data() + w.size()), 40.0);
    if (b == ob && e == oe) ++boundary_ok;
    const Waveform t = TrimSilence(w);
    if (TrimSilence(t).samples == t.samples) ++idem_ok;
  }
  Report(8, "Silence-trim oracle", boundary_ok == 50 && idem_ok == 50,
         Fmt("%d/50 exact boundaries, %d/50 idempotent", boundary_ok, idem_ok));
}

std::string RecipeEer(const fs::path& work) {
  const std::string conf = std::string(TCSSD_SOURCE_DIR) + "/recipes/desk.conf";
  fs::remove_all(work);
  auto run = [&](std::vector<std::string> args) {
    std::ostringstream out, err;
    if (RunCli(args, out, err) != 0) throw Error("recipe step failed: " + args[0] + ": " + err.str());
    return out.str();
  };
  const std::string tr = (work / "train").string(), ev = (work / "eval").string();
  run({"simulate", "--config", conf, "--seed", "1", "--n-per-class", "100", "--out", tr});
  run({"simulate", "--config", conf, "--seed", "2", "--n-per-class", "100", "--tag", "EVL", "--out", ev});
  run({"train", "--config", conf, "--seed", "3", "--cm", "1", "--protocol", tr + "/protocol.txt", "--features",
       tr + "/features", "--out", (work / "cm1").string()});
  run({"score", "--cm", "1", "--ckpt", (work / "cm1").string(), "--protocol", ev + "/protocol.txt", "--features",
       ev + "/features", "--out", (work / "cm1.scores").string()});
  std::string line = run({"evaluate", "--scores", (work / "cm1.scores").string(), "--protocol", ev + "/protocol.txt"});
  while (!line.empty() && line.back() == '\n') line.pop_back();
  return line;
}

void Criterion9() {
  const fs::path root = fs::temp_directory_path() / "tcssd_acceptance_recipe";
  const std::string a = RecipeEer(root / "a"), b = RecipeEer(root / "b");
  Report(9, "Determinism", a == b && a.rfind("EER=", 0) == 0, "run 1 '" + a + "', run 2 '" + b + "'");
}

}  // namespace

int main() {
  const std::vector<void (*)()> criteria{Criterion1, Criterion2, Criterion3, Criterion4, Criterion5,
                                         Criterion6, Criterion7, Criterion8, Criterion9};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      Report(static_cast<int>(i + 1), "criterion", false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", g_failures, criteria.size());
  return g_failures == 0 ? 0 : 1;
}
