// tests/test_cm.cpp

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

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tcssd/checkpoint.hpp"
#include "tcssd/pipeline.hpp"

using namespace tcssd;
using Md = Eigen::MatrixXd;

namespace {

template <typename Visit>
void ZeroGrads(Visit&& visit) {
  visit([](const std::string&, nn::Param<double>& p) { p.ZeroGrad(); });
}

std::map<std::string, Md> Snapshot(auto&& visit) {
  std::map<std::string, Md> out;
  visit([&](const std::string& n, auto& p) { out[n] = p.value.template cast<double>(); });
  return out;
}

}  // namespace

TEST_CASE("difference sequence") {
  Md s(4, 2);
  s << 1, 2, 4, 3, 4, 0, 10, 1;
  Md want(3, 2);
  want << 3, 1, 0, -3, 6, 1;
  CHECK(DifferenceSequence(s) == want);
  CHECK_THROWS_AS(DifferenceSequence(Md(1, 2)), Error);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int t = std::uniform_int_distribution<int>(2, 30)(rng);
    const Md a = Md::Random(t, 5), b = Md::Random(t, 5);
    const Md d = DifferenceSequence(a);
    CHECK(d.rows() == t - 1);
    // Prefix sums rebuild the input from its first frame.
    Md rebuilt(t, 5);
    rebuilt.row(0) = a.row(0);
    for (int i = 1; i < t; ++i) rebuilt.row(i) = rebuilt.row(i - 1) + d.row(i - 1);
    CHECK((rebuilt - a).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((DifferenceSequence(Md(2.5 * a - b)) - (2.5 * d - DifferenceSequence(b))).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("GRU scalar case against a hand evaluation") {
  nn::GruLayer<double> g(1, 1);
  g.w_ih.value.setOnes();
  g.w_hh.value.setOnes();
  g.b_ih.value.setZero();
  g.b_hh.value.setZero();
  const Md h = g.Forward(Md::Ones(1, 1), nullptr);
  // (1 - sigmoid(1)) * tanh(1), since h0 = 0.
  CHECK(h(0, 0) == doctest::Approx(0.204824214809825).epsilon(1e-12));
  CHECK(h(0, 0) == doctest::Approx((1.0 - 1.0 / (1.0 + std::exp(-1.0))) * std::tanh(1.0)).epsilon(1e-14));
}

TEST_CASE("GRU properties") {
  std::mt19937_64 rng(2);
  nn::GruLayer<double> g(3, 4);
  g.Init(rng);
  SUBCASE("zero input with zero biases stays at zero") {
    CHECK(g.Forward(Md::Zero(6, 3), nullptr).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("bounded state") {
    g.w_ih.value *= 10.0;
    // Saturated tanh rounds to exactly 1.
    CHECK(g.Forward(Md::Random(50, 3) * 100.0, nullptr).cwiseAbs().maxCoeff() <= 1.0);
    CHECK(g.Forward(Md::Random(50, 3) * 0.1, nullptr).cwiseAbs().maxCoeff() < 1.0);
  }
  SUBCASE("causality") {
    const Md x = Md::Random(8, 3);
    Md y = x;
    y.bottomRows(3).setRandom();
    const Md hx = g.Forward(x, nullptr), hy = g.Forward(y, nullptr);
    CHECK(hx.topRows(5) == hy.topRows(5));
    CHECK(hx.row(7) != hy.row(7));
  }
}

TEST_CASE("GRU backprop through time matches finite differences") {
  std::mt19937_64 rng(3);
  nn::Gru<double> g(3, 4, 2);
  g.Init(rng);
  g.ForEachParam("", [](const std::string&, nn::Param<double>& p) {
    if (p.value.cols() == 1) p.value.setRandom();
  });
  Md x = Md::Random(5, 3);
  const Eigen::RowVectorXd probe = Eigen::RowVectorXd::Random(4);
  auto loss = [&] { return g.Forward(x, nullptr).dot(probe); };
  ZeroGrads([&](auto f) { g.ForEachParam("", f); });
  nn::Gru<double>::Cache c;
  g.Forward(x, &c);
  const Md dx = g.Backward(c, probe);
  const auto r = oracle::CheckGradients([&](auto f) { g.ForEachParam("", f); }, loss);
  INFO("worst: " << r.worst);
  CHECK(r.max_rel < 1e-6);
  CHECK(oracle::CheckInputGradient(x, dx, loss).max_rel < 1e-6);
}

TEST_CASE("CM1 gradients and scoring") {
  Cm1Config cfg{5, 4, 2, 6, 3};
  Cm1Model<double> m(cfg);
  m.Init(4);
  m.ForEachParam([](const std::string& n, nn::Param<double>& p) {
    if (p.value.cols() == 1 && n != "cm1.classes") p.value.setRandom();
  });
  const Md x = Md::Random(9, 5);
  const Eigen::RowVectorXd probe = Eigen::RowVectorXd::Random(3);
  auto loss = [&] { return m.Embed(x).dot(probe); };
  ZeroGrads([&](auto f) { m.ForEachParam(f); });
  Cm1Model<double>::Cache c;
  m.Embed(x, &c);
  m.Backward(c, probe);
  const auto r = oracle::CheckGradients(
      [&](auto f) {
        m.ForEachParam([&](const std::string& n, nn::Param<double>& p) {
          if (n != "cm1.classes") f(n, p);
        });
      },
      loss);
  INFO("worst: " << r.worst);
  CHECK(r.max_rel < 1e-4);

  SUBCASE("constant offset does not change the score") {
    const Eigen::RowVectorXd off = Eigen::RowVectorXd::Random(5) * 3.0;
    CHECK(m.Score(Md(x.rowwise() + off)) == doctest::Approx(m.Score(x)).epsilon(1e-12));
  }
  SUBCASE("equal class weights give zero") {
    m.classes.value.row(1) = m.classes.value.row(0);
    CHECK(m.Score(x) == 0.0);
  }
  SUBCASE("embedding aligned with bonafide and orthogonal to spoof gives one") {
    const Eigen::RowVectorXd e = m.Embed(x);
    m.classes.value.row(0) = 2.0 * e;
    Eigen::RowVectorXd o = Eigen::RowVectorXd::Random(3);
    o -= o.dot(e) / e.squaredNorm() * e;
    m.classes.value.row(1) = o;
    CHECK(m.Score(x) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("scores are bounded") {
    for (int i = 0; i < 20; ++i) {
      const double s = m.Score(Md::Random(6, 5) * 5.0);
      CHECK(s >= -2.0);
      CHECK(s <= 2.0);
    }
  }
}

TEST_CASE("CM2 gradients") {
  Cm2Model<double> m(Cm2Config{6, 4, 3, 5});
  m.Init(5);
  m.ForEachParam([](const std::string& n, nn::Param<double>& p) {
    if (p.value.cols() == 1 && n != "cm2.classes") p.value.setRandom();
  });
  const Md x = Md::Random(7, 6);
  const Eigen::RowVectorXd probe = Eigen::RowVectorXd::Random(5);
  auto loss = [&] { return m.Embed(x).dot(probe); };
  ZeroGrads([&](auto f) { m.ForEachParam(f); });
  Cm2Model<double>::Cache c;
  m.Embed(x, &c);
  m.Backward(c, probe);
  const auto r = oracle::CheckGradients(
      [&](auto f) {
        m.ForEachParam([&](const std::string& n, nn::Param<double>& p) {
          if (n != "cm2.classes") f(n, p);
        });
      },
      loss);
  INFO("worst: " << r.worst);
  CHECK(r.max_rel < 1e-5);
  for (int i = 0; i < 10; ++i) {
    const double s = m.Score(Md::Random(4, 6));
    CHECK(std::abs(s) <= 2.0);
  }
}

TEST_CASE("CM2 training leaves the frontend untouched") {
  EncoderConfig ec = EncoderConfig::Toy();
  Encoder<double> enc(ec);
  enc.Init(6);
  Cm2Model<double> head(Cm2Config::FromEncoder(ec));
  head.Init(9);
  head.InitFromEncoder(enc);

  std::vector<Md> inputs;
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) {
    inputs.push_back(Md::Random(30, 80));
    labels.push_back(i % 2);
  }
  const auto enc_before = Snapshot([&](auto f) { enc.ForEachParam("encoder.", f); });
  const auto head_before = Snapshot([&](auto f) { head.ForEachParam(f); });
  TrainConfig tc;
  tc.batch_size = 4;
  tc.max_steps = 1;
  tc.warmup_steps = 1;
  TrainModel<double>(head, labels, tc, [&](std::size_t i, std::uint64_t) { return enc.Frontend(inputs[i]); });
  CHECK(Snapshot([&](auto f) { enc.ForEachParam("encoder.", f); }) == enc_before);
  const auto head_after = Snapshot([&](auto f) { head.ForEachParam(f); });
  for (const auto& [name, v] : head_before) {
    INFO(name);
    CHECK(head_after.at(name) != v);
  }
}

TEST_CASE("pipeline copies the encoder frozen into a CM2 checkpoint") {
  Encoder<float> enc(EncoderConfig::Toy());
  enc.Init(7);
  Checkpoint init;
  init.config["encoder"] = enc.config();
  enc.ForEachParam("encoder.", ParamExporter<float>{&init, true});

  std::vector<Example> ex;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 8; ++i) {
    Example e;
    e.trial = {"S" + std::to_string(i), "U" + std::to_string(i), i % 2 ? "A01" : "-",
               i % 2 ? Key::kSpoof : Key::kBonafide};
    e.features.values = Md::Random(40, 80);
    ex.push_back(e);
  }
  TrainRequest req;
  req.cm = CmKind::kCm2;
  req.train.batch_size = 4;
  req.train.max_steps = 2;
  req.train.warmup_steps = 1;
  req.train.augment = false;
  req.init = init;
  const TrainResult r = TrainCountermeasure(req, ex);
  CHECK(r.log.size() == 2);
  std::size_t n_encoder = 0;
  for (const TensorEntry& t : init.tensors()) {
    const TensorEntry* out = r.checkpoint.Find(t.name);
    REQUIRE(out != nullptr);
    CHECK(out->frozen);
    CHECK(out->data == t.data);
    ++n_encoder;
  }
  CHECK(n_encoder > 0);
  CHECK(r.checkpoint.Find("cm2.classes") != nullptr);
  const ScoreSet scores = ScoreExamples(CmKind::kCm2, r.checkpoint, ex);
  CHECK(scores.entries.size() == ex.size());
}
