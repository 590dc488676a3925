// tests/test_cli.cpp

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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tcssd/cli.hpp"
#include "tcssd/config.hpp"
#include "tcssd/frontend.hpp"

using namespace tcssd;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path TempDir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tcssd_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void Spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::map<std::string, std::string> Tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = Slurp(e.path());
  return out;
}

std::string DropHeader(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind('#', 0) != 0) out += line + "\n";
  return out;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const Run help = Cli({"--help"});
  CHECK(help.code == 0);
  for (const char* sub : {"extract", "trim", "train", "score", "fuse", "evaluate", "analyze-tc", "analyze-dist",
                          "simulate", "count-params", "flops"})
    CHECK(help.out.find(sub) != std::string::npos);

  CHECK(Cli({}).code == 1);
  const Run unknown = Cli({"frobnicate"});
  CHECK(unknown.code == 1);
  CHECK_FALSE(unknown.err.empty());
  const Run bad_flag = Cli({"simulate", "--bogus"});
  CHECK(bad_flag.code == 1);
  CHECK(bad_flag.err.find("Usage") != std::string::npos);
  CHECK(Cli({"evaluate"}).code == 1);
  CHECK(Cli({"train", "--cm", "3"}).code == 1);
  CHECK(Cli({"evaluate", "--help"}).code == 0);
}

TEST_CASE("evaluate prints the EER of a score file") {
  const fs::path d = TempDir("eval");
  Spit(d / "p.txt", "A b1 - - bonafide\nA b2 - - bonafide\nA b3 - - bonafide\n"
                    "B s1 - A01 spoof\nB s2 - A01 spoof\nB s3 - A01 spoof\n");
  Spit(d / "s.tsv", "b1\t3\nb2\t2\nb3\t1\ns1\t2.5\ns2\t0.5\ns3\t0\n");
  const Run r = Cli({"evaluate", "--scores", (d / "s.tsv").string(), "--protocol", (d / "p.txt").string()});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("EER=0.3333", 0) == 0);

  Spit(d / "bad.tsv", "b1\t3\nzz\t1\n");
  const Run bad = Cli({"evaluate", "--scores", (d / "bad.tsv").string(), "--protocol", (d / "p.txt").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("zz") != std::string::npos);
  CHECK(Cli({"evaluate", "--scores", (d / "none.tsv").string(), "--protocol", (d / "p.txt").string()}).code == 2);
}

TEST_CASE("simulate is byte-reproducible and carries a provenance header") {
  const fs::path a = TempDir("sim_a"), b = TempDir("sim_b");
  REQUIRE(Cli({"simulate", "--out", a.string(), "--seed", "7", "--n-per-class", "5"}).code == 0);
  REQUIRE(Cli({"simulate", "--out", b.string(), "--seed", "7", "--n-per-class", "5"}).code == 0);
  const auto ta = Tree(a), tb = Tree(b);
  CHECK(ta.size() == 11);
  CHECK(ta == tb);
  const std::string proto = ta.at("protocol.txt");
  CHECK(proto.rfind("# tcssd ", 0) == 0);
  CHECK(proto.find("seed=7") != std::string::npos);
  CHECK(proto.find("config=") != std::string::npos);

  const fs::path c = TempDir("sim_c");
  REQUIRE(Cli({"simulate", "--out", c.string(), "--seed", "8", "--n-per-class", "5"}).code == 0);
  CHECK(Tree(c) != ta);
}

TEST_CASE("trim of a silent file is a data error") {
  const fs::path d = TempDir("trim");
  Waveform w;
  w.samples = Eigen::VectorXd::Zero(16000);
  SaveWaveform(w, (d / "in.wav").string());
  const Run r = Cli({"trim", "--top-db", "40", (d / "in.wav").string(), (d / "out.wav").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("empty after trim") != std::string::npos);

  for (Eigen::Index i = 4000; i < 8000; ++i) w.samples[i] = 0.5 * std::sin(0.05 * static_cast<double>(i));
  SaveWaveform(w, (d / "tone.wav").string());
  CHECK(Cli({"trim", (d / "tone.wav").string(), (d / "out.wav").string()}).code == 0);
  CHECK(LoadWaveform((d / "out.wav").string()).size() < 16000);
}

TEST_CASE("flat config parsing, precedence and hashing") {
  std::istringstream in("# comment\ntrain.batch_size = 16\n\nsim.seed=3  # trailing\ntrain.batch_size = 8\n");
  const FlatConfig c = FlatConfig::Parse(in);
  CHECK(c.GetInt("train.batch_size", 0) == 8);
  CHECK(c.GetU64("sim.seed", 0) == 3);
  CHECK(c.GetDouble("absent", 1.5) == 1.5);
  CHECK(c.Canonical() == "sim.seed = 3\ntrain.batch_size = 8\n");

  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : c.Canonical()) h = (h ^ ch) * 1099511628211ull;
  CHECK(c.Hash() == h);

  std::istringstream bad("no equals sign\n");
  CHECK_THROWS_AS(FlatConfig::Parse(bad), Error);
  std::istringstream typed("x = abc\n");
  CHECK_THROWS_AS(FlatConfig::Parse(typed).GetInt("x", 0), Error);

  // A flag beats the file value.
  const fs::path d = TempDir("cfg");
  Spit(d / "c.conf", "sim.n_frames = 30\nsim.dim = 4\n");
  REQUIRE(Cli({"simulate", "--config", (d / "c.conf").string(), "--out", (d / "o").string(), "--n-per-class",
               "1"})
              .code == 0);
  const FeatureMap f = LoadFeatureMap((d / "o" / "features" / "SIM_B_00000.fea").string());
  CHECK(f.frames() == 30);
  CHECK(f.bins() == 4);
}

TEST_CASE("simulate, train, score and evaluate through the command line") {
  const fs::path d = TempDir("e2e");
  const std::string sim = (d / "sim").string(), ck = (d / "ck").string(), scores = (d / "s.tsv").string();
  REQUIRE(Cli({"simulate", "--out", sim, "--seed", "1", "--n-per-class", "6"}).code == 0);
  const std::string proto = sim + "/protocol.txt", feats = sim + "/features";
  const Run t = Cli({"train", "--cm", "1", "--protocol", proto, "--features", feats, "--out", ck, "--steps", "3",
                     "--batch-size", "4", "--warmup", "2", "--seed", "2"});
  REQUIRE(t.code == 0);
  const std::string log = DropHeader(Slurp(fs::path(ck) / "train.log"));
  std::istringstream lines(log);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    ++n;
    CHECK(std::count(line.begin(), line.end(), '\t') == 2);
    CHECK(line.rfind(std::to_string(n) + "\t", 0) == 0);
  }
  CHECK(n == 3);

  REQUIRE(Cli({"score", "--cm", "1", "--protocol", proto, "--features", feats, "--ckpt", ck, "--out", scores}).code ==
          0);
  const std::string first = Slurp(scores);
  CHECK(first.rfind("# tcssd ", 0) == 0);
  REQUIRE(Cli({"score", "--cm", "1", "--protocol", proto, "--features", feats, "--ckpt", ck, "--out", scores,
               "--batch-size", "5"})
              .code == 0);
  CHECK(DropHeader(Slurp(scores)) == DropHeader(first));
  const Run e = Cli({"evaluate", "--scores", scores, "--protocol", proto});
  CHECK(e.code == 0);
  CHECK(e.out.rfind("EER=", 0) == 0);
  // CM2 is a separate head; scoring with the wrong kind is a data error.
  CHECK(Cli({"score", "--cm", "2", "--protocol", proto, "--features", feats, "--ckpt", ck}).code == 2);
}

TEST_CASE("accounting subcommands") {
  const Run p = Cli({"count-params", "--model", "cm1", "--scale", "full"});
  CHECK(p.code == 0);
  CHECK(p.out.find("trainable_params=29215808") != std::string::npos);
  const Run f = Cli({"flops", "--model", "cm1", "--scale", "full"});
  CHECK(f.code == 0);
  CHECK(f.out.find("G") != std::string::npos);
  const Run dev = Cli({"count-params", "--model", "encoder", "--device", "cuda"});
  CHECK(dev.code == 0);
  CHECK(dev.err.find("cpu") != std::string::npos);
}
