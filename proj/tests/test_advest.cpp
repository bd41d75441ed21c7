// tests/test_advest.cpp
// Perturbation estimator: spectral-loss identities against a naive oracle,
// generator/discriminator structure, and the adversarial training loop.

// Copyright 2026  advsig authors

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

#include "advsig/advest.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "advsig/synth.hpp"
#include "advsig/victim.hpp"

using namespace advsig;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &tag) {
    path = fs::temp_directory_path() / ("advsig_advest_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Waveform RandomWave(int n, uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (int i = 0; i < n; ++i) w.samples[i] = static_cast<float>(scale * rng.Normal());
  return w;
}

bool BitEqual(const Eigen::VectorXf &a, const Eigen::VectorXf &b) {
  if (a.size() != b.size()) return false;
  return (a.array() == b.array()).all();
}

AdvEstConfig SmallConfig() {
  AdvEstConfig cfg;
  cfg.enc_channels = 16;
  cfg.bottleneck = 8;
  cfg.hidden = 16;
  cfg.tcn_blocks = 3;
  cfg.d_layers = 5;
  cfg.d_channels = 8;
  return cfg;
}

/// Naive double-precision replica of the spectral loss for one resolution.
void NaiveStftLoss(const Eigen::VectorXf &pred, const Eigen::VectorXf &target, int fft, int hop,
                   double *sc, double *log_mag) {
  const int bins = fft / 2 + 1;
  const int frames = (static_cast<int>(pred.size()) - fft) / hop + 1;
  REQUIRE(frames >= 1);
  auto mags = [&](const Eigen::VectorXf &x) {
    Eigen::MatrixXd m(bins, frames);
    for (int t = 0; t < frames; ++t) {
      for (int k = 0; k < bins; ++k) {
        double re = 0, im = 0;
        for (int j = 0; j < fft; ++j) {
          double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * j / (fft - 1));
          double v = static_cast<double>(x[t * hop + j]) * w;
          re += v * std::cos(2.0 * M_PI * k * j / fft);
          im -= v * std::sin(2.0 * M_PI * k * j / fft);
        }
        m(k, t) = std::sqrt(re * re + im * im);
      }
    }
    return m;
  };
  Eigen::MatrixXd mp = mags(pred), mg = mags(target);
  *sc = (mg - mp).norm() / mg.norm();
  double acc = 0;
  for (int t = 0; t < frames; ++t)
    for (int k = 0; k < bins; ++k)
      acc += std::abs(std::log(mg(k, t) + 1e-7) - std::log(mp(k, t) + 1e-7));
  *log_mag = acc / (bins * frames);
}

}  // namespace

TEST_CASE("spectral loss vanishes exactly at equality") {
  MultiResStft stft(DefaultStftResolutions());
  Waveform a = RandomWave(4500, 31);
  StftLossParts parts;
  CHECK(stft.Eval(a, a, &parts) == 0.0);
  CHECK(parts.convergence == 0.0);
  CHECK(parts.log_mag == 0.0);

  Waveform b = a;
  b.samples[100] += 0.05f;
  CHECK(stft.Eval(a, b) > 0.0);
}

TEST_CASE("spectral convergence is one for a doubled signal") {
  Waveform a = RandomWave(3000, 17);
  Waveform twice = a;
  twice.samples *= 2.0f;

  MultiResStft single({{512, 128}});
  StftLossParts parts;
  single.Eval(twice, a, &parts);
  CHECK(parts.convergence == 1.0);  // exact: magnitudes scale bit-for-bit

  MultiResStft full(DefaultStftResolutions());
  full.Eval(twice, a, &parts);
  CHECK(parts.convergence == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral loss matches a naive double-precision replica") {
  Waveform a = RandomWave(1300, 5);
  Waveform b = RandomWave(1300, 6);

  MultiResStft stft({{512, 128}});
  StftLossParts parts;
  double total = stft.Eval(a, b, &parts);

  double sc, lm;
  NaiveStftLoss(a.samples, b.samples, 512, 128, &sc, &lm);
  CHECK(parts.convergence == doctest::Approx(sc).epsilon(1e-4));
  CHECK(parts.log_mag == doctest::Approx(lm).epsilon(1e-4));
  CHECK(total == doctest::Approx(sc + lm).epsilon(1e-4));

  Waveform tiny = RandomWave(100, 7);
  CHECK_THROWS_AS(stft.Eval(tiny, tiny), Error);
}

TEST_CASE("generator preserves length and is deterministic") {
  AdvEstConfig cfg = SmallConfig();
  GeneratorNet gen(cfg);
  Rng rng(12);
  gen.InitParams(&rng);

  for (int len : {16, 100, 4096, 5003}) {
    Waveform x = RandomWave(len, 1000 + len);
    Waveform y = gen.Run(x);
    CHECK(y.size() == len);
    CHECK(y.samples.allFinite());
  }

  GeneratorNet gen2(cfg);
  Rng rng2(12);
  gen2.InitParams(&rng2);
  Waveform x = RandomWave(2048, 3);
  CHECK(BitEqual(gen.Run(x).samples, gen2.Run(x).samples));
  CHECK(gen.params().Checksum() == gen2.params().Checksum());

  CHECK_THROWS_AS(gen.Run(RandomWave(8, 4)), Error);  // shorter than the encoder kernel
}

TEST_CASE("a zeroed generator estimates the full input as perturbation") {
  AdvEstConfig cfg = SmallConfig();
  GeneratorNet gen(cfg);
  for (size_t i = 0; i < gen.params().size(); ++i) gen.params().At(i).setZero();

  Waveform x = RandomWave(3000, 9);
  Waveform cleaned = gen.Run(x);
  CHECK(cleaned.samples.cwiseAbs().maxCoeff() == 0.0f);

  Waveform est = EstimatePerturbation(gen, x);
  CHECK(BitEqual(est.samples, x.samples));

  // wiring identity for an arbitrary generator
  Rng rng(44);
  gen.InitParams(&rng);
  Waveform run = gen.Run(x);
  Waveform d = EstimatePerturbation(gen, x);
  CHECK(BitEqual(d.samples, (x.samples - run.samples).eval()));
}

TEST_CASE("discriminator reduces a waveform to one finite score") {
  AdvEstConfig cfg = SmallConfig();
  DiscriminatorNet dsc(cfg);
  Rng rng(21);
  dsc.InitParams(&rng);

  Waveform x = RandomWave(4096, 2);
  ad::Tape<float> tape;
  Eigen::MatrixXf wv(1, x.size());
  wv.row(0) = x.samples.transpose();
  auto leaves = nn::MakeLeaves(&tape, dsc.params(), false);
  ad::Var score = dsc.Forward(&tape, leaves, tape.Leaf(wv, false));
  CHECK(tape.Value(score).rows() == 1);
  CHECK(tape.Value(score).cols() == 1);
  CHECK(std::isfinite(tape.ScalarValue(score)));

  AdvEstConfig sq = cfg;
  sq.d_sigmoid = true;
  DiscriminatorNet dsq(sq);
  Rng rng2(21);
  dsq.InitParams(&rng2);
  ad::Tape<float> tape2;
  auto leaves2 = nn::MakeLeaves(&tape2, dsq.params(), false);
  float s = tape2.ScalarValue(dsq.Forward(&tape2, leaves2, tape2.Leaf(wv, false)));
  CHECK(s > 0.0f);
  CHECK(s < 1.0f);
}

TEST_CASE("generator and discriminator checkpoints round-trip") {
  TempDir tmp("ckpt");
  AdvEstConfig cfg = SmallConfig();
  GeneratorNet gen(cfg);
  DiscriminatorNet dsc(cfg);
  Rng rng(33);
  gen.InitParams(&rng);
  dsc.InitParams(&rng);

  std::string gp = (tmp.path / "g.ckpt").string();
  std::string dp = (tmp.path / "d.ckpt").string();
  gen.Save(gp);
  dsc.Save(dp);

  GeneratorNet gen2 = GeneratorNet::Load(gp);
  CHECK(gen2.params().Checksum() == gen.params().Checksum());
  Waveform x = RandomWave(2500, 8);
  CHECK(BitEqual(gen.Run(x).samples, gen2.Run(x).samples));

  DiscriminatorNet dsc2 = DiscriminatorNet::Load(dp);
  CHECK(dsc2.params().Checksum() == dsc.params().Checksum());

  CHECK_THROWS_AS(GeneratorNet::Load(dp), Error);  // wrong model kind
}

namespace {

/// Victim + attack database shared by the training tests.
struct AdvEstFixture {
  std::vector<LabeledWave> corpus;
  Classifier victim;
  TempDir tmp{"fixture"};
  AttackDb db;

  static XvecConfig VictimConfig() {
    XvecConfig cfg;
    cfg.num_classes = 4;
    cfg.channels = 16;
    cfg.num_blocks = 1;
    cfg.embed_dim = 16;
    return cfg;
  }

  AdvEstFixture() : victim(VictimConfig(), "victim") {
    SynthSpec spec;
    spec.num_speakers = 4;
    spec.utterances_per_speaker = 6;
    spec.duration_s = 1.0;
    spec.seed = 515;
    corpus = SynthCorpus(spec);
    XvecTrainOpts topts;
    topts.epochs = 6;
    topts.batch = 8;
    topts.crop_seconds = 0.6;
    TrainClassifier(&victim, corpus, topts, 77);

    AttackDbSpec dspec;
    dspec.classes = {AttackClass::Benign, AttackClass::Fgsm, AttackClass::PgdLinf};
    dspec.fraction = 0.4;
    dspec.seed = 13;
    db = GenerateAttackDb(victim, corpus, dspec, (tmp.path / "db").string());
  }

  static const AdvEstFixture &Get() {
    static AdvEstFixture fx;
    return fx;
  }
};

}  // namespace

TEST_CASE("adversarial training drives the supervision loss down") {
  const auto &fx = AdvEstFixture::Get();
  AdvEstConfig cfg = SmallConfig();
  cfg.enc_channels = 24;
  cfg.bottleneck = 12;
  cfg.hidden = 24;

  GeneratorNet gen(cfg);
  DiscriminatorNet dsc(cfg);
  AdvEstTrainOpts opts;
  opts.cycles = 50;
  opts.batch = 2;
  opts.lambda_sup = 1.0;

  AdvEstTrainStats stats = TrainAdvEst(&gen, &dsc, fx.db, opts, 2024);
  REQUIRE(stats.steps_g == 100);
  REQUIRE(stats.steps_d == 50);
  REQUIRE(stats.sup_history.size() == 100);
  CHECK(std::isfinite(stats.final_g_loss));
  CHECK(std::isfinite(stats.final_d_loss));

  auto avg = [&](size_t lo, size_t hi) {
    double s = 0;
    for (size_t i = lo; i < hi; ++i) s += stats.sup_history[i];
    return s / (hi - lo);
  };
  double head = avg(0, 10);
  double tail = avg(stats.sup_history.size() - 10, stats.sup_history.size());
  CHECK(tail < head);

  // deterministic end to end: identical seeds give identical parameters
  GeneratorNet gen2(cfg);
  DiscriminatorNet dsc2(cfg);
  AdvEstTrainStats stats2 = TrainAdvEst(&gen2, &dsc2, fx.db, opts, 2024);
  CHECK(gen2.params().Checksum() == gen.params().Checksum());
  CHECK(dsc2.params().Checksum() == dsc.params().Checksum());
  CHECK(stats2.final_g_loss == stats.final_g_loss);
}

TEST_CASE("training rejects an empty record selection") {
  const auto &fx = AdvEstFixture::Get();
  AdvEstConfig cfg = SmallConfig();
  GeneratorNet gen(cfg);
  DiscriminatorNet dsc(cfg);
  AdvEstTrainOpts opts;
  opts.cycles = 1;
  opts.exclude_labels = {"benign", "fgsm", "pgd_linf"};
  CHECK_THROWS_AS(TrainAdvEst(&gen, &dsc, fx.db, opts, 1), Error);

  // excluding one class still trains
  opts.exclude_labels = {"pgd_linf"};
  opts.cycles = 2;
  AdvEstTrainStats stats = TrainAdvEst(&gen, &dsc, fx.db, opts, 1);
  CHECK(stats.steps_g == 4);
  CHECK(std::isfinite(stats.final_g_loss));
}

TEST_CASE("training without supervision still optimizes the pairwise loss") {
  const auto &fx = AdvEstFixture::Get();
  AdvEstConfig cfg = SmallConfig();
  GeneratorNet gen(cfg);
  DiscriminatorNet dsc(cfg);
  AdvEstTrainOpts opts;
  opts.cycles = 3;
  opts.lambda_sup = 0.0;
  AdvEstTrainStats stats = TrainAdvEst(&gen, &dsc, fx.db, opts, 5);
  CHECK(std::isfinite(stats.final_g_loss));
  CHECK(std::isfinite(stats.final_d_loss));
  // with a zero weight the supervision term contributes nothing to the loss
  CHECK(stats.final_g_loss != 0.0);
}
