// tests/test_signature.cpp
// Signature-input wiring: the train/eval input table, bit-exact input
// materialization per mode, dataset auditing and signature training.

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

#include "advsig/signature.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>

#include "advsig/synth.hpp"

using namespace advsig;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &tag) {
    path = fs::temp_directory_path() / ("advsig_signature_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

bool BitEqual(const Eigen::VectorXf &a, const Eigen::VectorXf &b) {
  if (a.size() != b.size()) return false;
  return (a.array() == b.array()).all();
}

/// Victim, attack database and an untrained perturbation estimator shared by
/// every test in this file.
struct SigFixture {
  std::vector<LabeledWave> corpus;
  Classifier victim;
  TempDir tmp{"fixture"};
  AttackDb db;
  GeneratorNet gen;

  static XvecConfig VictimConfig() {
    XvecConfig cfg;
    cfg.num_classes = 5;
    cfg.channels = 16;
    cfg.num_blocks = 1;
    cfg.embed_dim = 16;
    return cfg;
  }

  static AdvEstConfig GenConfig() {
    AdvEstConfig cfg;
    cfg.enc_channels = 16;
    cfg.bottleneck = 8;
    cfg.hidden = 16;
    cfg.tcn_blocks = 3;
    cfg.d_layers = 5;
    cfg.d_channels = 8;
    return cfg;
  }

  static XvecConfig SigArch() {
    XvecConfig cfg;
    cfg.num_classes = 4;
    cfg.channels = 16;
    cfg.num_blocks = 1;
    cfg.embed_dim = 16;
    return cfg;
  }

  SigFixture() : victim(VictimConfig(), "victim"), gen(GenConfig()) {
    SynthSpec spec;
    spec.num_speakers = 5;
    spec.utterances_per_speaker = 8;
    spec.duration_s = 1.0;
    spec.seed = 606;
    corpus = SynthCorpus(spec);
    XvecTrainOpts topts;
    topts.epochs = 8;
    topts.batch = 8;
    topts.crop_seconds = 0.6;
    TrainClassifier(&victim, corpus, topts, 31);

    AttackDbSpec dspec;
    dspec.classes = {AttackClass::Benign, AttackClass::Fgsm, AttackClass::PgdL2,
                     AttackClass::CwL2};
    // single sign steps need a generous budget before they flip anything
    dspec.ranges.linf_eps_lo = 1e-3;
    dspec.ranges.linf_eps_hi = 3e-2;
    dspec.fraction = 0.75;
    dspec.seed = 7;
    db = GenerateAttackDb(victim, corpus, dspec, (tmp.path / "db").string());

    Rng grng(DeriveSeed(99, "gen"));
    gen.InitParams(&grng);
  }

  static const SigFixture &Get() {
    static SigFixture fx;
    return fx;
  }

  const AttackRecord &FirstWith(const std::string &label) const {
    for (const AttackRecord &r : db.records)
      if (r.label == label) return r;
    REQUIRE(false);
    return db.records.front();
  }
};

}  // namespace

TEST_CASE("train and eval inputs follow the mode table") {
  CHECK(TrainInputFor(SignatureMode::Baseline) == SignatureInput::Attacked);
  CHECK(EvalInputFor(SignatureMode::Baseline) == SignatureInput::Attacked);
  CHECK(TrainInputFor(SignatureMode::Oracle) == SignatureInput::TrueDelta);
  CHECK(EvalInputFor(SignatureMode::Oracle) == SignatureInput::TrueDelta);
  CHECK(TrainInputFor(SignatureMode::Estimated) == SignatureInput::EstimatedDelta);
  CHECK(EvalInputFor(SignatureMode::Estimated) == SignatureInput::EstimatedDelta);
  CHECK(TrainInputFor(SignatureMode::Proposed) == SignatureInput::TrueDelta);
  CHECK(EvalInputFor(SignatureMode::Proposed) == SignatureInput::EstimatedDelta);
}

TEST_CASE("mode and input names round-trip") {
  for (SignatureMode m : AllSignatureModes()) CHECK(SignatureModeFromName(SignatureModeName(m)) == m);
  CHECK(std::string(SignatureModeName(SignatureMode::Proposed)) == "proposed");
  CHECK(std::string(SignatureInputName(SignatureInput::TrueDelta)) == "true_delta");
  CHECK(std::string(SignatureInputName(SignatureInput::RawBenign)) == "raw_benign");
  CHECK_THROWS_AS(SignatureModeFromName("tabula_rasa"), Error);
}

TEST_CASE("benign rows fall back to the raw waveform in perturbation modes") {
  CHECK(EffectiveInput("benign", SignatureInput::TrueDelta) == SignatureInput::RawBenign);
  CHECK(EffectiveInput("benign", SignatureInput::EstimatedDelta) == SignatureInput::RawBenign);
  CHECK(EffectiveInput("benign", SignatureInput::Attacked) == SignatureInput::Attacked);
  CHECK(EffectiveInput("fgsm", SignatureInput::TrueDelta) == SignatureInput::TrueDelta);
  CHECK(EffectiveInput("cw_l2", SignatureInput::EstimatedDelta) == SignatureInput::EstimatedDelta);
  CHECK_THROWS_AS(EffectiveInput("fgsm", SignatureInput::RawBenign), Error);
}

TEST_CASE("each input kind materializes the exact stored waveform") {
  const auto &fx = SigFixture::Get();
  const AttackRecord &atk = fx.FirstWith("pgd_l2");
  const AttackRecord &ben = fx.FirstWith("benign");

  Waveform adv = LoadRecordAdv(fx.db, atk);
  Waveform clean = LoadRecordBenign(fx.db, atk);

  Waveform attacked = MakeSignatureInput(fx.db, atk, SignatureInput::Attacked, nullptr);
  CHECK(BitEqual(attacked.samples, adv.samples));

  Waveform delta = MakeSignatureInput(fx.db, atk, SignatureInput::TrueDelta, nullptr);
  CHECK(BitEqual(delta.samples, (adv.samples - clean.samples).eval()));
  CHECK(delta.samples.cwiseAbs().maxCoeff() > 0.0f);

  Waveform est = MakeSignatureInput(fx.db, atk, SignatureInput::EstimatedDelta, &fx.gen);
  Waveform cleaned = fx.gen.Run(adv);
  CHECK(BitEqual(est.samples, (adv.samples - cleaned.samples).eval()));

  // benign rows: the attacked file is the benign file and the perturbation
  // is identically zero
  Waveform ben_attacked = MakeSignatureInput(fx.db, ben, SignatureInput::Attacked, nullptr);
  CHECK(BitEqual(ben_attacked.samples, LoadRecordBenign(fx.db, ben).samples));
  Waveform ben_delta = MakeSignatureInput(fx.db, ben, SignatureInput::TrueDelta, nullptr);
  CHECK(ben_delta.samples.cwiseAbs().maxCoeff() == 0.0f);
  Waveform ben_raw = MakeSignatureInput(fx.db, ben, SignatureInput::RawBenign, nullptr);
  CHECK(BitEqual(ben_raw.samples, LoadRecordBenign(fx.db, ben).samples));

  CHECK_THROWS_AS(MakeSignatureInput(fx.db, atk, SignatureInput::EstimatedDelta, nullptr), Error);
}

TEST_CASE("a zeroed generator hands the attacked waveform straight through") {
  const auto &fx = SigFixture::Get();
  GeneratorNet zg(SigFixture::GenConfig());
  Rng r(1);
  zg.InitParams(&r);
  for (size_t i = 0; i < zg.params().size(); ++i) zg.params().At(i).setZero();

  const AttackRecord &atk = fx.FirstWith("fgsm");
  Waveform adv = LoadRecordAdv(fx.db, atk);
  Waveform est = MakeSignatureInput(fx.db, atk, SignatureInput::EstimatedDelta, &zg);
  CHECK(BitEqual(est.samples, adv.samples));
}

TEST_CASE("dataset construction filters, labels and audits every record") {
  const auto &fx = SigFixture::Get();
  std::vector<std::string> classes = {"benign", "pgd_l2"};
  SignatureDataset ds =
      BuildSignatureDataset(fx.db, classes, SignatureMode::Oracle, /*eval_phase=*/false, nullptr);
  CHECK(ds.input == SignatureInput::TrueDelta);
  CHECK(ds.classes == classes);
  REQUIRE(ds.audit.size() == ds.data.size());

  size_t j = 0;
  for (const AttackRecord &rec : fx.db.records) {
    if (rec.label != "benign" && rec.label != "pgd_l2") continue;
    REQUIRE(j < ds.data.size());
    CHECK(ds.data[j].id == rec.record_id);
    CHECK(ds.classes[ds.data[j].label] == rec.label);
    CHECK(ds.audit[j].at("record_id") == rec.record_id);
    CHECK(ds.audit[j].at("mode") == "oracle");
    CHECK(ds.audit[j].at("phase") == "train");
    CHECK(ds.audit[j].at("label") == rec.label);
    if (rec.label == "benign") {
      // the raw-waveform benign convention, not a degenerate zero signal
      CHECK(ds.audit[j].at("input") == "raw_benign");
      CHECK(BitEqual(ds.data[j].wave.samples, LoadRecordBenign(fx.db, rec).samples));
      CHECK(ds.data[j].wave.samples.cwiseAbs().maxCoeff() > 0.0f);
    } else {
      CHECK(ds.audit[j].at("input") == "true_delta");
      Waveform adv = LoadRecordAdv(fx.db, rec);
      Waveform clean = LoadRecordBenign(fx.db, rec);
      CHECK(BitEqual(ds.data[j].wave.samples, (adv.samples - clean.samples).eval()));
    }
    ++j;
  }
  CHECK(j == ds.data.size());
  CHECK(std::is_sorted(ds.data.begin(), ds.data.end(),
                       [](const LabeledWave &a, const LabeledWave &b) { return a.id < b.id; }));

  CHECK_THROWS_AS(
      BuildSignatureDataset(fx.db, {}, SignatureMode::Oracle, false, nullptr), Error);
  CHECK_THROWS_AS(BuildSignatureDataset(fx.db, {"benign", "benign"}, SignatureMode::Oracle, false,
                                        nullptr),
                  Error);
  CHECK_THROWS_AS(
      BuildSignatureDataset(fx.db, {"cw_linf"}, SignatureMode::Oracle, false, nullptr), Error);
}

TEST_CASE("proposed mode trains on the true and evaluates on the estimated perturbation") {
  const auto &fx = SigFixture::Get();
  std::vector<std::string> classes = {"fgsm", "pgd_l2", "cw_l2"};

  SignatureDataset train_ds =
      BuildSignatureDataset(fx.db, classes, SignatureMode::Proposed, /*eval_phase=*/false, nullptr);
  SignatureDataset eval_ds =
      BuildSignatureDataset(fx.db, classes, SignatureMode::Proposed, /*eval_phase=*/true, &fx.gen);
  CHECK(train_ds.input == SignatureInput::TrueDelta);
  CHECK(eval_ds.input == SignatureInput::EstimatedDelta);
  REQUIRE(train_ds.data.size() == eval_ds.data.size());

  size_t j = 0;
  for (const AttackRecord &rec : fx.db.records) {
    if (std::find(classes.begin(), classes.end(), rec.label) == classes.end()) continue;
    CHECK(train_ds.data[j].id == rec.record_id);
    CHECK(eval_ds.data[j].id == rec.record_id);

    Waveform adv = LoadRecordAdv(fx.db, rec);
    Waveform clean = LoadRecordBenign(fx.db, rec);
    CHECK(BitEqual(train_ds.data[j].wave.samples, (adv.samples - clean.samples).eval()));
    CHECK(BitEqual(eval_ds.data[j].wave.samples,
                   (adv.samples - fx.gen.Run(adv).samples).eval()));

    CHECK(train_ds.audit[j].at("input") == "true_delta");
    CHECK(train_ds.audit[j].at("phase") == "train");
    CHECK(eval_ds.audit[j].at("input") == "estimated_delta");
    CHECK(eval_ds.audit[j].at("phase") == "eval");
    ++j;
  }
  CHECK(j == train_ds.data.size());

  CHECK_THROWS_AS(
      BuildSignatureDataset(fx.db, classes, SignatureMode::Proposed, true, nullptr), Error);
}

TEST_CASE("oracle-mode signatures separate four attack classes") {
  const auto &fx = SigFixture::Get();
  std::vector<std::string> classes = {"benign", "fgsm", "pgd_l2", "cw_l2"};
  SignatureDataset ds =
      BuildSignatureDataset(fx.db, classes, SignatureMode::Oracle, /*eval_phase=*/false, nullptr);

  std::array<int, 4> counts{};
  for (const LabeledWave &lw : ds.data) ++counts[static_cast<size_t>(lw.label)];
  for (size_t c = 0; c < counts.size(); ++c) {
    CAPTURE(classes[c]);
    REQUIRE(counts[c] >= 3);
  }

  std::vector<LabeledWave> train, hold;
  SplitByLabel(ds.data, 0.25, 17, &train, &hold);
  Classifier sig(SigFixture::SigArch(), "signature");
  XvecTrainOpts topts;
  topts.epochs = 10;
  topts.batch = 8;
  topts.crop_seconds = 0.6;
  TrainClassifier(&sig, train, topts, 2025);

  double acc = EvalAccuracy(sig, hold);
  CHECK(acc > 0.60);

  Eigen::VectorXf e = sig.Embed(ds.data.front().wave);
  CHECK(std::abs(e.norm() - 1.0f) < 1e-4f);

  // embeddings move less under a plain amplitude rescale than across classes
  std::vector<Eigen::VectorXf> he;
  he.reserve(hold.size());
  for (const LabeledWave &lw : hold) he.push_back(sig.Embed(lw.wave));
  double same_scale = 0, cross = 0;
  int n_same = 0, n_cross = 0;
  for (size_t i = 0; i < hold.size(); ++i) {
    Waveform half = hold[i].wave;
    half.samples *= 0.5f;
    same_scale += static_cast<double>(sig.Embed(half).dot(he[i]));
    ++n_same;
    for (size_t k = i + 1; k < hold.size(); ++k) {
      if (hold[k].label == hold[i].label) continue;
      cross += static_cast<double>(he[i].dot(he[k]));
      ++n_cross;
    }
  }
  REQUIRE(n_cross > 0);
  CHECK(same_scale / n_same > cross / n_cross);
}

TEST_CASE("signature training is deterministic and writes its audit log") {
  const auto &fx = SigFixture::Get();
  TempDir td("audit");
  std::vector<std::string> classes = {"benign", "fgsm", "pgd_l2", "cw_l2"};

  SignatureTrainOpts opts;
  opts.arch = SigFixture::SigArch();
  opts.arch.num_classes = 1;  // overridden by the class list
  opts.train.epochs = 3;
  opts.train.batch = 8;
  opts.train.crop_seconds = 0.6;
  opts.audit_log = (td.path / "audit.jsonl").string();

  SignatureDataset d1;
  Classifier m1 = TrainSignature(fx.db, classes, SignatureMode::Oracle, nullptr, opts, 505, &d1);
  CHECK(m1.kind() == "signature");
  CHECK(m1.config().num_classes == 4);

  std::vector<Json> rows = ReadJsonl(opts.audit_log);
  REQUIRE(rows.size() == d1.data.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].at("record_id") == d1.data[i].id);
    const bool benign = rows[i].at("label") == "benign";
    CHECK(rows[i].at("input") == (benign ? "raw_benign" : "true_delta"));
    CHECK(rows[i].at("phase") == "train");
  }

  Classifier m2 = TrainSignature(fx.db, classes, SignatureMode::Oracle, nullptr, opts, 505);
  CHECK(m1.net().params().Checksum() == m2.net().params().Checksum());
  Classifier m3 = TrainSignature(fx.db, classes, SignatureMode::Oracle, nullptr, opts, 506);
  CHECK(m1.net().params().Checksum() != m3.net().params().Checksum());
}

TEST_CASE("signature checkpoints round-trip with their kind tag") {
  const auto &fx = SigFixture::Get();
  TempDir td("ckpt");
  std::vector<std::string> classes = {"benign", "fgsm"};

  SignatureTrainOpts opts;
  opts.arch = SigFixture::SigArch();
  opts.train.epochs = 2;
  opts.train.batch = 8;
  opts.train.crop_seconds = 0.6;

  Classifier m = TrainSignature(fx.db, classes, SignatureMode::Oracle, nullptr, opts, 808);
  const std::string path = (td.path / "sig.ckpt").string();
  m.Save(path);

  Classifier back = Classifier::Load(path, "signature");
  Waveform probe = LoadRecordDelta(fx.db, fx.FirstWith("fgsm"));
  Prediction a = m.Predict(probe);
  Prediction b = back.Predict(probe);
  CHECK(a.label == b.label);
  CHECK(BitEqual(a.posteriors, b.posteriors));

  CHECK_THROWS_AS(Classifier::Load(path, "victim"), Error);
}
