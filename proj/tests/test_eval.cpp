// tests/test_eval.cpp
// Equal error rate against an exhaustive oracle, confusion-matrix identities,
// verification trial bookkeeping, nearest-centroid detection and the full
// task suite.

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

#include "advsig/eval.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>

#include "advsig/synth.hpp"

using namespace advsig;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &tag) {
    path = fs::temp_directory_path() / ("advsig_eval_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

bool BitEqualMat(const Eigen::MatrixXf &a, const Eigen::MatrixXf &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a.array() == b.array()).all();
}

/// Independent EER oracle: enumerate every operating point of the
/// accept-at-least-threshold family, then take the global minimum of
/// max(FAR, FRR) over all linearly interpolated ROC segments.
double OracleEer(std::vector<double> tgt, std::vector<double> non) {
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());
  std::vector<double> thr(tgt);
  thr.insert(thr.end(), non.begin(), non.end());
  std::sort(thr.begin(), thr.end());
  thr.erase(std::unique(thr.begin(), thr.end()), thr.end());

  std::vector<std::pair<double, double>> pts;  // (far, frr)
  pts.emplace_back(1.0, 0.0);
  for (double s : thr) {
    double far = static_cast<double>(non.end() - std::lower_bound(non.begin(), non.end(), s)) /
                 static_cast<double>(non.size());
    double frr = static_cast<double>(std::lower_bound(tgt.begin(), tgt.end(), s) - tgt.begin()) /
                 static_cast<double>(tgt.size());
    pts.emplace_back(far, frr);
  }
  pts.emplace_back(0.0, 1.0);

  double best = 1.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto [fa, ra] = pts[i];
    const auto [fb, rb] = pts[i + 1];
    std::vector<double> alphas = {0.0, 1.0};
    const double da = fa - ra, db = fb - rb;
    if (da != db) {
      const double ax = da / (da - db);
      if (ax > 0.0 && ax < 1.0) alphas.push_back(ax);
    }
    for (double a : alphas) {
      const double far = fa + a * (fb - fa);
      const double frr = ra + a * (rb - ra);
      best = std::min(best, std::max(far, frr));
    }
  }
  return best;
}

EmbeddingSet MakeEmbs(const std::vector<std::pair<std::string, Eigen::VectorXf>> &items) {
  EmbeddingSet es;
  REQUIRE(!items.empty());
  es.vecs.resize(items[0].second.size(), static_cast<Eigen::Index>(items.size()));
  for (size_t i = 0; i < items.size(); ++i) {
    es.ids.push_back("id" + std::to_string(i));
    es.labels.push_back(items[i].first);
    es.input_kinds.push_back("attacked");
    es.vecs.col(static_cast<Eigen::Index>(i)) = items[i].second;
  }
  return es;
}

Eigen::VectorXf Axis(int dim, int k, float v = 1.0f) {
  Eigen::VectorXf e = Eigen::VectorXf::Zero(dim);
  e[k] = v;
  return e;
}

/// Victim, attack database, a held-out split and a two-class signature
/// extractor shared by the heavier tests.
struct EvalFixture {
  std::vector<LabeledWave> corpus;
  Classifier victim;
  TempDir tmp{"fixture"};
  AttackDb db, enroll_db, eval_db;
  std::unique_ptr<Classifier> extractor;

  static XvecConfig VictimConfig() {
    XvecConfig cfg;
    cfg.num_classes = 5;
    cfg.channels = 16;
    cfg.num_blocks = 1;
    cfg.embed_dim = 16;
    return cfg;
  }

  static XvecConfig SigArch() {
    XvecConfig cfg;
    cfg.num_classes = 2;
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

  EvalFixture() : victim(VictimConfig(), "victim") {
    SynthSpec spec;
    spec.num_speakers = 5;
    spec.utterances_per_speaker = 8;
    spec.duration_s = 1.0;
    spec.seed = 909;
    corpus = SynthCorpus(spec);
    XvecTrainOpts topts;
    topts.epochs = 8;
    topts.batch = 8;
    topts.crop_seconds = 0.6;
    TrainClassifier(&victim, corpus, topts, 41);

    AttackDbSpec dspec;
    dspec.classes = {AttackClass::Benign, AttackClass::Fgsm, AttackClass::IterFgsm,
                     AttackClass::PgdL2, AttackClass::CwL2};
    // this victim shrugs off single sign steps below ~0.02
    dspec.ranges.linf_eps_lo = 0.02;
    dspec.ranges.linf_eps_hi = 0.2;
    dspec.fraction = 0.75;
    dspec.seed = 11;
    db = GenerateAttackDb(victim, corpus, dspec, (tmp.path / "db").string());
    SplitAttackDb(db, 0.3, 77, &enroll_db, &eval_db);

    SignatureTrainOpts sopts;
    sopts.arch = SigArch();
    sopts.train.epochs = 8;
    sopts.train.batch = 8;
    sopts.train.crop_seconds = 0.6;
    extractor = std::make_unique<Classifier>(TrainSignature(
        enroll_db, {"fgsm", "pgd_l2"}, SignatureMode::Oracle, nullptr, sopts, 2100));
  }

  static const EvalFixture &Get() {
    static EvalFixture fx;
    return fx;
  }
};

}  // namespace

TEST_CASE("eer handles the canonical separations") {
  CHECK(EerFromScores({0.9, 0.8}, {0.1, 0.2}) == doctest::Approx(0.0).epsilon(1e-12));
  // both sides drawn from the identical score list: chance
  CHECK(EerFromScores({0.3, 0.5, 0.7}, {0.3, 0.5, 0.7}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(EerFromScores({0.5}, {0.5}) == doctest::Approx(0.5).epsilon(1e-12));
  // completely inverted scores
  CHECK(EerFromScores({0.1, 0.2}, {0.8, 0.9}) == doctest::Approx(1.0).epsilon(1e-12));

  TrialSet ts;
  ts.trials = {{0.9, true}, {0.1, false}};
  CHECK(ComputeEer(ts) == doctest::Approx(0.0).epsilon(1e-12));
  ts.trials = {{0.9, true}, {0.8, true}};
  CHECK_THROWS_AS(ComputeEer(ts), Error);
  CHECK_THROWS_AS(EerFromScores({}, {0.1}), Error);
  CHECK_THROWS_AS(EerFromScores({0.5, std::nan("")}, {0.1}), Error);
}

TEST_CASE("eer matches an exhaustive threshold oracle on random trial sets") {
  Rng rng(20260825);
  for (int rep = 0; rep < 100; ++rep) {
    const int nt = static_cast<int>(std::lround(std::exp(rng.Uniform(std::log(5.0), std::log(5000.0)))));
    const int nn = static_cast<int>(std::lround(std::exp(rng.Uniform(std::log(5.0), std::log(5000.0)))));
    const bool quantize = rng.Uniform() < 0.5;  // force heavy ties half the time
    const int levels = static_cast<int>(rng.UniformInt(5, 50));
    auto draw = [&](double shift) {
      double s = rng.Normal() + shift;
      if (quantize) s = std::round(s * levels) / levels;
      return s;
    };
    std::vector<double> tgt, non;
    for (int i = 0; i < nt; ++i) tgt.push_back(draw(1.0));
    for (int i = 0; i < nn; ++i) non.push_back(draw(0.0));
    const double got = EerFromScores(tgt, non);
    const double want = OracleEer(tgt, non);
    CHECK(std::abs(got - want) < 1e-9);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("eer is invariant under monotone score transforms") {
  Rng rng(11);
  std::vector<double> tgt, non;
  for (int i = 0; i < 400; ++i) tgt.push_back(rng.Uniform(-5.0, 5.0) + 1.0);
  for (int i = 0; i < 900; ++i) non.push_back(rng.Uniform(-5.0, 5.0));
  const double base = EerFromScores(tgt, non);

  auto transformed = [&](auto f) {
    std::vector<double> t2, n2;
    for (double s : tgt) t2.push_back(f(s));
    for (double s : non) n2.push_back(f(s));
    return EerFromScores(t2, n2);
  };
  CHECK(transformed([](double s) { return 2.0 * s + 3.0; }) == base);
  CHECK(transformed([](double s) { return std::tanh(s); }) == base);
  CHECK(transformed([](double s) { return s * s * s; }) == base);
}

TEST_CASE("confusion matrix conserves counts and matches accuracy") {
  const auto &fx = EvalFixture::Get();
  SignatureDataset ds = BuildSignatureDataset(fx.eval_db, {"fgsm", "pgd_l2"},
                                              SignatureMode::Oracle, true, nullptr);
  ClassificationResult res = ClassifyKnown(*fx.extractor, ds);

  CHECK(res.confusion.sum() == doctest::Approx(static_cast<double>(ds.data.size())));
  CHECK(res.accuracy ==
        doctest::Approx(res.confusion.trace() / static_cast<double>(ds.data.size())));
  CHECK(res.accuracy == EvalAccuracy(*fx.extractor, ds.data));
  Eigen::MatrixXd pct = res.RowPercent();
  for (Eigen::Index r = 0; r < pct.rows(); ++r) {
    const double s = res.confusion.row(r).sum();
    if (s > 0) CHECK(pct.row(r).sum() == doctest::Approx(100.0));
  }

  // label outside the class range
  SignatureDataset bad = ds;
  bad.data.front().label = 7;
  CHECK_THROWS_AS(ClassifyKnown(*fx.extractor, bad), Error);

  // extractor and dataset disagree on the class count
  SignatureDataset wide = BuildSignatureDataset(fx.eval_db, {"fgsm", "iter_fgsm", "pgd_l2"},
                                                SignatureMode::Oracle, true, nullptr);
  CHECK_THROWS_AS(ClassifyKnown(*fx.extractor, wide), Error);
}

TEST_CASE("verification trials: bookkeeping, symmetry and self-similarity") {
  const int dim = 8;
  std::vector<std::pair<std::string, Eigen::VectorXf>> items;
  for (int i = 0; i < 5; ++i) items.emplace_back("alpha", Axis(dim, i % 4));
  for (int i = 0; i < 4; ++i) items.emplace_back("beta", Axis(dim, 4 + i % 3));
  items.emplace_back("gamma", Axis(dim, 7));
  EmbeddingSet es = MakeEmbs(items);

  VerificationOpts opts;
  opts.targets_per_class = 4;
  opts.nontarget_factor = 3;
  Rng rng(99);
  TrialSet ts = MakeVerificationTrials(es, opts, &rng);
  CHECK(ts.task == "verification");
  // alpha and beta contribute 4 targets each, the singleton none
  CHECK(ts.Targets() == 8);
  // 24 wanted non-targets over pools alpha|beta (20), alpha|gamma (5), beta|gamma (4)
  CHECK(ts.Nontargets() == 8 + 5 + 4);
  CHECK(ts.meta.at("pair_counts").at("gamma|gamma") == 0);
  CHECK(ts.meta.at("pair_counts").at("alpha|beta") == 8);
  CHECK(ts.meta.at("pair_counts").at("alpha|gamma") == 5);

  // when availability permits, the requested ratio is met exactly
  std::vector<std::pair<std::string, Eigen::VectorXf>> ample;
  for (int i = 0; i < 5; ++i) ample.emplace_back("alpha", Axis(dim, i % 4));
  for (int i = 0; i < 5; ++i) ample.emplace_back("beta", Axis(dim, 4 + i % 3));
  Rng rng2(99);
  TrialSet full = MakeVerificationTrials(MakeEmbs(ample), opts, &rng2);
  CHECK(full.Targets() == 8);
  CHECK(full.Nontargets() == opts.nontarget_factor * full.Targets());

  // identical pair scores one, orthogonal cross pair scores zero
  std::vector<std::pair<std::string, Eigen::VectorXf>> tiny = {
      {"p", Axis(4, 0)}, {"p", Axis(4, 0)}, {"q", Axis(4, 1)}};
  Rng rng3(7);
  TrialSet t3 = MakeVerificationTrials(MakeEmbs(tiny), opts, &rng3);
  REQUIRE(t3.Targets() == 1);
  for (const Trial &t : t3.trials) {
    if (t.is_target) CHECK(t.score == doctest::Approx(1.0).epsilon(1e-12));
    else CHECK(t.score == doctest::Approx(0.0).epsilon(1e-12));
  }

  // cosine is symmetric in its arguments
  const Eigen::VectorXd a = es.vecs.col(0).cast<double>();
  const Eigen::VectorXd b = es.vecs.col(5).cast<double>();
  CHECK(a.dot(b) == doctest::Approx(b.dot(a)).epsilon(1e-12));

  // deterministic for a fixed seed
  Rng r1(99), r2(99);
  TrialSet d1 = MakeVerificationTrials(es, opts, &r1);
  TrialSet d2 = MakeVerificationTrials(es, opts, &r2);
  CHECK(d1.refs == d2.refs);

  CHECK_THROWS_AS(MakeVerificationTrials(MakeEmbs({{"solo", Axis(4, 0)}}), opts, &rng), Error);
}

TEST_CASE("unknown detection scores embeddings against known centroids") {
  const int dim = 4;
  const Eigen::VectorXf ka_centroid = (Axis(dim, 0) + Axis(dim, 1)).normalized();
  EmbeddingSet enroll = MakeEmbs({{"ka", Axis(dim, 0)},
                                  {"ka", Axis(dim, 1)},
                                  {"kb", Axis(dim, 2)},
                                  {"benign", Axis(dim, 3)}});
  EmbeddingSet eval_set = MakeEmbs({{"ka", ka_centroid},
                                    {"ux", (Axis(dim, 0) - Axis(dim, 1)).normalized()},
                                    {"benign", Axis(dim, 3)}});

  AttackGroupSplit split;
  split.known = {"ka", "kb"};
  split.unknown = {"ux"};

  TrialSet without = UnknownDetectionScores(enroll, eval_set, split, false);
  CHECK(without.group == "without_benign");
  REQUIRE(without.trials.size() == 2);  // the benign record is dropped
  for (const std::string &ref : without.refs) CHECK(ref != "id2");
  CHECK(without.trials[0].is_target);
  CHECK(without.trials[0].score == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(without.trials[1].is_target);
  CHECK(without.trials[1].score == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(ComputeEer(without) == doctest::Approx(0.0).epsilon(1e-9));

  TrialSet with = UnknownDetectionScores(enroll, eval_set, split, true);
  CHECK(with.group == "with_benign");
  REQUIRE(with.trials.size() == 3);
  CHECK(with.Targets() == 2);  // the benign record now counts as known
  CHECK(ComputeEer(with) == doctest::Approx(0.0).epsilon(1e-9));

  // a known class without enrollment embeddings is an error
  AttackGroupSplit missing;
  missing.known = {"ka", "kc"};
  missing.unknown = {"ux"};
  CHECK_THROWS_AS(UnknownDetectionScores(enroll, eval_set, missing, false), Error);

  AttackGroupSplit overlap;
  overlap.known = {"ka"};
  overlap.unknown = {"ka"};
  CHECK_THROWS_AS(overlap.Validate(), Error);
  AttackGroupSplit listed;
  listed.known = {"benign"};
  listed.unknown = {"ux"};
  CHECK_THROWS_AS(listed.Validate(), Error);
}

TEST_CASE("embedding sets extract, filter and round-trip through disk") {
  const auto &fx = EvalFixture::Get();
  TempDir td("dump");
  SignatureDataset ds = BuildSignatureDataset(fx.eval_db, {"fgsm", "pgd_l2"},
                                              SignatureMode::Oracle, true, nullptr);
  EmbeddingSet es = EmbedDataset(*fx.extractor, ds);
  REQUIRE(es.Count() == static_cast<int>(ds.data.size()));
  for (int i = 0; i < es.Count(); ++i) {
    CHECK(std::abs(es.vecs.col(i).norm() - 1.0f) < 1e-4f);
    CHECK(es.labels[i] == ds.classes[static_cast<size_t>(ds.data[i].label)]);
    CHECK(es.input_kinds[i] == "true_delta");
  }

  EmbeddingSet only = FilterByLabel(es, {"fgsm"});
  int want = 0;
  for (const auto &l : es.labels)
    if (l == "fgsm") ++want;
  CHECK(only.Count() == want);
  for (const auto &l : only.labels) CHECK(l == "fgsm");

  const std::string mat = (td.path / "e.emb").string();
  const std::string key = (td.path / "e.jsonl").string();
  SaveEmbeddingSet(es, mat, key);
  EmbeddingSet back = LoadEmbeddingSet(mat, key);
  CHECK(back.ids == es.ids);
  CHECK(back.labels == es.labels);
  CHECK(back.input_kinds == es.input_kinds);
  CHECK(BitEqualMat(back.vecs, es.vecs));

  std::ofstream junk((td.path / "junk.emb").string(), std::ios::binary);
  junk << "not an embedding dump";
  junk.close();
  CHECK_THROWS_AS(LoadEmbeddingSet((td.path / "junk.emb").string(), key), Error);
}

TEST_CASE("attack database records split per class deterministically") {
  const auto &fx = EvalFixture::Get();
  AttackDb enroll, eval_out;
  SplitAttackDb(fx.db, 0.3, 77, &enroll, &eval_out);
  CHECK(enroll.records.size() + eval_out.records.size() == fx.db.records.size());

  std::set<std::string> seen;
  for (const auto &r : enroll.records) seen.insert(r.record_id);
  for (const auto &r : eval_out.records) CHECK(seen.count(r.record_id) == 0);

  std::map<std::string, int> total, n_eval;
  for (const auto &r : fx.db.records) ++total[r.label];
  for (const auto &r : eval_out.records) ++n_eval[r.label];
  for (const auto &[label, n] : total)
    CHECK(n_eval[label] == static_cast<int>(std::lround(0.3 * n)));

  AttackDb enroll2, eval2;
  SplitAttackDb(fx.db, 0.3, 77, &enroll2, &eval2);
  REQUIRE(enroll2.records.size() == enroll.records.size());
  for (size_t i = 0; i < enroll.records.size(); ++i)
    CHECK(enroll2.records[i].record_id == enroll.records[i].record_id);

  CHECK_THROWS_AS(SplitAttackDb(fx.db, 0.0, 1, &enroll, &eval_out), Error);
  CHECK_THROWS_AS(SplitAttackDb(fx.db, 1.0, 1, &enroll, &eval_out), Error);
}

TEST_CASE("the task suite reports the seven headline numbers and audits inputs") {
  const auto &fx = EvalFixture::Get();
  TaskSuiteConfig cfg;
  cfg.mode = SignatureMode::Oracle;
  cfg.task1_classes = {"fgsm", "pgd_l2"};
  cfg.split.known = {"fgsm", "pgd_l2"};
  cfg.split.unknown = {"iter_fgsm", "cw_l2"};
  cfg.verify.targets_per_class = 60;
  cfg.seed = 5;

  TaskSuiteInputs in;
  in.enroll_db = &fx.enroll_db;
  in.eval_db = &fx.eval_db;
  in.extractor = fx.extractor.get();

  std::vector<Json> audit;
  Json rep = RunTaskSuite(in, cfg, &audit);

  const Json &t1 = rep.at("task1");
  CHECK(t1.at("accuracy").is_number());
  CHECK(t1.at("classes") == Json(cfg.task1_classes));
  double conf_sum = 0;
  for (const auto &row : t1.at("confusion"))
    for (const auto &v : row) conf_sum += v.get<double>();
  CHECK(conf_sum == doctest::Approx(t1.at("num_eval").get<double>()));

  for (const char *grp : {"known", "unknown", "known_unknown"}) {
    const Json &e = rep.at("task2").at(grp);
    REQUIRE_MESSAGE(!e.is_null(), grp);
    CHECK(e.at("eer").get<double>() >= 0.0);
    CHECK(e.at("eer").get<double>() <= 1.0);
    CHECK(e.at("targets").get<int>() > 0);
    CHECK(e.at("nontargets").get<int>() > 0);
  }
  for (const char *grp : {"without_benign", "with_benign"}) {
    const Json &e = rep.at("task3").at(grp);
    REQUIRE_MESSAGE(!e.is_null(), grp);
    CHECK(e.at("eer").get<double>() >= 0.0);
    CHECK(e.at("eer").get<double>() <= 1.0);
    CHECK(e.at("targets").get<int>() > 0);
    CHECK(e.at("nontargets").get<int>() > 0);
  }

  REQUIRE(!audit.empty());
  std::set<std::string> tasks;
  for (const Json &row : audit) {
    tasks.insert(row.at("task").get<std::string>());
    const bool benign = row.at("label") == "benign";
    CHECK(row.at("input") == (benign ? "raw_benign" : "true_delta"));
    CHECK(row.at("phase") == "eval");
  }
  CHECK(tasks == std::set<std::string>{"task1", "task2", "task3_enroll", "task3_eval"});

  Json rep2 = RunTaskSuite(in, cfg, nullptr);
  CHECK(rep.dump() == rep2.dump());

  TaskSuiteInputs missing = in;
  missing.extractor = nullptr;
  try {
    RunTaskSuite(missing, cfg, nullptr);
    FAIL("expected a missing-artifact error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("extractor") != std::string::npos);
  }
}

TEST_CASE("estimated-mode suite wires the two estimators") {
  const auto &fx = EvalFixture::Get();
  TempDir td("est");

  GeneratorNet zero_gen(EvalFixture::GenConfig());
  Rng zr(3);
  zero_gen.InitParams(&zr);
  for (size_t i = 0; i < zero_gen.params().size(); ++i) zero_gen.params().At(i).setZero();
  GeneratorNet rand_gen(EvalFixture::GenConfig());
  Rng rr(4);
  rand_gen.InitParams(&rr);

  TaskSuiteConfig cfg;
  cfg.mode = SignatureMode::Estimated;
  cfg.task1_classes = {"fgsm", "pgd_l2"};
  cfg.split.known = {"fgsm", "pgd_l2"};
  cfg.split.unknown = {"cw_l2"};
  cfg.with_benign_variant = false;
  cfg.seed = 5;
  cfg.dump_dir = (td.path / "dumps").string();

  TaskSuiteInputs in;
  in.enroll_db = &fx.enroll_db;
  in.eval_db = &fx.eval_db;
  in.extractor = fx.extractor.get();
  in.gen = &zero_gen;
  in.gen_detect = &rand_gen;

  std::vector<Json> audit;
  Json rep = RunTaskSuite(in, cfg, &audit);

  for (const Json &row : audit) {
    const bool benign = row.at("label") == "benign";
    CHECK(row.at("input") == (benign ? "raw_benign" : "estimated_delta"));
  }
  // a single unknown class cannot form verification trials
  CHECK(rep.at("task2").at("unknown").is_null());
  CHECK(rep.at("task3").at("with_benign").is_null());
  CHECK_FALSE(rep.at("task3").at("without_benign").is_null());

  // the zeroed estimator passes the attacked waveform through, so the
  // task-2 embeddings must match embedding the attacked inputs directly
  std::vector<std::string> attack_classes = {"fgsm", "pgd_l2", "cw_l2"};
  SignatureDataset ds_x = BuildSignatureDataset(fx.eval_db, attack_classes,
                                                SignatureMode::Baseline, true, nullptr);
  EmbeddingSet direct = EmbedDataset(*fx.extractor, ds_x);
  EmbeddingSet dumped = LoadEmbeddingSet((td.path / "dumps" / "task2_eval.emb").string(),
                                         (td.path / "dumps" / "task2_eval.jsonl").string());
  REQUIRE(dumped.ids == direct.ids);
  CHECK(BitEqualMat(dumped.vecs, direct.vecs));

  // task 3 runs through the second estimator, whose output differs
  SignatureDataset ds3_x = BuildSignatureDataset(fx.eval_db, attack_classes,
                                                 SignatureMode::Baseline, true, nullptr);
  EmbeddingSet direct3 = EmbedDataset(*fx.extractor, ds3_x);
  EmbeddingSet dumped3 = LoadEmbeddingSet((td.path / "dumps" / "task3_eval.emb").string(),
                                          (td.path / "dumps" / "task3_eval.jsonl").string());
  REQUIRE(dumped3.ids == direct3.ids);
  CHECK_FALSE(BitEqualMat(dumped3.vecs, direct3.vecs));

  TaskSuiteInputs nogen = in;
  nogen.gen = nullptr;
  try {
    RunTaskSuite(nogen, cfg, nullptr);
    FAIL("expected a missing-estimator error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("estimator") != std::string::npos);
  }
}
