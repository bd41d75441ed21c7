// src/eval.cpp

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <utility>

namespace advsig {

namespace fs = std::filesystem;

// ---- trials and EER -----------------------------------------------------

int TrialSet::Targets() const {
  int n = 0;
  for (const Trial &t : trials) n += t.is_target ? 1 : 0;
  return n;
}

int TrialSet::Nontargets() const { return static_cast<int>(trials.size()) - Targets(); }

double EerFromScores(std::vector<double> target_scores, std::vector<double> nontarget_scores) {
  Require(!target_scores.empty(), "eer: no target scores");
  Require(!nontarget_scores.empty(), "eer: no non-target scores");
  for (double s : target_scores) Require(std::isfinite(s), "eer: non-finite target score");
  for (double s : nontarget_scores) Require(std::isfinite(s), "eer: non-finite non-target score");

  std::vector<double> &t = target_scores;
  std::vector<double> &n = nontarget_scores;
  std::sort(t.begin(), t.end());
  std::sort(n.begin(), n.end());
  std::vector<double> thr;
  thr.reserve(t.size() + n.size());
  std::merge(t.begin(), t.end(), n.begin(), n.end(), std::back_inserter(thr));
  thr.erase(std::unique(thr.begin(), thr.end()), thr.end());

  // Sweep the accept-if-score >= threshold rule upward. The false-acceptance
  // rate falls from 1 to 0 while the false-rejection rate climbs from 0 to 1,
  // so their difference crosses zero exactly once; the EER sits on the ROC
  // segment bracketing that crossing.
  const double tp = static_cast<double>(t.size());
  const double np = static_cast<double>(n.size());
  double far_a = 1.0, frr_a = 0.0;
  for (size_t i = 0; i <= thr.size(); ++i) {
    double far_b = 0.0, frr_b = 1.0;
    if (i < thr.size()) {
      const double s = thr[i];
      far_b = static_cast<double>(n.end() - std::lower_bound(n.begin(), n.end(), s)) / np;
      frr_b = static_cast<double>(std::lower_bound(t.begin(), t.end(), s) - t.begin()) / tp;
    }
    const double d_a = frr_a - far_a;
    const double d_b = frr_b - far_b;
    if (d_b >= 0.0) {
      const double alpha = -d_a / (d_b - d_a);  // d_a < 0 <= d_b
      return far_a + alpha * (far_b - far_a);
    }
    far_a = far_b;
    frr_a = frr_b;
  }
  Fail("eer: no crossing found");
}

double ComputeEer(const TrialSet &ts) {
  std::vector<double> tgt, non;
  for (const Trial &t : ts.trials) (t.is_target ? tgt : non).push_back(t.score);
  return EerFromScores(std::move(tgt), std::move(non));
}

// ---- known-attack classification ----------------------------------------

Eigen::MatrixXd ClassificationResult::RowPercent() const {
  Eigen::MatrixXd out = confusion;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double s = out.row(r).sum();
    if (s > 0) out.row(r) *= 100.0 / s;
  }
  return out;
}

ClassificationResult ClassifyKnown(const Classifier &extractor, const SignatureDataset &ds) {
  const int k = static_cast<int>(ds.classes.size());
  Require(extractor.config().num_classes == k, "classify: extractor has ",
          extractor.config().num_classes, " classes but the dataset has ", k);
  Require(!ds.data.empty(), "classify: empty dataset");

  ClassificationResult res;
  res.classes = ds.classes;
  res.confusion = Eigen::MatrixXd::Zero(k, k);
  int correct = 0;
  for (const LabeledWave &lw : ds.data) {
    Require(lw.label >= 0 && lw.label < k, "classify: label out of range for '", lw.id, "'");
    Prediction p = extractor.Predict(lw.wave);
    res.confusion(lw.label, p.label) += 1.0;
    if (p.label == lw.label) ++correct;
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(ds.data.size());
  return res;
}

// ---- embedding sets -----------------------------------------------------

EmbeddingSet EmbedDataset(const Classifier &extractor, const SignatureDataset &ds) {
  Require(!ds.data.empty(), "embed: empty dataset");
  Require(ds.audit.size() == ds.data.size(), "embed: dataset audit out of step");
  EmbeddingSet es;
  const int n = static_cast<int>(ds.data.size());
  es.ids.resize(n);
  es.labels.resize(n);
  es.input_kinds.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXf e = extractor.Embed(ds.data[i].wave);
    if (i == 0) es.vecs.resize(e.size(), n);
    es.vecs.col(i) = e;
    es.ids[i] = ds.data[i].id;
    es.labels[i] = ds.classes.at(static_cast<size_t>(ds.data[i].label));
    es.input_kinds[i] = ds.audit[i].at("input").get<std::string>();
  }
  return es;
}

EmbeddingSet FilterByLabel(const EmbeddingSet &es, const std::vector<std::string> &keep) {
  std::set<std::string> want(keep.begin(), keep.end());
  EmbeddingSet out;
  std::vector<int> cols;
  for (int i = 0; i < es.Count(); ++i)
    if (want.count(es.labels[i])) cols.push_back(i);
  out.vecs.resize(es.vecs.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t k = 0; k < cols.size(); ++k) {
    out.vecs.col(static_cast<Eigen::Index>(k)) = es.vecs.col(cols[k]);
    out.ids.push_back(es.ids[cols[k]]);
    out.labels.push_back(es.labels[cols[k]]);
    out.input_kinds.push_back(es.input_kinds[cols[k]]);
  }
  return out;
}

namespace {
constexpr char kEmbMagic[9] = "ADSGEMB1";
}  // namespace

void SaveEmbeddingSet(const EmbeddingSet &es, const std::string &matrix_path,
                      const std::string &key_path) {
  const int n = es.Count();
  Require(n > 0, "embedding dump: empty set");
  Require(es.vecs.cols() == n && es.labels.size() == static_cast<size_t>(n) &&
              es.input_kinds.size() == static_cast<size_t>(n),
          "embedding dump: inconsistent set");
  std::ofstream os(matrix_path, std::ios::binary | std::ios::trunc);
  Require(os.good(), "cannot open '", matrix_path, "' for writing");
  os.write(kEmbMagic, 8);
  const int32_t dim = static_cast<int32_t>(es.vecs.rows());
  const int32_t cols = static_cast<int32_t>(n);
  os.write(reinterpret_cast<const char *>(&dim), sizeof dim);
  os.write(reinterpret_cast<const char *>(&cols), sizeof cols);
  os.write(reinterpret_cast<const char *>(es.vecs.data()),
           static_cast<std::streamsize>(sizeof(float)) * dim * cols);
  Require(os.good(), "write failed for '", matrix_path, "'");

  std::vector<Json> rows;
  rows.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    rows.push_back(Json{{"record_id", es.ids[i]},
                        {"label", es.labels[i]},
                        {"input_kind", es.input_kinds[i]}});
  WriteJsonl(key_path, rows);
}

EmbeddingSet LoadEmbeddingSet(const std::string &matrix_path, const std::string &key_path) {
  std::ifstream is(matrix_path, std::ios::binary);
  Require(is.good(), "cannot open '", matrix_path, "'");
  char magic[8];
  is.read(magic, 8);
  Require(is.good() && std::equal(magic, magic + 8, kEmbMagic), "'", matrix_path,
          "' is not an embedding dump");
  int32_t dim = 0, cols = 0;
  is.read(reinterpret_cast<char *>(&dim), sizeof dim);
  is.read(reinterpret_cast<char *>(&cols), sizeof cols);
  Require(is.good() && dim > 0 && cols > 0, "'", matrix_path, "': bad embedding dump header");
  EmbeddingSet es;
  es.vecs.resize(dim, cols);
  is.read(reinterpret_cast<char *>(es.vecs.data()),
          static_cast<std::streamsize>(sizeof(float)) * dim * cols);
  Require(is.good(), "'", matrix_path, "': truncated embedding dump");

  std::vector<Json> rows = ReadJsonl(key_path);
  Require(rows.size() == static_cast<size_t>(cols), "'", key_path, "': expected ", cols,
          " key rows, found ", rows.size());
  for (const Json &r : rows) {
    es.ids.push_back(r.at("record_id").get<std::string>());
    es.labels.push_back(r.at("label").get<std::string>());
    es.input_kinds.push_back(r.at("input_kind").get<std::string>());
  }
  return es;
}

// ---- attack verification ------------------------------------------------

namespace {

double Cosine(const EmbeddingSet &embs, int a, int b) {
  return embs.vecs.col(a).cast<double>().dot(embs.vecs.col(b).cast<double>());
}

}  // namespace

TrialSet MakeVerificationTrials(const EmbeddingSet &embs, const VerificationOpts &opts, Rng *rng) {
  Require(rng != nullptr, "verification: null rng");
  Require(opts.targets_per_class > 0, "verification: targets_per_class must be positive");
  Require(opts.nontarget_factor > 0, "verification: nontarget_factor must be positive");
  Require(opts.max_trials_per_pair > 0, "verification: max_trials_per_pair must be positive");
  Require(embs.Count() > 0, "verification: empty embedding set");

  std::map<std::string, std::vector<int>> groups;
  for (int i = 0; i < embs.Count(); ++i) groups[embs.labels[i]].push_back(i);
  Require(groups.size() >= 2, "verification: needs at least two classes, got ", groups.size());

  TrialSet ts;
  ts.task = "verification";
  Json pair_counts = Json::object();
  const long cap = opts.max_trials_per_pair;

  long targets = 0;
  for (const auto &[cls, idx] : groups) {
    const int m = static_cast<int>(idx.size());
    const std::string key = cls + "|" + cls;
    if (m < 2) {
      Warn("verification: class '", cls, "' has ", m, " embedding(s), no target trials");
      pair_counts[key] = 0;
      continue;
    }
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<size_t>(m) * (m - 1) / 2);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) pairs.emplace_back(idx[i], idx[j]);
    rng->Shuffle(&pairs);
    const long want = std::min({static_cast<long>(opts.targets_per_class), cap,
                                static_cast<long>(pairs.size())});
    for (long k = 0; k < want; ++k) {
      ts.trials.push_back({Cosine(embs, pairs[k].first, pairs[k].second), true});
      ts.refs.push_back(embs.ids[pairs[k].first] + "|" + embs.ids[pairs[k].second]);
    }
    pair_counts[key] = want;
    targets += want;
  }
  Require(targets > 0, "verification: no class has two embeddings");

  // the non-target budget is split as evenly as the cross-class pools allow
  std::vector<std::pair<std::string, std::string>> cross;
  for (auto a = groups.begin(); a != groups.end(); ++a)
    for (auto b = std::next(a); b != groups.end(); ++b) cross.emplace_back(a->first, b->first);
  const long want_total = static_cast<long>(opts.nontarget_factor) * targets;
  const long pools = static_cast<long>(cross.size());
  long nontargets = 0;
  for (size_t p = 0; p < cross.size(); ++p) {
    const long quota =
        want_total / pools + (static_cast<long>(p) < want_total % pools ? 1 : 0);
    const std::vector<int> &ia = groups[cross[p].first];
    const std::vector<int> &ib = groups[cross[p].second];
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(ia.size() * ib.size());
    for (int a : ia)
      for (int b : ib) pairs.emplace_back(a, b);
    rng->Shuffle(&pairs);
    const long want = std::min({quota, cap, static_cast<long>(pairs.size())});
    for (long k = 0; k < want; ++k) {
      ts.trials.push_back({Cosine(embs, pairs[k].first, pairs[k].second), false});
      ts.refs.push_back(embs.ids[pairs[k].first] + "|" + embs.ids[pairs[k].second]);
    }
    pair_counts[cross[p].first + "|" + cross[p].second] = want;
    nontargets += want;
  }
  ts.meta = Json{{"pair_counts", pair_counts}, {"targets", targets}, {"nontargets", nontargets}};
  return ts;
}

// ---- unknown-attack detection -------------------------------------------

void AttackGroupSplit::Validate() const {
  Require(!known.empty(), "group split: empty known set");
  Require(!unknown.empty(), "group split: empty unknown set");
  std::set<std::string> k(known.begin(), known.end());
  std::set<std::string> u(unknown.begin(), unknown.end());
  Require(k.size() == known.size(), "group split: duplicate known class");
  Require(u.size() == unknown.size(), "group split: duplicate unknown class");
  for (const std::string &c : known)
    Require(!u.count(c), "group split: class '", c, "' is both known and unknown");
  const std::string benign = AttackClassName(AttackClass::Benign);
  Require(!k.count(benign) && !u.count(benign),
          "group split: benign is folded in by the with_benign flag, not listed");
}

AttackGroupSplit DefaultGroupSplit() {
  return {{"fgsm", "iter_fgsm", "pgd_l1", "pgd_l2", "pgd_linf"}, {"cw_l0", "cw_l2", "cw_linf"}};
}

TrialSet UnknownDetectionScores(const EmbeddingSet &enroll, const EmbeddingSet &eval_set,
                                const AttackGroupSplit &split, bool with_benign) {
  split.Validate();
  Require(enroll.Count() > 0, "detection: empty enrollment set");
  Require(eval_set.Count() > 0, "detection: empty evaluation set");
  Require(enroll.vecs.rows() == eval_set.vecs.rows(),
          "detection: embedding dimensionality mismatch");

  std::vector<std::string> known = split.known;
  if (with_benign) known.push_back(AttackClassName(AttackClass::Benign));
  const std::set<std::string> known_set(known.begin(), known.end());
  const std::set<std::string> unknown_set(split.unknown.begin(), split.unknown.end());

  const Eigen::Index dim = enroll.vecs.rows();
  Eigen::MatrixXd centroids(dim, static_cast<Eigen::Index>(known.size()));
  for (size_t c = 0; c < known.size(); ++c) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    long count = 0;
    for (int i = 0; i < enroll.Count(); ++i) {
      if (enroll.labels[i] != known[c]) continue;
      acc += enroll.vecs.col(i).cast<double>();
      ++count;
    }
    Require(count > 0, "detection: no enrollment embeddings for class '", known[c], "'");
    acc /= static_cast<double>(count);
    const double norm = acc.norm();
    Require(norm > 0, "detection: zero centroid for class '", known[c], "'");
    centroids.col(static_cast<Eigen::Index>(c)) = acc / norm;
  }

  TrialSet ts;
  ts.task = "detection";
  ts.group = with_benign ? "with_benign" : "without_benign";
  long targets = 0, nontargets = 0;
  for (int i = 0; i < eval_set.Count(); ++i) {
    const std::string &lab = eval_set.labels[i];
    bool is_target = false;
    if (known_set.count(lab)) {
      is_target = true;
    } else if (!unknown_set.count(lab)) {
      continue;  // e.g. benign records without the with_benign flag
    }
    const double best = (centroids.transpose() * eval_set.vecs.col(i).cast<double>()).maxCoeff();
    ts.trials.push_back({best, is_target});
    ts.refs.push_back(eval_set.ids[i]);
    if (is_target) ++targets;
    else ++nontargets;
  }
  Require(!ts.trials.empty(), "detection: no scorable evaluation records");
  ts.meta = Json{{"known", known},
                 {"unknown", split.unknown},
                 {"targets", targets},
                 {"nontargets", nontargets}};
  return ts;
}

// ---- the full task suite ------------------------------------------------

void SplitAttackDb(const AttackDb &db, double eval_fraction, uint64_t seed, AttackDb *enroll,
                   AttackDb *eval_out) {
  Require(enroll != nullptr && eval_out != nullptr, "split: null output");
  Require(eval_fraction > 0.0 && eval_fraction < 1.0,
          "split: eval fraction must lie in (0, 1), got ", eval_fraction);
  enroll->dir = db.dir;
  eval_out->dir = db.dir;
  enroll->records.clear();
  eval_out->records.clear();

  std::map<std::string, std::vector<const AttackRecord *>> by_label;
  for (const AttackRecord &r : db.records) by_label[r.label].push_back(&r);
  for (auto &[label, recs] : by_label) {
    Rng rng(DeriveSeed(seed, "split-" + label));
    rng.Shuffle(&recs);
    const size_t ne = static_cast<size_t>(std::lround(eval_fraction * recs.size()));
    for (size_t k = 0; k < recs.size(); ++k)
      (k < ne ? eval_out : enroll)->records.push_back(*recs[k]);
  }
  auto by_id = [](const AttackRecord &a, const AttackRecord &b) {
    return a.record_id < b.record_id;
  };
  std::sort(enroll->records.begin(), enroll->records.end(), by_id);
  std::sort(eval_out->records.begin(), eval_out->records.end(), by_id);
}

namespace {

Json MatrixRows(const Eigen::MatrixXd &m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Json EerEntry(const TrialSet &ts) {
  return Json{{"eer", ComputeEer(ts)},
              {"trials", static_cast<int>(ts.trials.size())},
              {"targets", ts.Targets()},
              {"nontargets", ts.Nontargets()}};
}

size_t DistinctLabels(const EmbeddingSet &es) {
  return std::set<std::string>(es.labels.begin(), es.labels.end()).size();
}

bool HasLabel(const AttackDb &db, const std::string &label) {
  for (const AttackRecord &r : db.records)
    if (r.label == label) return true;
  return false;
}

}  // namespace

Json RunTaskSuite(const TaskSuiteInputs &in, const TaskSuiteConfig &cfg,
                  std::vector<Json> *audit) {
  Require(in.enroll_db != nullptr, "task suite: missing enrollment database");
  Require(in.eval_db != nullptr, "task suite: missing evaluation database");
  Require(in.extractor != nullptr, "task suite: missing signature extractor");
  Require(!cfg.task1_classes.empty(), "task suite: empty task-1 class list");
  cfg.split.Validate();

  const bool needs_gen = EvalInputFor(cfg.mode) == SignatureInput::EstimatedDelta;
  if (needs_gen) {
    Require(in.gen != nullptr, "task suite: missing perturbation estimator");
    Require(in.gen_detect != nullptr, "task suite: missing leave-out perturbation estimator");
  }
  const GeneratorNet *g12 = needs_gen ? in.gen : nullptr;
  const GeneratorNet *g3 = needs_gen ? in.gen_detect : nullptr;

  auto note = [&](const SignatureDataset &ds, const char *task) {
    if (audit == nullptr) return;
    for (const Json &row : ds.audit) {
      Json r = row;
      r["task"] = task;
      audit->push_back(std::move(r));
    }
  };
  auto maybe_dump = [&](const EmbeddingSet &es, const std::string &stem) {
    if (cfg.dump_dir.empty()) return;
    fs::create_directories(cfg.dump_dir);
    SaveEmbeddingSet(es, (fs::path(cfg.dump_dir) / (stem + ".emb")).string(),
                     (fs::path(cfg.dump_dir) / (stem + ".jsonl")).string());
  };

  Json report;
  report["mode"] = SignatureModeName(cfg.mode);
  report["seed"] = cfg.seed;
  report["counts"] = Json{{"enroll_records", in.enroll_db->records.size()},
                          {"eval_records", in.eval_db->records.size()}};

  // task 1: closed-set classification over the extractor's own classes
  SignatureDataset ds1 =
      BuildSignatureDataset(*in.eval_db, cfg.task1_classes, cfg.mode, /*eval_phase=*/true, g12);
  note(ds1, "task1");
  ClassificationResult cls = ClassifyKnown(*in.extractor, ds1);
  report["task1"] = Json{{"classes", cls.classes},
                         {"accuracy", cls.accuracy},
                         {"num_eval", static_cast<int>(ds1.data.size())},
                         {"confusion", MatrixRows(cls.confusion)},
                         {"confusion_row_percent", MatrixRows(cls.RowPercent())}};

  // task 2: verification over known and unknown attacks
  std::vector<std::string> attack_classes = cfg.split.known;
  attack_classes.insert(attack_classes.end(), cfg.split.unknown.begin(), cfg.split.unknown.end());
  SignatureDataset ds2 =
      BuildSignatureDataset(*in.eval_db, attack_classes, cfg.mode, /*eval_phase=*/true, g12);
  note(ds2, "task2");
  EmbeddingSet embs2 = EmbedDataset(*in.extractor, ds2);
  maybe_dump(embs2, "task2_eval");

  auto verify_group = [&](const EmbeddingSet &es, const std::string &group,
                          const std::string &rng_tag) -> Json {
    if (es.Count() == 0 || DistinctLabels(es) < 2) {
      Warn("verification group '", group, "' needs two classes with embeddings; skipped");
      return Json();
    }
    Rng rng(DeriveSeed(cfg.seed, "verify-" + rng_tag));
    TrialSet ts = MakeVerificationTrials(es, cfg.verify, &rng);
    ts.group = group;
    if (ts.Targets() == 0 || ts.Nontargets() == 0) {
      Warn("verification group '", group, "' has one-sided trials; skipped");
      return Json();
    }
    return EerEntry(ts);
  };
  report["task2"] =
      Json{{"known", verify_group(FilterByLabel(embs2, cfg.split.known), "known", "known")},
           {"unknown", verify_group(FilterByLabel(embs2, cfg.split.unknown), "unknown", "unknown")},
           {"known_unknown", verify_group(embs2, "known_unknown", "all")}};

  // task 3: open-set detection with the leave-out estimator
  const std::string benign = AttackClassName(AttackClass::Benign);
  const bool benign_available = cfg.with_benign_variant && HasLabel(*in.enroll_db, benign) &&
                                HasLabel(*in.eval_db, benign);
  if (cfg.with_benign_variant && !benign_available)
    Warn("task 3 with-benign variant skipped: no benign records on both sides");

  std::vector<std::string> enroll_classes = cfg.split.known;
  std::vector<std::string> eval_classes = attack_classes;
  if (benign_available) {
    enroll_classes.push_back(benign);
    eval_classes.push_back(benign);
  }
  SignatureDataset ds3e =
      BuildSignatureDataset(*in.enroll_db, enroll_classes, cfg.mode, /*eval_phase=*/true, g3);
  note(ds3e, "task3_enroll");
  SignatureDataset ds3v =
      BuildSignatureDataset(*in.eval_db, eval_classes, cfg.mode, /*eval_phase=*/true, g3);
  note(ds3v, "task3_eval");
  EmbeddingSet enroll3 = EmbedDataset(*in.extractor, ds3e);
  EmbeddingSet eval3 = EmbedDataset(*in.extractor, ds3v);
  maybe_dump(enroll3, "task3_enroll");
  maybe_dump(eval3, "task3_eval");

  TrialSet without = UnknownDetectionScores(enroll3, eval3, cfg.split, /*with_benign=*/false);
  Json task3 = Json{{"without_benign", EerEntry(without)}, {"with_benign", Json()}};
  if (benign_available) {
    TrialSet with = UnknownDetectionScores(enroll3, eval3, cfg.split, /*with_benign=*/true);
    task3["with_benign"] = EerEntry(with);
  }
  report["task3"] = std::move(task3);
  return report;
}

}  // namespace advsig
