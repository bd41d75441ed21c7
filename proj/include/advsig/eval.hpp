// advsig/eval.hpp
// The three signature tasks: known-attack classification (accuracy and
// confusion matrix), attack verification (pairwise cosine trials) and
// unknown-attack detection (nearest-centroid open-set scoring), with the
// equal-error-rate primitive they all report.

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

#ifndef ADVSIG_EVAL_HPP
#define ADVSIG_EVAL_HPP

#include <string>
#include <vector>

#include "advsig/signature.hpp"

namespace advsig {

// ---- trials and EER -----------------------------------------------------

struct Trial {
  double score = 0.0;
  bool is_target = false;
};

struct TrialSet {
  std::string task;   // "verification" or "detection"
  std::string group;  // e.g. "known", "unknown", "known_unknown", "without_benign"
  std::vector<Trial> trials;
  std::vector<std::string> refs;  // per-trial record reference(s)
  Json meta;

  int Targets() const;
  int Nontargets() const;
};

/// Equal error rate of an accept-if-score-at-least-threshold detector: the
/// rate where false acceptance meets false rejection, linearly interpolated
/// between adjacent operating points of the ROC. All trials tied at one
/// score move in a single threshold step. Needs at least one target and one
/// non-target score.
double EerFromScores(std::vector<double> target_scores, std::vector<double> nontarget_scores);
double ComputeEer(const TrialSet &ts);

// ---- known-attack classification ----------------------------------------

struct ClassificationResult {
  double accuracy = 0.0;
  Eigen::MatrixXd confusion;  // raw counts; rows true class, columns predicted
  std::vector<std::string> classes;

  /// Rows rescaled to percentages (all-zero rows stay zero).
  Eigen::MatrixXd RowPercent() const;
};

/// Scores every input with the extractor's classification head. The
/// extractor's class count must equal the dataset's.
ClassificationResult ClassifyKnown(const Classifier &extractor, const SignatureDataset &ds);

// ---- embedding sets -----------------------------------------------------

struct EmbeddingSet {
  std::vector<std::string> ids;
  std::vector<std::string> labels;       // class names, aligned with ids
  std::vector<std::string> input_kinds;  // what was embedded, for audits
  Eigen::MatrixXf vecs;                  // one unit-norm column per item

  int Count() const { return static_cast<int>(ids.size()); }
};

EmbeddingSet EmbedDataset(const Classifier &extractor, const SignatureDataset &ds);
EmbeddingSet FilterByLabel(const EmbeddingSet &es, const std::vector<std::string> &keep);

/// Binary matrix dump plus a JSON-Lines key file {record_id, label,
/// input_kind}, one row per column.
void SaveEmbeddingSet(const EmbeddingSet &es, const std::string &matrix_path,
                      const std::string &key_path);
EmbeddingSet LoadEmbeddingSet(const std::string &matrix_path, const std::string &key_path);

// ---- attack verification ------------------------------------------------

struct VerificationOpts {
  int targets_per_class = 200;      // same-class pairs requested per class
  int nontarget_factor = 3;         // non-targets per target overall
  int max_trials_per_pair = 10000;  // hard cap on any single class pair
};

/// Cosine-scored same-class (target) and cross-class (non-target) embedding
/// pairs, sampled without replacement and balanced per class pair up to
/// availability. Classes with fewer than two embeddings contribute no target
/// trials (warning). Deterministic given the rng state.
TrialSet MakeVerificationTrials(const EmbeddingSet &embs, const VerificationOpts &opts, Rng *rng);

// ---- unknown-attack detection -------------------------------------------

struct AttackGroupSplit {
  std::vector<std::string> known;
  std::vector<std::string> unknown;

  /// Both sides non-empty and disjoint; benign never appears here, the
  /// with_benign flag folds it in.
  void Validate() const;
};

/// The attack families seen in training versus the held-out novel family.
AttackGroupSplit DefaultGroupSplit();

/// Open-set scoring: each evaluation embedding scores its maximum cosine to
/// the known-class enrollment centroids (per-class mean, re-normalized);
/// targets are known-group records. with_benign folds the benign class into
/// the known group on both sides; otherwise benign records are dropped.
TrialSet UnknownDetectionScores(const EmbeddingSet &enroll, const EmbeddingSet &eval_set,
                                const AttackGroupSplit &split, bool with_benign);

// ---- the full task suite ------------------------------------------------

/// Deterministic per-class split of database records into an enrollment /
/// training share and an evaluation share.
void SplitAttackDb(const AttackDb &db, double eval_fraction, uint64_t seed, AttackDb *enroll,
                   AttackDb *eval_out);

struct TaskSuiteConfig {
  SignatureMode mode = SignatureMode::Baseline;
  std::vector<std::string> task1_classes;  // the extractor's own label space
  AttackGroupSplit split;                  // tasks 2 and 3
  VerificationOpts verify;
  bool with_benign_variant = true;  // also score detection with benign folded in
  uint64_t seed = 0;
  std::string dump_dir;  // embedding dumps land here when non-empty
};

struct TaskSuiteInputs {
  const AttackDb *enroll_db = nullptr;  // the extractor's training records
  const AttackDb *eval_db = nullptr;    // held-out records
  const Classifier *extractor = nullptr;
  const GeneratorNet *gen = nullptr;         // perturbation estimates, tasks 1-2
  const GeneratorNet *gen_detect = nullptr;  // leave-one-family-out estimates, task 3
};

/// Runs the three tasks for one mode: closed-set classification over the
/// extractor's classes, verification EERs for the known / unknown /
/// known+unknown groups, and open-set detection EERs with and without
/// benign. Verification groups with fewer than two classes present are
/// reported as null. Audit rows record what every evaluated record fed the
/// extractor.
Json RunTaskSuite(const TaskSuiteInputs &in, const TaskSuiteConfig &cfg,
                  std::vector<Json> *audit = nullptr);

}  // namespace advsig

#endif  // ADVSIG_EVAL_HPP
