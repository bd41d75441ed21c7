// advsig/attacks.hpp
// Gradient-based evasion attacks against a Classifier, hyperparameter
// sampling, and generation of the success-filtered attack database that the
// rest of the pipeline trains on.

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

#ifndef ADVSIG_ATTACKS_HPP
#define ADVSIG_ATTACKS_HPP

#include <optional>
#include <string>
#include <vector>

#include "advsig/data.hpp"
#include "advsig/jsonio.hpp"
#include "advsig/lp.hpp"
#include "advsig/rng.hpp"
#include "advsig/victim.hpp"

namespace advsig {

enum class AttackClass {
  Benign,
  Fgsm,
  IterFgsm,
  PgdL1,
  PgdL2,
  PgdLinf,
  CwL0,
  CwL2,
  CwLinf,
};

const char *AttackClassName(AttackClass c);
AttackClass AttackClassFromName(const std::string &name);
std::vector<AttackClass> AllAttackClasses();  // includes Benign
/// Lp family of an attack class; Benign has none.
std::optional<Norm> AttackClassNorm(AttackClass c);

/// Optional per-run internals exposed for tests.
struct AttackTrace {
  std::vector<double> iterate_norms;    // pgd: ||delta||_p after every step
  std::vector<double> candidate_norms;  // cw: norms of recorded successful iterates
  std::vector<int> support_sizes;       // cw_l0: support size per outer round
  double tau_final = 0;                 // cw_linf: last accepted threshold
};

struct AttackResult {
  Waveform adv;
  bool success = false;
  int y_pred = -1;
};

// ---- attacks -----------------------------------------------------------

struct FgsmOpts {
  double epsilon = 1e-3;
  double clip_lo = -1.0, clip_hi = 1.0;
};

/// The gradient-independent core of FGSM: x + epsilon * sign(grad), then a
/// box clip. For a linear loss w'x this is the exact maximizer over the
/// Linf ball.
Eigen::VectorXf FgsmStep(const Eigen::VectorXf &x, const Eigen::VectorXf &grad, double epsilon,
                         double clip_lo, double clip_hi);

AttackResult RunFgsm(const Classifier &model, const Waveform &x, int y, const FgsmOpts &opts);

struct PgdOpts {
  Norm p = Norm::LInf;
  double epsilon = 1e-3;
  int steps = 10;
  double alpha = 0.0;  // <= 0 picks 2.5 * epsilon / steps
  bool random_init = true;
  double l1_coord_fraction = 0.01;  // fraction of coords moved per L1 step
  double clip_lo = -1.0, clip_hi = 1.0;
};

AttackResult RunPgd(const Classifier &model, const Waveform &x, int y, const PgdOpts &opts,
                    Rng *rng, AttackTrace *trace = nullptr);

/// Iterative FGSM: projected sign steps without random initialization.
AttackResult RunIterFgsm(const Classifier &model, const Waveform &x, int y, double epsilon,
                         int steps, double alpha = 0.0, AttackTrace *trace = nullptr);

struct CwOpts {
  double kappa = 0.0;  // required logit margin for "success" inside the search
  int bsearch_steps = 5;
  int iters = 40;  // optimizer iterations per search step
  double lr = 1e-2;
  double c_init = 1.0;
  double clip_lo = -1.0, clip_hi = 1.0;
  // cw_l0
  int l0_max_rounds = 12;
  double l0_freeze_fraction = 0.2;  // fraction of active coords frozen per round
  double l0_target_support = 0;     // stop once support <= target (0 = shrink until failure)
  // cw_linf
  double tau_decay = 0.9;
  double tau_floor = 1e-4;  // stop shrinking below this threshold
};

AttackResult RunCwL2(const Classifier &model, const Waveform &x, int y, const CwOpts &opts,
                     AttackTrace *trace = nullptr);
AttackResult RunCwL0(const Classifier &model, const Waveform &x, int y, const CwOpts &opts,
                     AttackTrace *trace = nullptr);
AttackResult RunCwLinf(const Classifier &model, const Waveform &x, int y, const CwOpts &opts,
                       AttackTrace *trace = nullptr);

// ---- hyperparameter sampling ------------------------------------------

struct AttackRanges {
  // log-uniform budget for the Linf-ball classes
  double linf_eps_lo = 1e-4, linf_eps_hi = 1e-2;
  // pgd_l2 budget via target stealth: uniform SNR in dB, epsilon derived
  // from the utterance energy
  double snr_lo_db = 20.0, snr_hi_db = 50.0;
  int steps_lo = 5, steps_hi = 50;
  // cw effort
  int cw_iters = 40;
  int cw_bsearch = 5;
  double cw_lr = 1e-2;
  // cw_l0 target support as a fraction of the utterance length
  double l0_frac_lo = 0.005, l0_frac_hi = 0.05;

  Json ToJson() const;
  static AttackRanges FromJson(const Json &j);
};

/// One concrete sampled configuration for a record. For CW classes epsilon
/// is filled in after the attack with the achieved norm.
struct SampledAttack {
  AttackClass cls = AttackClass::Benign;
  double epsilon = 0.0;
  Json hyperparams;  // everything needed to reproduce the run
};

/// Deterministic: the same (class, ranges, seed, utterance) gives the same
/// draw. The utterance is consulted only for energy-dependent budgets.
SampledAttack SampleAttackParams(AttackClass cls, const AttackRanges &ranges, uint64_t seed,
                                 const Waveform &x);

// ---- attack database ---------------------------------------------------

struct AttackRecord {
  std::string record_id;
  std::string benign_path;  // relative to the database directory
  std::string adv_path;
  std::string label;  // attack class name
  std::string p;      // "0", "1", "2", "inf", or "" for benign
  double epsilon = 0.0;
  Json hyperparams;
  bool success = false;
  int y = -1;
  int y_pred = -1;
  std::optional<double> snr_db;  // absent when delta is identically zero

  Json ToJson() const;
  static AttackRecord FromJson(const Json &j);
};

struct AttackDbSpec {
  std::vector<AttackClass> classes;
  AttackRanges ranges;
  double fraction = 1.0;  // fraction of corpus utterances attempted per class
  uint64_t seed = 0;
};

struct AttackDb {
  std::string dir;
  std::vector<AttackRecord> records;  // sorted by record_id
};

/// Runs every configured class over a deterministic per-class subset of the
/// corpus, keeping only prediction-flipping results (benign rows are kept
/// as-is with a zero perturbation). Writes float32 WAV pairs plus
/// index.jsonl and returns the database.
AttackDb GenerateAttackDb(const Classifier &model, const std::vector<LabeledWave> &corpus,
                          const AttackDbSpec &spec, const std::string &out_dir);

AttackDb LoadAttackDb(const std::string &dir);

Waveform LoadRecordBenign(const AttackDb &db, const AttackRecord &rec);
Waveform LoadRecordAdv(const AttackDb &db, const AttackRecord &rec);
/// Stored perturbation: adv minus benign, exact in float32.
Waveform LoadRecordDelta(const AttackDb &db, const AttackRecord &rec);

/// Re-checks the structural invariants of a stored database: budgets hold,
/// benign rows carry a zero perturbation, and (when a model is given) every
/// attack row still flips the prediction. Returns the record count.
int ValidateAttackDb(const AttackDb &db, const Classifier *model = nullptr);

}  // namespace advsig

#endif  // ADVSIG_ATTACKS_HPP
