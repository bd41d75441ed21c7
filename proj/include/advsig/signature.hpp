// advsig/signature.hpp
// Attack-signature classification: choosing what the signature network sees
// for each database record (the attacked waveform, the true perturbation, or
// the estimated perturbation), building labeled datasets from those inputs,
// and training the signature classifier.

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

#ifndef ADVSIG_SIGNATURE_HPP
#define ADVSIG_SIGNATURE_HPP

#include <string>
#include <vector>

#include "advsig/advest.hpp"
#include "advsig/attacks.hpp"
#include "advsig/victim.hpp"

namespace advsig {

/// The four experimental conditions. Train and evaluation inputs:
///   baseline   train attacked waveform      eval attacked waveform
///   oracle     train true perturbation      eval true perturbation
///   estimated  train estimated perturbation eval estimated perturbation
///   proposed   train true perturbation      eval estimated perturbation
enum class SignatureMode { Baseline, Oracle, Estimated, Proposed };

const char *SignatureModeName(SignatureMode m);
SignatureMode SignatureModeFromName(const std::string &name);
std::vector<SignatureMode> AllSignatureModes();

/// RawBenign is never a mode-level input; it is the per-record fallback for
/// benign rows in perturbation modes, whose own perturbation is identically
/// zero and therefore carries no signal.
enum class SignatureInput { Attacked, TrueDelta, EstimatedDelta, RawBenign };

const char *SignatureInputName(SignatureInput k);
SignatureInput TrainInputFor(SignatureMode m);
SignatureInput EvalInputFor(SignatureMode m);

/// The input actually fed for one record: benign rows asked for a
/// perturbation get the raw benign waveform instead.
SignatureInput EffectiveInput(const std::string &label, SignatureInput mode_input);

/// Materializes the chosen input for one record. gen is required only for
/// the estimated perturbation.
Waveform MakeSignatureInput(const AttackDb &db, const AttackRecord &rec, SignatureInput kind,
                            const GeneratorNet *gen);

struct SignatureDataset {
  std::vector<LabeledWave> data;  // label = index into classes; id = record_id
  std::vector<std::string> classes;
  SignatureInput input = SignatureInput::Attacked;
  std::vector<Json> audit;  // one row per record: what was fed and why
};

/// Collects every record whose attack class is listed, feeding each one the
/// input dictated by (mode, phase) after the benign fallback. Audit rows make
/// the wiring checkable after the fact. Listing "benign" in a perturbation
/// mode is the opt-in for the raw-waveform benign convention; leave it out to
/// exclude benign entirely.
SignatureDataset BuildSignatureDataset(const AttackDb &db, const std::vector<std::string> &classes,
                                       SignatureMode mode, bool eval_phase,
                                       const GeneratorNet *gen);

struct SignatureTrainOpts {
  XvecConfig arch;  // num_classes is overridden by the class list
  XvecTrainOpts train;
  std::string audit_log;  // JSONL audit destination, empty to skip
};

/// Trains the signature classifier for one mode on the whole database.
Classifier TrainSignature(const AttackDb &db, const std::vector<std::string> &classes,
                          SignatureMode mode, const GeneratorNet *gen,
                          const SignatureTrainOpts &opts, uint64_t seed,
                          SignatureDataset *out_data = nullptr);

}  // namespace advsig

#endif  // ADVSIG_SIGNATURE_HPP
