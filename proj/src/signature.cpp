// src/signature.cpp

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

#include <unordered_map>
#include <utility>

namespace advsig {

const char *SignatureModeName(SignatureMode m) {
  switch (m) {
    case SignatureMode::Baseline: return "baseline";
    case SignatureMode::Oracle: return "oracle";
    case SignatureMode::Estimated: return "estimated";
    case SignatureMode::Proposed: return "proposed";
  }
  Fail("SignatureModeName: bad enum");
}

SignatureMode SignatureModeFromName(const std::string &name) {
  for (SignatureMode m : AllSignatureModes())
    if (name == SignatureModeName(m)) return m;
  Fail("unknown signature mode '", name, "'");
}

std::vector<SignatureMode> AllSignatureModes() {
  return {SignatureMode::Baseline, SignatureMode::Oracle, SignatureMode::Estimated,
          SignatureMode::Proposed};
}

const char *SignatureInputName(SignatureInput k) {
  switch (k) {
    case SignatureInput::Attacked: return "attacked";
    case SignatureInput::TrueDelta: return "true_delta";
    case SignatureInput::EstimatedDelta: return "estimated_delta";
    case SignatureInput::RawBenign: return "raw_benign";
  }
  Fail("SignatureInputName: bad enum");
}

SignatureInput TrainInputFor(SignatureMode m) {
  switch (m) {
    case SignatureMode::Baseline: return SignatureInput::Attacked;
    case SignatureMode::Oracle: return SignatureInput::TrueDelta;
    case SignatureMode::Estimated: return SignatureInput::EstimatedDelta;
    case SignatureMode::Proposed: return SignatureInput::TrueDelta;
  }
  Fail("TrainInputFor: bad enum");
}

SignatureInput EvalInputFor(SignatureMode m) {
  switch (m) {
    case SignatureMode::Baseline: return SignatureInput::Attacked;
    case SignatureMode::Oracle: return SignatureInput::TrueDelta;
    case SignatureMode::Estimated: return SignatureInput::EstimatedDelta;
    case SignatureMode::Proposed: return SignatureInput::EstimatedDelta;
  }
  Fail("EvalInputFor: bad enum");
}

SignatureInput EffectiveInput(const std::string &label, SignatureInput mode_input) {
  Require(mode_input != SignatureInput::RawBenign, "EffectiveInput: raw_benign is not a mode input");
  if (label == AttackClassName(AttackClass::Benign) && mode_input != SignatureInput::Attacked)
    return SignatureInput::RawBenign;
  return mode_input;
}

Waveform MakeSignatureInput(const AttackDb &db, const AttackRecord &rec, SignatureInput kind,
                            const GeneratorNet *gen) {
  switch (kind) {
    case SignatureInput::Attacked: return LoadRecordAdv(db, rec);
    case SignatureInput::TrueDelta: return LoadRecordDelta(db, rec);
    case SignatureInput::EstimatedDelta:
      Require(gen != nullptr, "signature: the estimated perturbation needs a generator");
      return EstimatePerturbation(*gen, LoadRecordAdv(db, rec));
    case SignatureInput::RawBenign: return LoadRecordBenign(db, rec);
  }
  Fail("MakeSignatureInput: bad enum");
}

SignatureDataset BuildSignatureDataset(const AttackDb &db, const std::vector<std::string> &classes,
                                       SignatureMode mode, bool eval_phase,
                                       const GeneratorNet *gen) {
  Require(!classes.empty(), "signature: empty class list");
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(classes.size()); ++i)
    Require(index.emplace(classes[i], i).second, "signature: duplicate class '", classes[i], "'");

  SignatureDataset ds;
  ds.classes = classes;
  ds.input = eval_phase ? EvalInputFor(mode) : TrainInputFor(mode);
  for (const AttackRecord &rec : db.records) {
    auto it = index.find(rec.label);
    if (it == index.end()) continue;
    SignatureInput kind = EffectiveInput(rec.label, ds.input);
    LabeledWave lw;
    lw.wave = MakeSignatureInput(db, rec, kind, gen);
    lw.label = it->second;
    lw.id = rec.record_id;
    ds.data.push_back(std::move(lw));
    ds.audit.push_back(Json{{"record_id", rec.record_id},
                            {"mode", SignatureModeName(mode)},
                            {"phase", eval_phase ? "eval" : "train"},
                            {"label", rec.label},
                            {"input", SignatureInputName(kind)}});
  }
  Require(!ds.data.empty(), "signature: no database record matches the class list");
  return ds;
}

Classifier TrainSignature(const AttackDb &db, const std::vector<std::string> &classes,
                          SignatureMode mode, const GeneratorNet *gen,
                          const SignatureTrainOpts &opts, uint64_t seed,
                          SignatureDataset *out_data) {
  SignatureDataset ds = BuildSignatureDataset(db, classes, mode, /*eval_phase=*/false, gen);
  if (!opts.audit_log.empty()) WriteJsonl(opts.audit_log, ds.audit);

  XvecConfig arch = opts.arch;
  arch.num_classes = static_cast<int>(classes.size());
  Classifier model(arch, "signature");
  TrainClassifier(&model, ds.data, opts.train, seed);
  if (out_data != nullptr) *out_data = std::move(ds);
  return model;
}

}  // namespace advsig
