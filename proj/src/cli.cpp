// src/cli.cpp

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

#include "advsig/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include "advsig/hash.hpp"

namespace advsig {

namespace fs = std::filesystem;

// ---- configuration ------------------------------------------------------

namespace {

void CheckKeys(const Json &j, const char *ctx, const std::set<std::string> &allowed) {
  if (!j.is_object()) FailWith<ConfigError>("config: ", ctx, " must be a JSON object");
  for (const auto &el : j.items())
    if (!allowed.count(el.key()))
      FailWith<ConfigError>("config: unknown key '", el.key(), "' in ", ctx);
}

/// Overlays j onto the canonical form of a type that already serializes
/// itself; unknown keys are rejected against that canonical key set.
template <typename T>
T OverlayCanonical(const T &base, const Json &j, const char *ctx) {
  Json merged = base.ToJson();
  if (!j.is_object()) FailWith<ConfigError>("config: ", ctx, " must be a JSON object");
  for (const auto &el : j.items()) {
    if (!merged.contains(el.key()))
      FailWith<ConfigError>("config: unknown key '", el.key(), "' in ", ctx);
    merged[el.key()] = el.value();
  }
  return T::FromJson(merged);
}

void ApplyCorpus(CorpusSource *c, const Json &j) {
  CheckKeys(j, "corpus", {"type", "num_speakers", "utterances_per_speaker", "duration_s",
                          "sample_rate", "path"});
  if (j.contains("type")) {
    c->type = j.at("type").get<std::string>();
    if (c->type != "synthetic" && c->type != "directory")
      FailWith<ConfigError>("config: corpus.type '", c->type,
                            "' is not one of synthetic, directory");
  }
  if (j.contains("num_speakers")) c->synth.num_speakers = j.at("num_speakers").get<int>();
  if (j.contains("utterances_per_speaker"))
    c->synth.utterances_per_speaker = j.at("utterances_per_speaker").get<int>();
  if (j.contains("duration_s")) c->synth.duration_s = j.at("duration_s").get<double>();
  if (j.contains("sample_rate")) c->synth.sample_rate = j.at("sample_rate").get<int>();
  if (j.contains("path")) c->path = j.at("path").get<std::string>();
}

Json CorpusToJson(const CorpusSource &c) {
  Json j;
  j["type"] = c.type;
  if (c.type == "directory") {
    j["path"] = c.path;
  } else {
    j["num_speakers"] = c.synth.num_speakers;
    j["utterances_per_speaker"] = c.synth.utterances_per_speaker;
    j["duration_s"] = c.synth.duration_s;
    j["sample_rate"] = c.synth.sample_rate;
  }
  return j;
}

void ApplyVictim(VictimSection *v, const Json &j) {
  CheckKeys(j, "victim", {"channels", "num_blocks", "embed_dim", "epochs", "batch", "lr",
                          "crop_seconds", "holdout_fraction"});
  if (j.contains("channels")) v->channels = j.at("channels").get<int>();
  if (j.contains("num_blocks")) v->num_blocks = j.at("num_blocks").get<int>();
  if (j.contains("embed_dim")) v->embed_dim = j.at("embed_dim").get<int>();
  if (j.contains("epochs")) v->epochs = j.at("epochs").get<int>();
  if (j.contains("batch")) v->batch = j.at("batch").get<int>();
  if (j.contains("lr")) v->lr = j.at("lr").get<double>();
  if (j.contains("crop_seconds")) v->crop_seconds = j.at("crop_seconds").get<double>();
  if (j.contains("holdout_fraction")) v->holdout_fraction = j.at("holdout_fraction").get<double>();
}

Json VictimToJson(const VictimSection &v) {
  return Json{{"channels", v.channels},
              {"num_blocks", v.num_blocks},
              {"embed_dim", v.embed_dim},
              {"epochs", v.epochs},
              {"batch", v.batch},
              {"lr", v.lr},
              {"crop_seconds", v.crop_seconds},
              {"holdout_fraction", v.holdout_fraction}};
}

void ApplyAttacks(AttackSection *a, const Json &j) {
  CheckKeys(j, "attacks", {"classes", "fraction", "ranges"});
  if (j.contains("classes")) a->classes = j.at("classes").get<std::vector<std::string>>();
  if (j.contains("fraction")) a->fraction = j.at("fraction").get<double>();
  if (j.contains("ranges")) a->ranges = OverlayCanonical(a->ranges, j.at("ranges"), "attacks.ranges");
}

Json AttacksToJson(const AttackSection &a) {
  return Json{{"classes", a.classes}, {"fraction", a.fraction}, {"ranges", a.ranges.ToJson()}};
}

void ApplyAdvest(AdvestSection *s, const Json &j) {
  CheckKeys(j, "advest", {"train_all", "train_leave_out", "leave_out", "arch", "cycles", "batch",
                          "segment", "lr_g", "lr_d", "lambda_sup"});
  if (j.contains("train_all")) s->train_all = j.at("train_all").get<bool>();
  if (j.contains("train_leave_out")) s->train_leave_out = j.at("train_leave_out").get<bool>();
  if (j.contains("leave_out")) s->leave_out = j.at("leave_out").get<std::vector<std::string>>();
  if (j.contains("arch")) s->arch = OverlayCanonical(s->arch, j.at("arch"), "advest.arch");
  if (j.contains("cycles")) s->cycles = j.at("cycles").get<int>();
  if (j.contains("batch")) s->batch = j.at("batch").get<int>();
  if (j.contains("segment")) s->segment = j.at("segment").get<int>();
  if (j.contains("lr_g")) s->lr_g = j.at("lr_g").get<double>();
  if (j.contains("lr_d")) s->lr_d = j.at("lr_d").get<double>();
  if (j.contains("lambda_sup")) s->lambda_sup = j.at("lambda_sup").get<double>();
}

Json AdvestToJson(const AdvestSection &s) {
  return Json{{"train_all", s.train_all},
              {"train_leave_out", s.train_leave_out},
              {"leave_out", s.leave_out},
              {"arch", s.arch.ToJson()},
              {"cycles", s.cycles},
              {"batch", s.batch},
              {"segment", s.segment},
              {"lr_g", s.lr_g},
              {"lr_d", s.lr_d},
              {"lambda_sup", s.lambda_sup}};
}

void ApplySignature(SignatureSection *s, const Json &j) {
  CheckKeys(j, "signature", {"classes", "channels", "num_blocks", "embed_dim", "epochs", "batch",
                             "lr", "crop_seconds"});
  if (j.contains("classes")) s->classes = j.at("classes").get<std::vector<std::string>>();
  if (j.contains("channels")) s->channels = j.at("channels").get<int>();
  if (j.contains("num_blocks")) s->num_blocks = j.at("num_blocks").get<int>();
  if (j.contains("embed_dim")) s->embed_dim = j.at("embed_dim").get<int>();
  if (j.contains("epochs")) s->epochs = j.at("epochs").get<int>();
  if (j.contains("batch")) s->batch = j.at("batch").get<int>();
  if (j.contains("lr")) s->lr = j.at("lr").get<double>();
  if (j.contains("crop_seconds")) s->crop_seconds = j.at("crop_seconds").get<double>();
}

Json SignatureToJson(const SignatureSection &s) {
  return Json{{"classes", s.classes}, {"channels", s.channels},
              {"num_blocks", s.num_blocks}, {"embed_dim", s.embed_dim},
              {"epochs", s.epochs}, {"batch", s.batch},
              {"lr", s.lr}, {"crop_seconds", s.crop_seconds}};
}

void ApplyEval(EvalSection *e, const Json &j) {
  CheckKeys(j, "eval", {"eval_fraction", "known", "unknown", "targets_per_class",
                        "nontarget_factor", "with_benign"});
  if (j.contains("eval_fraction")) e->eval_fraction = j.at("eval_fraction").get<double>();
  if (j.contains("known")) e->split.known = j.at("known").get<std::vector<std::string>>();
  if (j.contains("unknown")) e->split.unknown = j.at("unknown").get<std::vector<std::string>>();
  if (j.contains("targets_per_class")) e->targets_per_class = j.at("targets_per_class").get<int>();
  if (j.contains("nontarget_factor")) e->nontarget_factor = j.at("nontarget_factor").get<int>();
  if (j.contains("with_benign")) e->with_benign = j.at("with_benign").get<bool>();
}

Json EvalToJson(const EvalSection &e) {
  return Json{{"eval_fraction", e.eval_fraction},
              {"known", e.split.known},
              {"unknown", e.split.unknown},
              {"targets_per_class", e.targets_per_class},
              {"nontarget_factor", e.nontarget_factor},
              {"with_benign", e.with_benign}};
}

void CheckClassNames(const std::vector<std::string> &names, const char *ctx) {
  for (const std::string &n : names) {
    try {
      AttackClassFromName(n);
    } catch (const Error &) {
      FailWith<ConfigError>("config: unknown attack class '", n, "' in ", ctx);
    }
  }
}

void CheckSubset(const std::vector<std::string> &sub, const std::vector<std::string> &super,
                 const char *ctx) {
  const std::set<std::string> have(super.begin(), super.end());
  for (const std::string &n : sub)
    if (!have.count(n))
      FailWith<ConfigError>("config: class '", n, "' in ", ctx,
                            " is not in the attacks.classes list");
}

}  // namespace

Json ExperimentConfig::ToJson() const {
  Json j;
  j["preset"] = preset;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["mode"] = SignatureModeName(mode);
  j["corpus"] = CorpusToJson(corpus);
  j["victim"] = VictimToJson(victim);
  j["attacks"] = AttacksToJson(attacks);
  j["advest"] = AdvestToJson(advest);
  j["signature"] = SignatureToJson(signature);
  j["eval"] = EvalToJson(eval);
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const Json &j) {
  try {
    if (!j.is_object()) FailWith<ConfigError>("config: top level must be a JSON object");
    CheckKeys(j, "the top level", {"preset", "seed", "output_dir", "mode", "corpus", "victim",
                                   "attacks", "advest", "signature", "eval"});
    ExperimentConfig c = Preset(j.value("preset", std::string("smoke")));
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("mode")) c.mode = SignatureModeFromName(j.at("mode").get<std::string>());
    if (j.contains("corpus")) ApplyCorpus(&c.corpus, j.at("corpus"));
    if (j.contains("victim")) ApplyVictim(&c.victim, j.at("victim"));
    if (j.contains("attacks")) ApplyAttacks(&c.attacks, j.at("attacks"));
    if (j.contains("advest")) ApplyAdvest(&c.advest, j.at("advest"));
    if (j.contains("signature")) ApplySignature(&c.signature, j.at("signature"));
    if (j.contains("eval")) ApplyEval(&c.eval, j.at("eval"));
    return c;
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {  // bad types, bad enum names
    FailWith<ConfigError>("config: ", e.what());
  }
}

ExperimentConfig ExperimentConfig::Preset(const std::string &name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "smoke") {
    c.corpus.synth.num_speakers = 4;
    c.corpus.synth.utterances_per_speaker = 10;
    c.corpus.synth.duration_s = 1.0;
    c.attacks.classes = {"benign", "pgd_linf", "pgd_l2", "cw_l2"};
    // a strong, narrow box budget keeps the Linf class separable from the
    // snr-budgeted L2 class at this scale
    c.attacks.ranges.linf_eps_lo = 2e-2;
    c.attacks.ranges.linf_eps_hi = 8e-2;
    c.advest.arch.enc_kernel = 16;
    c.advest.arch.enc_stride = 8;
    c.advest.arch.enc_channels = 16;
    c.advest.arch.bottleneck = 8;
    c.advest.arch.hidden = 16;
    c.advest.arch.tcn_blocks = 3;
    c.advest.arch.d_layers = 5;
    c.advest.arch.d_channels = 8;
    c.advest.cycles = 150;
    c.advest.segment = 2048;
    c.signature.classes = {"pgd_linf", "pgd_l2"};
    c.signature.channels = 24;
    c.signature.epochs = 30;
    c.eval.split.known = {"pgd_linf", "pgd_l2"};
    c.eval.split.unknown = {"cw_l2"};
    c.eval.targets_per_class = 50;
  } else if (name == "desk") {
    c.corpus.synth.num_speakers = 10;
    c.corpus.synth.utterances_per_speaker = 20;
    c.corpus.synth.duration_s = 2.0;
    c.victim = {64, 2, 64, 12, 8, 1e-3, 1.0, 0.2};
    c.attacks.classes = {"benign", "fgsm", "iter_fgsm", "pgd_linf", "pgd_l2", "cw_l2"};
    c.attacks.ranges.linf_eps_lo = 1e-2;
    c.attacks.ranges.linf_eps_hi = 2e-1;
    c.advest.arch.enc_kernel = 16;
    c.advest.arch.enc_stride = 8;
    c.advest.arch.enc_channels = 32;
    c.advest.arch.bottleneck = 16;
    c.advest.arch.hidden = 32;
    c.advest.arch.tcn_blocks = 4;
    c.advest.arch.d_layers = 8;
    c.advest.arch.d_channels = 12;
    c.advest.cycles = 1500;
    c.advest.segment = 4096;
    c.signature = {{"fgsm", "iter_fgsm", "pgd_linf", "pgd_l2"}, 32, 1, 32, 12, 8, 1e-3, 1.0};
    c.eval.split.known = {"fgsm", "iter_fgsm", "pgd_linf", "pgd_l2"};
    c.eval.split.unknown = {"cw_l2"};
    c.eval.targets_per_class = 200;
  } else if (name == "paper") {
    // documented full-scale settings; needs a prepared 16 kHz corpus
    // directory and is far outside any CI budget
    c.corpus.type = "directory";
    c.corpus.path = "";
    c.victim = {512, 3, 512, 40, 64, 1e-3, 2.0, 0.02};
    c.attacks.classes = {"benign", "fgsm",   "iter_fgsm", "pgd_l1", "pgd_l2",
                         "pgd_linf", "cw_l0", "cw_l2",     "cw_linf"};
    c.attacks.fraction = 0.1;
    c.advest.arch = AdvEstConfig();  // full-size separator defaults
    c.advest.cycles = 100000;
    c.advest.batch = 8;
    c.advest.segment = 16384;
    c.signature = {{"fgsm", "iter_fgsm", "pgd_l1", "pgd_l2", "pgd_linf"}, 512, 3, 512,
                   40, 64, 1e-3, 2.0};
    c.eval.split = DefaultGroupSplit();
    c.eval.targets_per_class = 3000;
  } else {
    FailWith<ConfigError>("unknown preset '", name, "' (expected smoke, desk or paper)");
  }
  return c;
}

void ExperimentConfig::Validate() const {
  if (output_dir.empty()) FailWith<ConfigError>("config: output_dir is empty");
  if (corpus.type == "synthetic") {
    try {
      corpus.synth.Validate();
    } catch (const Error &e) {
      FailWith<ConfigError>("config: ", e.what());
    }
  } else if (corpus.type == "directory") {
    if (corpus.path.empty()) FailWith<ConfigError>("config: corpus.path is empty");
  } else {
    FailWith<ConfigError>("config: corpus.type must be 'synthetic' or 'directory', got '",
                          corpus.type, "'");
  }
  if (victim.epochs < 1 || victim.batch < 1 || victim.lr <= 0)
    FailWith<ConfigError>("config: bad victim training settings");
  if (victim.holdout_fraction <= 0 || victim.holdout_fraction >= 1)
    FailWith<ConfigError>("config: victim.holdout_fraction must lie in (0, 1)");
  if (attacks.classes.empty()) FailWith<ConfigError>("config: attacks.classes is empty");
  CheckClassNames(attacks.classes, "attacks.classes");
  if (std::set<std::string>(attacks.classes.begin(), attacks.classes.end()).size() !=
      attacks.classes.size())
    FailWith<ConfigError>("config: duplicate class in attacks.classes");
  if (attacks.fraction <= 0 || attacks.fraction > 1)
    FailWith<ConfigError>("config: attacks.fraction must lie in (0, 1]");
  if (advest.cycles < 1 || advest.batch < 1 || advest.segment < 16)
    FailWith<ConfigError>("config: bad advest training settings");
  CheckClassNames(advest.leave_out, "advest.leave_out");
  try {
    advest.arch.Validate();
  } catch (const Error &e) {
    FailWith<ConfigError>("config: ", e.what());
  }
  if (signature.classes.size() < 2)
    FailWith<ConfigError>("config: signature.classes needs at least two classes");
  CheckClassNames(signature.classes, "signature.classes");
  CheckSubset(signature.classes, attacks.classes, "signature.classes");
  if (signature.epochs < 1 || signature.batch < 1 || signature.lr <= 0)
    FailWith<ConfigError>("config: bad signature training settings");
  if (eval.eval_fraction <= 0 || eval.eval_fraction >= 1)
    FailWith<ConfigError>("config: eval.eval_fraction must lie in (0, 1)");
  try {
    eval.split.Validate();
  } catch (const Error &e) {
    FailWith<ConfigError>("config: ", e.what());
  }
  CheckSubset(eval.split.known, attacks.classes, "eval.known");
  CheckSubset(eval.split.unknown, attacks.classes, "eval.unknown");
  if (eval.targets_per_class < 1 || eval.nontarget_factor < 1)
    FailWith<ConfigError>("config: bad eval trial settings");
}

ExperimentConfig LoadCliConfig(const std::string &config_path, const std::string &preset_flag,
                               const std::optional<uint64_t> &seed_override,
                               const std::string &output_override) {
  Json doc = Json::object();
  if (!config_path.empty()) {
    try {
      doc = ReadJsonFile(ResolveDataPath(config_path));
    } catch (const std::exception &e) {
      FailWith<ConfigError>(e.what());
    }
    if (!doc.is_object()) FailWith<ConfigError>("config file must hold a JSON object");
  }
  if (!preset_flag.empty()) doc["preset"] = preset_flag;  // the flag beats the file
  ExperimentConfig cfg = ExperimentConfig::FromJson(doc);
  if (seed_override) cfg.seed = *seed_override;
  if (!output_override.empty()) cfg.output_dir = output_override;
  return cfg;
}

std::string ResolveDataPath(const std::string &path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return path;
  const char *root = std::getenv(kDataRootEnv);
  if (root == nullptr || *root == '\0') return path;
  return (fs::path(root) / p).string();
}

// ---- staged pipeline ----------------------------------------------------

namespace {

constexpr const char *kManifestName = "manifest.json";
constexpr const char *kVictimCkpt = "victim.ckpt";
constexpr const char *kAttackDir = "attacks";
constexpr const char *kAttackIndex = "attacks/index.jsonl";
constexpr const char *kSignatureCkpt = "signature.ckpt";
constexpr const char *kReportJson = "report.json";

std::string AdvestCkpt(const std::string &tag, const char *net) {
  return "advest_" + tag + "_" + net + ".ckpt";
}

struct RunPaths {
  fs::path out;
  std::string corpus_manifest;  // relative to out, or absolute for external corpora

  explicit RunPaths(const ExperimentConfig &cfg) {
    out = fs::path(ResolveDataPath(cfg.output_dir));
    if (cfg.corpus.type == "directory")
      corpus_manifest = (fs::path(ResolveDataPath(cfg.corpus.path)) / "manifest.jsonl").string();
    else
      corpus_manifest = "corpus/manifest.jsonl";
  }

  fs::path Abs(const std::string &p) const {
    fs::path f(p);
    return f.is_absolute() ? f : out / f;
  }
  std::string CorpusDir() const { return Abs(corpus_manifest).parent_path().string(); }
};

struct StageOutputs {
  std::vector<std::pair<std::string, std::string>> files;  // logical name -> path
  Json info = Json::object();
};

void NeedArtifact(const RunPaths &rp, const std::string &path, const char *what,
                  const char *producer) {
  if (!fs::exists(rp.Abs(path)))
    FailWith<DependencyError>(what, " '", path, "' not found; run ", producer, " first");
}

std::vector<LabeledWave> LoadRunCorpus(const ExperimentConfig &cfg, const RunPaths &rp) {
  return LoadCorpus(rp.CorpusDir(), cfg.corpus.synth.sample_rate);
}

int CountClasses(const std::vector<LabeledWave> &corpus) {
  int nc = 0;
  for (const LabeledWave &lw : corpus) nc = std::max(nc, lw.label + 1);
  return nc;
}

XvecTrainOpts SignatureTrainOptsFrom(const SignatureSection &s) {
  XvecTrainOpts t;
  t.epochs = s.epochs;
  t.batch = s.batch;
  t.lr = s.lr;
  t.crop_seconds = s.crop_seconds;
  return t;
}

StageOutputs StageGenCorpus(const ExperimentConfig &cfg, const RunPaths &rp) {
  StageOutputs so;
  if (cfg.corpus.type == "directory") {
    if (!fs::exists(rp.Abs(rp.corpus_manifest)))
      FailWith<DependencyError>("corpus manifest '", rp.corpus_manifest,
                                "' not found; point corpus.path at a prepared directory");
    so.info["rows"] = static_cast<int>(LoadRunCorpus(cfg, rp).size());
  } else {
    SynthSpec spec = cfg.corpus.synth;
    spec.seed = DeriveSeed(cfg.seed, "corpus");
    so.info["rows"] = GenerateCorpus(spec, rp.CorpusDir());
  }
  so.files.emplace_back("corpus_manifest", rp.corpus_manifest);
  return so;
}

StageOutputs StageTrainVictim(const ExperimentConfig &cfg, const RunPaths &rp) {
  std::vector<LabeledWave> corpus = LoadRunCorpus(cfg, rp);
  std::vector<LabeledWave> train, holdout;
  SplitByLabel(corpus, cfg.victim.holdout_fraction, DeriveSeed(cfg.seed, "victim-split"), &train,
               &holdout);
  XvecConfig xc;
  xc.num_classes = CountClasses(corpus);
  xc.channels = cfg.victim.channels;
  xc.num_blocks = cfg.victim.num_blocks;
  xc.embed_dim = cfg.victim.embed_dim;
  Classifier victim(xc, "victim");
  XvecTrainOpts topts;
  topts.epochs = cfg.victim.epochs;
  topts.batch = cfg.victim.batch;
  topts.lr = cfg.victim.lr;
  topts.crop_seconds = cfg.victim.crop_seconds;
  topts.log_path = (rp.out / "victim_train.jsonl").string();
  TrainClassifier(&victim, train, topts, DeriveSeed(cfg.seed, "victim"));
  victim.Save((rp.out / kVictimCkpt).string());

  StageOutputs so;
  so.files.emplace_back("victim_checkpoint", kVictimCkpt);
  so.files.emplace_back("train_log", "victim_train.jsonl");
  so.info["num_classes"] = xc.num_classes;
  so.info["train_utterances"] = static_cast<int>(train.size());
  so.info["holdout_utterances"] = static_cast<int>(holdout.size());
  so.info["holdout_accuracy"] =
      EvalAccuracy(victim, holdout.empty() ? train : holdout);
  return so;
}

StageOutputs StageGenAttacks(const ExperimentConfig &cfg, const RunPaths &rp) {
  Classifier victim = Classifier::Load((rp.out / kVictimCkpt).string(), "victim");
  std::vector<LabeledWave> corpus = LoadRunCorpus(cfg, rp);
  AttackDbSpec spec;
  for (const std::string &n : cfg.attacks.classes) spec.classes.push_back(AttackClassFromName(n));
  spec.ranges = cfg.attacks.ranges;
  spec.fraction = cfg.attacks.fraction;
  spec.seed = DeriveSeed(cfg.seed, "attacks");
  AttackDb db = GenerateAttackDb(victim, corpus, spec, (rp.out / kAttackDir).string());

  StageOutputs so;
  so.files.emplace_back("attack_index", kAttackIndex);
  Json per_class = Json::object();
  for (const AttackRecord &r : db.records) {
    if (!per_class.contains(r.label)) per_class[r.label] = 0;
    per_class[r.label] = per_class[r.label].get<int>() + 1;
  }
  so.info["records"] = static_cast<int>(db.records.size());
  so.info["per_class"] = per_class;
  return so;
}

StageOutputs StageTrainAdvest(const ExperimentConfig &cfg, const RunPaths &rp) {
  AttackDb db = LoadAttackDb((rp.out / kAttackDir).string());
  StageOutputs so;
  std::vector<std::pair<std::string, std::vector<std::string>>> variants;
  if (cfg.advest.train_all) variants.emplace_back("all", std::vector<std::string>{});
  if (cfg.advest.train_leave_out) variants.emplace_back("leave_out", cfg.advest.leave_out);
  if (variants.empty()) so.info["note"] = "no estimator variants requested";
  for (const auto &[tag, exclude] : variants) {
    GeneratorNet gen(cfg.advest.arch);
    DiscriminatorNet dsc(cfg.advest.arch);
    Rng init(DeriveSeed(cfg.seed, "advest-init-" + tag));
    gen.InitParams(&init);
    dsc.InitParams(&init);
    AdvEstTrainOpts opts;
    opts.cycles = cfg.advest.cycles;
    opts.batch = cfg.advest.batch;
    opts.segment = cfg.advest.segment;
    opts.lr_g = cfg.advest.lr_g;
    opts.lr_d = cfg.advest.lr_d;
    opts.lambda_sup = cfg.advest.lambda_sup;
    opts.exclude_labels = exclude;
    opts.log_path = (rp.out / ("advest_" + tag + ".jsonl")).string();
    AdvEstTrainStats stats = TrainAdvEst(&gen, &dsc, db, opts, DeriveSeed(cfg.seed, "advest-" + tag));
    gen.Save(rp.Abs(AdvestCkpt(tag, "g")).string());
    dsc.Save(rp.Abs(AdvestCkpt(tag, "d")).string());
    so.files.emplace_back("estimator_" + tag, AdvestCkpt(tag, "g"));
    so.files.emplace_back("discriminator_" + tag, AdvestCkpt(tag, "d"));
    so.files.emplace_back("train_log_" + tag, "advest_" + tag + ".jsonl");
    so.info[tag] = Json{{"final_g_loss", stats.final_g_loss},
                        {"final_d_loss", stats.final_d_loss},
                        {"steps_g", stats.steps_g},
                        {"steps_d", stats.steps_d}};
  }
  return so;
}

StageOutputs StageTrainSignature(const ExperimentConfig &cfg, const RunPaths &rp) {
  AttackDb db = LoadAttackDb((rp.out / kAttackDir).string());
  AttackDb enroll, eval_db;
  SplitAttackDb(db, cfg.eval.eval_fraction, DeriveSeed(cfg.seed, "dbsplit"), &enroll, &eval_db);

  std::unique_ptr<GeneratorNet> gen;
  if (TrainInputFor(cfg.mode) == SignatureInput::EstimatedDelta)
    gen = std::make_unique<GeneratorNet>(
        GeneratorNet::Load(rp.Abs(AdvestCkpt("all", "g")).string()));

  SignatureTrainOpts opts;
  opts.arch.num_classes = static_cast<int>(cfg.signature.classes.size());
  opts.arch.channels = cfg.signature.channels;
  opts.arch.num_blocks = cfg.signature.num_blocks;
  opts.arch.embed_dim = cfg.signature.embed_dim;
  opts.train = SignatureTrainOptsFrom(cfg.signature);
  opts.audit_log = (rp.out / "signature_train_audit.jsonl").string();
  SignatureDataset train_data;
  Classifier sig = TrainSignature(enroll, cfg.signature.classes, cfg.mode, gen.get(), opts,
                                  DeriveSeed(cfg.seed, "signature"), &train_data);
  sig.Save((rp.out / kSignatureCkpt).string());

  StageOutputs so;
  so.files.emplace_back("signature_checkpoint", kSignatureCkpt);
  so.files.emplace_back("train_audit", "signature_train_audit.jsonl");
  so.info["train_records"] = static_cast<int>(train_data.data.size());
  so.info["train_input"] = SignatureInputName(train_data.input);
  return so;
}

StageOutputs StageEvaluate(const ExperimentConfig &cfg, const RunPaths &rp) {
  AttackDb db = LoadAttackDb((rp.out / kAttackDir).string());
  AttackDb enroll, eval_db;
  SplitAttackDb(db, cfg.eval.eval_fraction, DeriveSeed(cfg.seed, "dbsplit"), &enroll, &eval_db);
  Classifier extractor = Classifier::Load((rp.out / kSignatureCkpt).string(), "signature");

  std::unique_ptr<GeneratorNet> gen, gen_detect;
  if (EvalInputFor(cfg.mode) == SignatureInput::EstimatedDelta) {
    gen = std::make_unique<GeneratorNet>(
        GeneratorNet::Load(rp.Abs(AdvestCkpt("all", "g")).string()));
    gen_detect = std::make_unique<GeneratorNet>(
        GeneratorNet::Load(rp.Abs(AdvestCkpt("leave_out", "g")).string()));
  }

  TaskSuiteConfig tc;
  tc.mode = cfg.mode;
  tc.task1_classes = cfg.signature.classes;
  tc.split = cfg.eval.split;
  tc.verify.targets_per_class = cfg.eval.targets_per_class;
  tc.verify.nontarget_factor = cfg.eval.nontarget_factor;
  tc.with_benign_variant = cfg.eval.with_benign;
  tc.seed = DeriveSeed(cfg.seed, "eval");

  TaskSuiteInputs in;
  in.enroll_db = &enroll;
  in.eval_db = &eval_db;
  in.extractor = &extractor;
  in.gen = gen.get();
  in.gen_detect = gen_detect.get();

  std::vector<Json> audit;
  Json report = RunTaskSuite(in, tc, &audit);
  WriteJsonFile((rp.out / kReportJson).string(), report);
  WriteJsonl((rp.out / "eval_audit.jsonl").string(), audit);

  StageOutputs so;
  so.files.emplace_back("report", kReportJson);
  so.files.emplace_back("eval_audit", "eval_audit.jsonl");
  so.info["audit_rows"] = static_cast<int>(audit.size());
  return so;
}

StageOutputs StageReport(const ExperimentConfig &cfg, const RunPaths &rp) {
  (void)cfg;
  Json report = ReadJsonFile((rp.out / kReportJson).string());
  std::string why;
  Require(MatchesSchema(report, ReportSchema(), &why), "report: invalid report.json: ", why);

  std::ofstream txt((rp.out / "report.txt").string(), std::ios::trunc);
  Require(txt.good(), "report: cannot write report.txt");
  txt << RenderReportText(report);
  txt.close();
  WriteConfusionPpm(report, (rp.out / "confusion.ppm").string());
  WriteJsonFile((rp.out / "report.schema.json").string(), ReportSchema());

  StageOutputs so;
  so.files.emplace_back("report_text", "report.txt");
  so.files.emplace_back("confusion_heatmap", "confusion.ppm");
  so.files.emplace_back("report_schema", "report.schema.json");
  return so;
}

void CheckStageDeps(const ExperimentConfig &cfg, const RunPaths &rp, const std::string &stage) {
  const bool train_est = TrainInputFor(cfg.mode) == SignatureInput::EstimatedDelta;
  const bool eval_est = EvalInputFor(cfg.mode) == SignatureInput::EstimatedDelta;
  if (stage == "train-victim") {
    NeedArtifact(rp, rp.corpus_manifest, "corpus manifest", "gen-corpus");
  } else if (stage == "gen-attacks") {
    NeedArtifact(rp, kVictimCkpt, "victim checkpoint", "train-victim");
    NeedArtifact(rp, rp.corpus_manifest, "corpus manifest", "gen-corpus");
  } else if (stage == "train-advest") {
    NeedArtifact(rp, kAttackIndex, "attack database index", "gen-attacks");
  } else if (stage == "train-signature") {
    NeedArtifact(rp, kAttackIndex, "attack database index", "gen-attacks");
    if (train_est)
      NeedArtifact(rp, AdvestCkpt("all", "g"), "perturbation estimator checkpoint",
                   "train-advest");
  } else if (stage == "evaluate") {
    NeedArtifact(rp, kAttackIndex, "attack database index", "gen-attacks");
    NeedArtifact(rp, kSignatureCkpt, "signature checkpoint", "train-signature");
    if (eval_est) {
      NeedArtifact(rp, AdvestCkpt("all", "g"), "perturbation estimator checkpoint",
                   "train-advest");
      NeedArtifact(rp, AdvestCkpt("leave_out", "g"),
                   "leave-out perturbation estimator checkpoint", "train-advest");
    }
  } else if (stage == "report") {
    NeedArtifact(rp, kReportJson, "evaluation report", "evaluate");
  }
}

Json InitOrLoadManifest(const RunPaths &rp, const ExperimentConfig &cfg) {
  fs::create_directories(rp.out);
  const fs::path mp = rp.out / kManifestName;
  const Json canon = cfg.ToJson();
  if (fs::exists(mp)) {
    Json m = ReadJsonFile(mp.string());
    if (m.at("config") != canon)
      FailWith<ConfigError>("output directory '", rp.out.string(),
                            "' holds a run with a different configuration; use a fresh directory");
    return m;
  }
  Json m;
  m["tool_version"] = kToolVersion;
  m["config"] = canon;
  m["stages"] = Json::object();
  return m;
}

bool StageOutputsIntact(const RunPaths &rp, const Json &manifest, const std::string &stage) {
  if (!manifest.at("stages").contains(stage)) return false;
  const Json &hashes = manifest.at("stages").at(stage).at("hashes");
  for (const auto &el : hashes.items()) {
    const fs::path p = rp.Abs(el.key());
    if (!fs::exists(p)) return false;
    if (HashFileHex(p.string()) != el.value().get<std::string>()) return false;
  }
  return true;
}

}  // namespace

const std::vector<std::string> &StageNames() {
  static const std::vector<std::string> names = {"gen-corpus",    "train-victim",
                                                 "gen-attacks",   "train-advest",
                                                 "train-signature", "evaluate", "report"};
  return names;
}

StageResult RunStage(const ExperimentConfig &cfg, const std::string &stage, bool force) {
  if (std::find(StageNames().begin(), StageNames().end(), stage) == StageNames().end())
    FailWith<ConfigError>("unknown stage '", stage, "'");
  cfg.Validate();
  RunPaths rp(cfg);
  Json manifest = InitOrLoadManifest(rp, cfg);
  CheckStageDeps(cfg, rp, stage);
  if (!force && StageOutputsIntact(rp, manifest, stage)) return {true};

  StageOutputs so;
  if (stage == "gen-corpus") so = StageGenCorpus(cfg, rp);
  else if (stage == "train-victim") so = StageTrainVictim(cfg, rp);
  else if (stage == "gen-attacks") so = StageGenAttacks(cfg, rp);
  else if (stage == "train-advest") so = StageTrainAdvest(cfg, rp);
  else if (stage == "train-signature") so = StageTrainSignature(cfg, rp);
  else if (stage == "evaluate") so = StageEvaluate(cfg, rp);
  else so = StageReport(cfg, rp);

  Json outputs = Json::object(), hashes = Json::object();
  for (const auto &[name, path] : so.files) {
    Require(fs::exists(rp.Abs(path)), "stage ", stage, ": declared output '", path, "' missing");
    outputs[name] = path;
    hashes[path] = HashFileHex(rp.Abs(path).string());
  }
  manifest["stages"][stage] =
      Json{{"outputs", outputs}, {"hashes", hashes}, {"info", so.info}};
  WriteJsonFile((rp.out / kManifestName).string(), manifest);
  return {false};
}

Json RunAll(const ExperimentConfig &cfg, bool force) {
  for (const std::string &stage : StageNames()) RunStage(cfg, stage, force);
  return LoadManifest(ResolveDataPath(cfg.output_dir));
}

Json LoadManifest(const std::string &out_dir) {
  return ReadJsonFile((fs::path(out_dir) / kManifestName).string());
}

void VerifyManifestIntegrity(const std::string &out_dir) {
  const fs::path out(out_dir);
  Json m = LoadManifest(out_dir);
  const Json &canon = m.at("config");
  Require(ExperimentConfig::FromJson(canon).ToJson() == canon,
          "manifest: config snapshot is not canonical");
  for (const auto &st : m.at("stages").items()) {
    for (const auto &el : st.value().at("hashes").items()) {
      fs::path p(el.key());
      if (!p.is_absolute()) p = out / p;
      Require(fs::exists(p), "manifest: stage ", st.key(), " output '", el.key(), "' is missing");
      Require(HashFileHex(p.string()) == el.value().get<std::string>(), "manifest: stage ",
              st.key(), " output '", el.key(), "' does not match its recorded hash");
    }
  }
}

// ---- reports ------------------------------------------------------------

Json ReportSchema() {
  const Json num{{"type", "number"}};
  const Json integer{{"type", "integer"}};
  const Json str{{"type", "string"}};
  const Json str_array{{"type", "array"}, {"items", str}};
  const Json matrix{{"type", "array"},
                    {"items", Json{{"type", "array"}, {"items", num}}}};
  Json eer_entry;
  eer_entry["type"] = Json::array({"object", "null"});
  eer_entry["additionalProperties"] = false;
  eer_entry["required"] = Json::array({"eer", "trials", "targets", "nontargets"});
  eer_entry["properties"] =
      Json{{"eer", num}, {"trials", integer}, {"targets", integer}, {"nontargets", integer}};

  Json counts;
  counts["type"] = "object";
  counts["additionalProperties"] = false;
  counts["required"] = Json::array({"enroll_records", "eval_records"});
  counts["properties"] = Json{{"enroll_records", integer}, {"eval_records", integer}};

  Json task1;
  task1["type"] = "object";
  task1["additionalProperties"] = false;
  task1["required"] =
      Json::array({"classes", "accuracy", "num_eval", "confusion", "confusion_row_percent"});
  task1["properties"] = Json{{"classes", str_array},
                             {"accuracy", num},
                             {"num_eval", integer},
                             {"confusion", matrix},
                             {"confusion_row_percent", matrix}};

  Json task2;
  task2["type"] = "object";
  task2["additionalProperties"] = false;
  task2["required"] = Json::array({"known", "unknown", "known_unknown"});
  task2["properties"] =
      Json{{"known", eer_entry}, {"unknown", eer_entry}, {"known_unknown", eer_entry}};

  Json task3;
  task3["type"] = "object";
  task3["additionalProperties"] = false;
  task3["required"] = Json::array({"without_benign", "with_benign"});
  task3["properties"] = Json{{"without_benign", eer_entry}, {"with_benign", eer_entry}};

  Json mode = str;
  mode["enum"] = Json::array({"baseline", "oracle", "estimated", "proposed"});

  Json schema;
  schema["type"] = "object";
  schema["additionalProperties"] = false;
  schema["required"] = Json::array({"mode", "seed", "counts", "task1", "task2", "task3"});
  schema["properties"] = Json{{"mode", mode},     {"seed", integer}, {"counts", counts},
                              {"task1", task1},   {"task2", task2},  {"task3", task3}};
  return schema;
}

namespace {

std::string JsonTypeName(const Json &j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  if (j.is_number_integer()) return "integer";
  return "number";
}

bool SchemaCheck(const Json &doc, const Json &schema, const std::string &where, std::string *why) {
  auto fail = [&](const std::string &msg) {
    if (why != nullptr) *why += where + ": " + msg;
    return false;
  };
  if (schema.contains("type")) {
    std::vector<std::string> allowed;
    if (schema.at("type").is_string()) allowed.push_back(schema.at("type").get<std::string>());
    else for (const Json &t : schema.at("type")) allowed.push_back(t.get<std::string>());
    const std::string got = JsonTypeName(doc);
    bool ok = false;
    for (const std::string &t : allowed)
      if (t == got || (t == "number" && got == "integer")) ok = true;
    if (!ok) return fail("expected " + schema.at("type").dump() + ", got " + got);
    if (doc.is_null()) return true;  // nullable: nothing further to check
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const Json &v : schema.at("enum"))
      if (v == doc) ok = true;
    if (!ok) return fail("value " + doc.dump() + " not in " + schema.at("enum").dump());
  }
  if (doc.is_object()) {
    if (schema.contains("required"))
      for (const Json &k : schema.at("required"))
        if (!doc.contains(k.get<std::string>()))
          return fail("missing required key '" + k.get<std::string>() + "'");
    const bool closed =
        schema.contains("additionalProperties") && schema.at("additionalProperties") == false;
    const Json props = schema.value("properties", Json::object());
    for (const auto &el : doc.items()) {
      if (props.contains(el.key())) {
        if (!SchemaCheck(el.value(), props.at(el.key()), where + "." + el.key(), why))
          return false;
      } else if (closed) {
        return fail("unexpected key '" + el.key() + "'");
      }
    }
  }
  if (doc.is_array() && schema.contains("items")) {
    for (size_t i = 0; i < doc.size(); ++i)
      if (!SchemaCheck(doc[i], schema.at("items"), where + "[" + std::to_string(i) + "]", why))
        return false;
  }
  return true;
}

std::string Percent(const Json &eer_entry) {
  if (eer_entry.is_null()) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100.0 * eer_entry.at("eer").get<double>();
  return os.str();
}

}  // namespace

bool MatchesSchema(const Json &doc, const Json &schema, std::string *why) {
  return SchemaCheck(doc, schema, "$", why);
}

std::string RenderReportText(const Json &report) {
  std::ostringstream os;
  os << "attack signature report  (mode: " << report.at("mode").get<std::string>() << ", seed "
     << report.at("seed") << ")\n";
  os << "records: " << report.at("counts").at("enroll_records") << " enrollment, "
     << report.at("counts").at("eval_records") << " evaluation\n\n";

  const Json &t1 = report.at("task1");
  const std::vector<std::string> classes = t1.at("classes").get<std::vector<std::string>>();
  size_t w = 9;
  for (const std::string &c : classes) w = std::max(w, c.size() + 2);
  os << "Known attack classification\n";
  os << "  accuracy: " << std::fixed << std::setprecision(1)
     << 100.0 * t1.at("accuracy").get<double>() << "%  (" << t1.at("num_eval")
     << " eval records)\n";
  os << "  confusion, row %:\n";
  os << "  " << std::setw(static_cast<int>(w)) << "";
  for (const std::string &c : classes) os << std::setw(static_cast<int>(w)) << c;
  os << "\n";
  const Json &pct = t1.at("confusion_row_percent");
  for (size_t r = 0; r < classes.size(); ++r) {
    os << "  " << std::setw(static_cast<int>(w)) << classes[r];
    for (size_t c = 0; c < classes.size(); ++c)
      os << std::setw(static_cast<int>(w)) << std::fixed << std::setprecision(1)
         << pct.at(r).at(c).get<double>();
    os << "\n";
  }
  os << "\n";

  const Json &t2 = report.at("task2");
  os << "Attack verification EER(%)\n";
  os << "  " << std::setw(9) << "Known" << std::setw(9) << "Unknown" << std::setw(15)
     << "Known+Unknown" << "\n";
  os << "  " << std::setw(9) << Percent(t2.at("known")) << std::setw(9)
     << Percent(t2.at("unknown")) << std::setw(15) << Percent(t2.at("known_unknown")) << "\n\n";

  const Json &t3 = report.at("task3");
  os << "Unknown-attack detection EER(%)\n";
  os << "  " << std::setw(16) << "Without benign" << std::setw(13) << "With benign" << "\n";
  os << "  " << std::setw(16) << Percent(t3.at("without_benign")) << std::setw(13)
     << Percent(t3.at("with_benign")) << "\n";
  return os.str();
}

void WriteConfusionPpm(const Json &report, const std::string &path, int cell_px) {
  Require(cell_px > 0, "heatmap: cell size must be positive");
  const Json &pct = report.at("task1").at("confusion_row_percent");
  const int k = static_cast<int>(pct.size());
  Require(k > 0, "heatmap: empty confusion matrix");
  const int wh = k * cell_px;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  Require(os.good(), "heatmap: cannot open '", path, "'");
  os << "P6\n" << wh << " " << wh << "\n255\n";
  for (int py = 0; py < wh; ++py) {
    for (int px = 0; px < wh; ++px) {
      const double v = pct.at(py / cell_px).at(px / cell_px).get<double>();
      const double t = std::min(1.0, std::max(0.0, v / 100.0));
      const unsigned char rgb[3] = {static_cast<unsigned char>(std::lround(13 + t * (240 - 13))),
                                    static_cast<unsigned char>(std::lround(8 + t * (249 - 8))),
                                    static_cast<unsigned char>(std::lround(135 + t * (33 - 135)))};
      os.write(reinterpret_cast<const char *>(rgb), 3);
    }
  }
  Require(os.good(), "heatmap: write failed for '", path, "'");
}

}  // namespace advsig
