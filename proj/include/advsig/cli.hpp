// advsig/cli.hpp
// Experiment orchestration: validated configuration with scale presets, the
// staged pipeline (corpus -> victim -> attacks -> estimator -> signature ->
// evaluate -> report), run manifests with artifact hashes, and report
// emission (JSON + text tables + confusion heatmap).

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

#ifndef ADVSIG_CLI_HPP
#define ADVSIG_CLI_HPP

#include <optional>
#include <string>
#include <vector>

#include "advsig/eval.hpp"
#include "advsig/synth.hpp"

namespace advsig {

inline constexpr const char *kToolVersion = "advsig 0.1.0";
inline constexpr const char *kDataRootEnv = "ADVSIG_DATA_ROOT";

/// Rejected configuration; the process exit code for this is 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing upstream artifact; the process exit code for this is 3.
class DependencyError : public Error {
 public:
  using Error::Error;
};

template <typename E, typename... Args>
[[noreturn]] void FailWith(const Args &...args) {
  std::ostringstream os;
  detail::FormatTo(os, args...);
  throw E(os.str());
}

// ---- experiment configuration ------------------------------------------

struct CorpusSource {
  std::string type = "synthetic";  // "synthetic" or "directory"
  SynthSpec synth;                 // used when type == "synthetic"
  std::string path;                // used when type == "directory"
};

struct VictimSection {
  int channels = 16;
  int num_blocks = 1;
  int embed_dim = 16;
  int epochs = 8;
  int batch = 8;
  double lr = 1e-3;
  double crop_seconds = 0.6;
  double holdout_fraction = 0.25;
};

struct AttackSection {
  std::vector<std::string> classes;
  AttackRanges ranges;
  double fraction = 1.0;
};

struct AdvestSection {
  bool train_all = true;        // estimator trained on every attack class
  bool train_leave_out = true;  // second estimator with leave_out excluded
  std::vector<std::string> leave_out = {"cw_l0", "cw_l2", "cw_linf"};
  AdvEstConfig arch;
  int cycles = 150;
  int batch = 2;
  int segment = 2048;
  double lr_g = 2e-4;
  double lr_d = 1e-4;
  double lambda_sup = 1.0;
};

struct SignatureSection {
  std::vector<std::string> classes;  // closed-set classes; also the extractor size
  int channels = 16;
  int num_blocks = 1;
  int embed_dim = 16;
  int epochs = 8;
  int batch = 8;
  double lr = 1e-3;
  double crop_seconds = 0.6;
};

struct EvalSection {
  double eval_fraction = 0.3;  // attack-database share held out for evaluation
  AttackGroupSplit split;
  int targets_per_class = 50;
  int nontarget_factor = 3;
  bool with_benign = true;
};

/// The full experiment: strict JSON schema (unknown keys rejected at every
/// level), three scale presets, canonical serialization.
struct ExperimentConfig {
  std::string preset = "smoke";  // smoke | desk | paper
  uint64_t seed = 0;
  std::string output_dir;
  SignatureMode mode = SignatureMode::Proposed;
  CorpusSource corpus;
  VictimSection victim;
  AttackSection attacks;
  AdvestSection advest;
  SignatureSection signature;
  EvalSection eval;

  /// Semantic checks (class names known, sizes positive, paths set).
  void Validate() const;
  Json ToJson() const;
  /// Starts from the preset named in the document (default smoke), then
  /// overlays the remaining keys; partial section overrides are fine.
  static ExperimentConfig FromJson(const Json &j);
  static ExperimentConfig Preset(const std::string &name);
};

/// Flag handling shared with the binary: preset flag beats the file's preset,
/// then the file's keys, then explicit --seed / --output overrides.
ExperimentConfig LoadCliConfig(const std::string &config_path, const std::string &preset_flag,
                               const std::optional<uint64_t> &seed_override,
                               const std::string &output_override);

/// Relative paths resolve against $ADVSIG_DATA_ROOT when it is set.
std::string ResolveDataPath(const std::string &path);

// ---- staged pipeline ----------------------------------------------------

/// Pipeline order: gen-corpus, train-victim, gen-attacks, train-advest,
/// train-signature, evaluate, report.
const std::vector<std::string> &StageNames();

struct StageResult {
  bool skipped = false;
};

/// Runs one stage: checks the manifest's config snapshot, verifies upstream
/// artifacts (DependencyError names the missing one), skips completed stages
/// whose outputs still hash-match unless force, and records outputs + hashes
/// in manifest.json.
StageResult RunStage(const ExperimentConfig &cfg, const std::string &stage, bool force = false);

/// All stages in order; returns the finished manifest.
Json RunAll(const ExperimentConfig &cfg, bool force = false);

Json LoadManifest(const std::string &out_dir);

/// Every path referenced by the manifest exists and matches its recorded
/// hash; the config snapshot parses back to the identical canonical form.
void VerifyManifestIntegrity(const std::string &out_dir);

// ---- reports ------------------------------------------------------------

/// Machine-checkable description of report.json (type / required /
/// properties / items / enum subset of JSON Schema).
Json ReportSchema();

/// True when `doc` satisfies `schema`; on failure appends the offending
/// location to *why.
bool MatchesSchema(const Json &doc, const Json &schema, std::string *why = nullptr);

/// Text tables: closed-set accuracy + row-percent confusion, verification
/// EER(%) under {Known, Unknown, Known+Unknown}, detection EER(%) with and
/// without benign.
std::string RenderReportText(const Json &report);

/// Binary PPM heatmap of the row-percent confusion matrix; classes appear in
/// report order along both axes.
void WriteConfusionPpm(const Json &report, const std::string &path, int cell_px = 24);

}  // namespace advsig

#endif  // ADVSIG_CLI_HPP
