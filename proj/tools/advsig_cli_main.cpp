// tools/advsig_cli_main.cpp
// Command-line entry point; the real work lives in advsig/cli.hpp.

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

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

#include "advsig/cli.hpp"

namespace {

const char *StageHelp(const std::string &stage) {
  if (stage == "gen-corpus") return "write the synthetic corpus (or check an external one)";
  if (stage == "train-victim") return "train the speaker classifier under attack";
  if (stage == "gen-attacks") return "build the attack database against the victim";
  if (stage == "train-advest") return "train the perturbation estimator variants";
  if (stage == "train-signature") return "train the attack-signature extractor";
  if (stage == "evaluate") return "run the classification/verification/detection tasks";
  if (stage == "report") return "render text tables and the confusion heatmap";
  return "";
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"adversarial attack signatures: staged experiment pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, preset, output;
  uint64_t seed = 0;
  bool force = false;
  app.add_option("--config", config_path, "experiment configuration file (JSON)");
  app.add_option("--preset", preset, "scale preset: smoke, desk or paper");
  CLI::Option *seed_opt = app.add_option("--seed", seed, "root random seed override");
  app.add_option("--output", output, "output directory override");
  app.add_flag("--force", force, "re-run stages whose outputs are already up to date");

  for (const std::string &stage : advsig::StageNames())
    app.add_subcommand(stage, StageHelp(stage));
  app.add_subcommand("run-all", "every stage in pipeline order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::optional<uint64_t> seed_override;
    if (seed_opt->count() > 0) seed_override = seed;
    advsig::ExperimentConfig cfg =
        advsig::LoadCliConfig(config_path, preset, seed_override, output);
    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "run-all") {
      advsig::RunAll(cfg, force);
    } else {
      advsig::StageResult res = advsig::RunStage(cfg, sub, force);
      if (res.skipped) std::fprintf(stderr, "%s: outputs up to date, skipping\n", sub.c_str());
    }
  } catch (const advsig::ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const advsig::DependencyError &e) {
    std::fprintf(stderr, "dependency error: %s\n", e.what());
    return 3;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
