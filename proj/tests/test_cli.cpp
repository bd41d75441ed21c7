// tests/test_cli.cpp
// Experiment configuration schema, preset overlays, staged pipeline with
// manifest bookkeeping, report validation and run-to-run determinism.

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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "advsig/hash.hpp"
#include "advsig/jsonio.hpp"

namespace fs = std::filesystem;
using namespace advsig;

namespace {

fs::path TempDir(const std::string &tag) {
  fs::path dir = fs::temp_directory_path() / ("advsig_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string ReadFile(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << text;
}

std::vector<Json> ReadJsonl(const fs::path &p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::vector<Json> rows;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(Json::parse(line));
  return rows;
}

// A pipeline small enough to run every stage in seconds while still
// exercising both estimator variants and all three tasks.
ExperimentConfig TinyConfig(const std::string &out_dir) {
  ExperimentConfig c = ExperimentConfig::Preset("smoke");
  c.seed = 2026;
  c.output_dir = out_dir;
  c.mode = SignatureMode::Proposed;
  c.corpus.synth.num_speakers = 3;
  c.corpus.synth.utterances_per_speaker = 6;
  c.corpus.synth.duration_s = 0.8;
  c.victim.epochs = 6;
  c.advest.cycles = 60;
  c.advest.leave_out = {"cw_l2"};
  c.advest.arch.tcn_blocks = 2;
  c.advest.arch.d_layers = 4;
  c.signature.channels = 16;
  c.signature.epochs = 10;
  c.eval.targets_per_class = 20;
  return c;
}

// One completed tiny run, shared across the test cases that only read it.
struct PipelineFixture {
  fs::path dir;
  Json manifest;

  static const PipelineFixture &Get() {
    static PipelineFixture f = [] {
      PipelineFixture p;
      p.dir = TempDir("pipeline_a");
      p.manifest = RunAll(TinyConfig(p.dir.string()));
      return p;
    }();
    return f;
  }
};

}  // namespace

TEST_CASE("presets serialize to canonical json and round-trip") {
  for (const std::string name : {"smoke", "desk", "paper"}) {
    CAPTURE(name);
    ExperimentConfig c = ExperimentConfig::Preset(name);
    const Json j = c.ToJson();
    CHECK(j.at("preset") == name);
    ExperimentConfig back = ExperimentConfig::FromJson(j);
    CHECK(back.ToJson() == j);
  }
  CHECK_THROWS_AS(ExperimentConfig::Preset("nightly"), ConfigError);

  // an empty document is a plain smoke run
  ExperimentConfig c = ExperimentConfig::FromJson(Json::object());
  CHECK(c.preset == "smoke");
  CHECK(c.ToJson() == ExperimentConfig::Preset("smoke").ToJson());
}

TEST_CASE("config documents overlay presets and reject unknown keys") {
  Json doc{{"preset", "smoke"}, {"victim", Json{{"epochs", 3}}}};
  ExperimentConfig c = ExperimentConfig::FromJson(doc);
  CHECK(c.victim.epochs == 3);
  CHECK(c.victim.channels == ExperimentConfig::Preset("smoke").victim.channels);
  CHECK(c.attacks.classes == ExperimentConfig::Preset("smoke").attacks.classes);

  auto expect_config_error = [](const Json &bad, const std::string &needle) {
    try {
      ExperimentConfig::FromJson(bad);
      FAIL_CHECK("expected a config error mentioning '" << needle << "'");
    } catch (const ConfigError &e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_config_error(Json{{"bogus", 1}}, "bogus");
  expect_config_error(Json{{"victim", Json{{"chanels", 8}}}}, "chanels");
  expect_config_error(Json{{"preset", "nightly"}}, "nightly");
  expect_config_error(Json{{"mode", "sideways"}}, "sideways");
  expect_config_error(Json{{"corpus", Json{{"type", "tape"}}}}, "tape");
  expect_config_error(Json{{"seed", "not a number"}}, "config");
  expect_config_error(Json::array({1, 2}), "object");
}

TEST_CASE("semantic validation catches bad values") {
  auto expect_invalid = [](ExperimentConfig c, const std::string &needle) {
    try {
      c.Validate();
      FAIL_CHECK("expected a config error mentioning '" << needle << "'");
    } catch (const ConfigError &e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  ExperimentConfig base = TinyConfig("unused");
  base.Validate();  // the fixture config itself is sound

  ExperimentConfig c = base;
  c.output_dir = "";
  expect_invalid(c, "output_dir");

  c = base;
  c.attacks.classes.push_back("warp");
  expect_invalid(c, "warp");

  c = base;
  c.signature.classes = {"pgd_linf"};
  expect_invalid(c, "two");

  c = base;
  c.signature.classes = {"fgsm", "pgd_l2"};
  expect_invalid(c, "signature.classes");

  c = base;
  c.eval.split.known = {"pgd_linf", "cw_l2"};
  expect_invalid(c, "both known and unknown");

  c = base;
  c.eval.eval_fraction = 1.0;
  expect_invalid(c, "eval_fraction");

  c = base;
  c.signature.epochs = 0;
  expect_invalid(c, "signature");
}

TEST_CASE("config files load with flags taking precedence") {
  const fs::path dir = TempDir("load");
  const fs::path file = dir / "exp.json";
  WriteFile(file, R"({"preset": "smoke", "seed": 7, "output_dir": "runs/a"})");

  ExperimentConfig c = LoadCliConfig(file.string(), "", std::nullopt, "");
  CHECK(c.preset == "smoke");
  CHECK(c.seed == 7);
  CHECK(c.output_dir == "runs/a");

  // the preset flag beats the file's preset, explicit overrides beat both
  c = LoadCliConfig(file.string(), "desk", std::optional<uint64_t>(99), "runs/b");
  CHECK(c.preset == "desk");
  CHECK(c.victim.channels == ExperimentConfig::Preset("desk").victim.channels);
  CHECK(c.seed == 99);
  CHECK(c.output_dir == "runs/b");

  // no file at all: the flags alone describe the run
  c = LoadCliConfig("", "smoke", std::optional<uint64_t>(5), "runs/c");
  CHECK(c.preset == "smoke");
  CHECK(c.seed == 5);
  CHECK(c.output_dir == "runs/c");

  CHECK_THROWS_AS(LoadCliConfig((dir / "missing.json").string(), "", std::nullopt, ""),
                  ConfigError);
  WriteFile(dir / "broken.json", "{not json");
  CHECK_THROWS_AS(LoadCliConfig((dir / "broken.json").string(), "", std::nullopt, ""),
                  ConfigError);
  WriteFile(dir / "list.json", "[1, 2]");
  CHECK_THROWS_AS(LoadCliConfig((dir / "list.json").string(), "", std::nullopt, ""),
                  ConfigError);
}

TEST_CASE("relative data paths resolve against the environment root") {
  unsetenv(kDataRootEnv);
  CHECK(ResolveDataPath("runs/a") == "runs/a");
  CHECK(ResolveDataPath("/abs/runs/a") == "/abs/runs/a");
  CHECK(ResolveDataPath("") == "");

  setenv(kDataRootEnv, "/data/root", 1);
  CHECK(ResolveDataPath("runs/a") == "/data/root/runs/a");
  CHECK(ResolveDataPath("/abs/runs/a") == "/abs/runs/a");
  unsetenv(kDataRootEnv);
  CHECK(ResolveDataPath("runs/a") == "runs/a");
}

TEST_CASE("stages refuse to run before their dependencies exist") {
  const fs::path dir = TempDir("deps");
  ExperimentConfig cfg = TinyConfig(dir.string());

  CHECK_THROWS_AS(RunStage(cfg, "polish"), ConfigError);

  auto expect_dep_error = [&](const std::string &stage, const std::string &needle) {
    try {
      RunStage(cfg, stage);
      FAIL_CHECK("stage " << stage << " should have required " << needle);
    } catch (const DependencyError &e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_dep_error("train-victim", "gen-corpus");
  expect_dep_error("gen-attacks", "train-victim");
  expect_dep_error("train-advest", "gen-attacks");
  expect_dep_error("train-signature", "gen-attacks");
  expect_dep_error("evaluate", "gen-attacks");
  expect_dep_error("report", "evaluate");

  CHECK(!RunStage(cfg, "gen-corpus").skipped);
  CHECK(!RunStage(cfg, "train-victim").skipped);
  CHECK(!RunStage(cfg, "gen-attacks").skipped);
  expect_dep_error("evaluate", "train-signature");
  CHECK(!RunStage(cfg, "train-signature").skipped);
  // proposed mode scores estimated perturbations, so evaluation also needs
  // the trained estimators
  expect_dep_error("evaluate", "train-advest");
}

TEST_CASE("a directory with a different configuration is refused") {
  const fs::path dir = TempDir("mismatch");
  ExperimentConfig cfg = TinyConfig(dir.string());
  RunStage(cfg, "gen-corpus");

  ExperimentConfig other = cfg;
  other.seed = cfg.seed + 1;
  CHECK_THROWS_AS(RunStage(other, "gen-corpus"), ConfigError);
  try {
    RunStage(other, "gen-corpus");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).find("different configuration") != std::string::npos);
  }
  // the original owner keeps working
  CHECK(RunStage(cfg, "gen-corpus").skipped);
}

TEST_CASE("completed stages are skipped and force reruns deterministically") {
  const fs::path dir = TempDir("idem");
  ExperimentConfig cfg = TinyConfig(dir.string());

  CHECK(!RunStage(cfg, "gen-corpus").skipped);
  const std::string manifest_bytes = ReadFile(dir / "manifest.json");
  const std::string corpus_hash = HashFileHex((dir / "corpus" / "manifest.jsonl").string());

  CHECK(RunStage(cfg, "gen-corpus").skipped);
  CHECK(ReadFile(dir / "manifest.json") == manifest_bytes);

  CHECK(!RunStage(cfg, "gen-corpus", /*force=*/true).skipped);
  CHECK(HashFileHex((dir / "corpus" / "manifest.jsonl").string()) == corpus_hash);
  CHECK(ReadFile(dir / "manifest.json") == manifest_bytes);

  // wiping a recorded output voids the skip
  fs::remove(dir / "corpus" / "manifest.jsonl");
  CHECK(!RunStage(cfg, "gen-corpus").skipped);
  CHECK(HashFileHex((dir / "corpus" / "manifest.jsonl").string()) == corpus_hash);
}

TEST_CASE("the full pipeline records every stage in the manifest") {
  const PipelineFixture &f = PipelineFixture::Get();
  CHECK(f.manifest.at("tool_version") == kToolVersion);
  CHECK(f.manifest.at("config") == TinyConfig(f.dir.string()).ToJson());

  std::set<std::string> done;
  for (const auto &st : f.manifest.at("stages").items()) done.insert(st.key());
  std::set<std::string> want(StageNames().begin(), StageNames().end());
  CHECK(done == want);

  for (const auto &st : f.manifest.at("stages").items())
    for (const auto &el : st.value().at("outputs").items())
      CHECK(fs::exists(f.dir / el.value().get<std::string>()));

  const Json &victim_info = f.manifest.at("stages").at("train-victim").at("info");
  const double holdout = victim_info.at("holdout_accuracy").get<double>();
  CHECK(holdout >= 0.0);
  CHECK(holdout <= 1.0);
  CHECK(f.manifest.at("stages").at("gen-attacks").at("info").contains("per_class"));

  CHECK_NOTHROW(VerifyManifestIntegrity(f.dir.string()));
  CHECK(LoadManifest(f.dir.string()) == f.manifest);
}

TEST_CASE("pipeline audits show the declared inputs for every record") {
  const PipelineFixture &f = PipelineFixture::Get();

  // proposed mode: train on the true perturbation, evaluate on the estimate
  for (const Json &row : ReadJsonl(f.dir / "signature_train_audit.jsonl")) {
    const std::string want =
        row.at("label") == "benign" ? "raw_benign" : "true_delta";
    CHECK(row.at("input").get<std::string>() == want);
  }
  auto eval_rows = ReadJsonl(f.dir / "eval_audit.jsonl");
  CHECK(!eval_rows.empty());
  for (const Json &row : eval_rows) {
    const std::string want =
        row.at("label") == "benign" ? "raw_benign" : "estimated_delta";
    CHECK(row.at("input").get<std::string>() == want);
  }
}

TEST_CASE("the emitted report validates and renders deterministically") {
  const PipelineFixture &f = PipelineFixture::Get();
  const Json report = ReadJsonFile((f.dir / "report.json").string());

  std::string why;
  CHECK(MatchesSchema(report, ReportSchema(), &why));
  CHECK(why.empty());
  CHECK(ReadJsonFile((f.dir / "report.schema.json").string()) == ReportSchema());

  const std::string txt = ReadFile(f.dir / "report.txt");
  CHECK(txt == RenderReportText(report));
  for (const std::string needle : {"Known attack classification", "EER(%)", "Known",
                                   "Unknown", "Known+Unknown", "mode: proposed"})
    CHECK(txt.find(needle) != std::string::npos);

  // 2 signature classes at the default 24px cells
  const std::string ppm = ReadFile(f.dir / "confusion.ppm");
  const std::string header = "P6\n48 48\n255\n";
  REQUIRE(ppm.size() == header.size() + 48 * 48 * 3);
  CHECK(ppm.compare(0, header.size(), header) == 0);

  // schema rejections: a missing section, a stray key, a mistyped field
  Json bad = report;
  bad.erase("task2");
  CHECK(!MatchesSchema(bad, ReportSchema(), &why));
  CHECK(why.find("task2") != std::string::npos);

  bad = report;
  bad["surprise"] = 1;
  CHECK(!MatchesSchema(bad, ReportSchema(), &why));

  bad = report;
  bad["task1"]["accuracy"] = "high";
  CHECK(!MatchesSchema(bad, ReportSchema(), &why));
  CHECK(why.find("accuracy") != std::string::npos);
}

TEST_CASE("a second run with the same seed reproduces the report byte for byte") {
  const PipelineFixture &f = PipelineFixture::Get();
  const fs::path dir_b = TempDir("pipeline_b");
  ExperimentConfig cfg = TinyConfig(dir_b.string());
  RunAll(cfg);

  CHECK(ReadFile(dir_b / "report.json") == ReadFile(f.dir / "report.json"));
  CHECK(ReadFile(dir_b / "report.txt") == ReadFile(f.dir / "report.txt"));
  CHECK(ReadFile(dir_b / "confusion.ppm") == ReadFile(f.dir / "confusion.ppm"));
  CHECK(ReadFile(dir_b / "eval_audit.jsonl") == ReadFile(f.dir / "eval_audit.jsonl"));

  // a repeat pass over the finished directory touches nothing
  for (const std::string &stage : StageNames()) CHECK(RunStage(cfg, stage).skipped);
  fs::remove_all(dir_b);
}

TEST_CASE("manifest integrity detects tampered and missing outputs") {
  const PipelineFixture &f = PipelineFixture::Get();
  const fs::path dir = TempDir("tamper");
  fs::copy(f.dir, dir, fs::copy_options::recursive);
  CHECK_NOTHROW(VerifyManifestIntegrity(dir.string()));

  {
    std::ofstream out(dir / "victim.ckpt", std::ios::binary | std::ios::app);
    out << "x";
  }
  try {
    VerifyManifestIntegrity(dir.string());
    FAIL_CHECK("expected a hash mismatch");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("victim.ckpt") != std::string::npos);
  }

  fs::remove(dir / "victim.ckpt");
  try {
    VerifyManifestIntegrity(dir.string());
    FAIL_CHECK("expected a missing output");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
  fs::remove_all(dir);
}
