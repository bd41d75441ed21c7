// src/data.cpp

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

#include "advsig/data.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

#include "advsig/jsonio.hpp"
#include "advsig/rng.hpp"
#include "advsig/wav_io.hpp"

namespace advsig {

std::vector<LabeledWave> LoadCorpus(const std::string &dir, int expected_rate) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  const fs::path manifest = root / "manifest.jsonl";
  Require(fs::exists(manifest), "corpus manifest not found: '", manifest.string(), "'");
  std::vector<LabeledWave> out;
  for (const Json &row : ReadJsonl(manifest.string())) {
    LabeledWave lw;
    lw.id = row.at("path").get<std::string>();
    lw.label = row.at("speaker_id").get<int>();
    lw.wave = ReadWav((root / lw.id).string(), expected_rate);
    out.push_back(std::move(lw));
  }
  Require(!out.empty(), "corpus manifest '", manifest.string(), "' is empty");
  std::sort(out.begin(), out.end(),
            [](const LabeledWave &a, const LabeledWave &b) { return a.id < b.id; });
  return out;
}

void SplitByLabel(const std::vector<LabeledWave> &data, double holdout_fraction,
                  uint64_t seed, std::vector<LabeledWave> *train,
                  std::vector<LabeledWave> *holdout) {
  Require(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
          "SplitByLabel: holdout fraction must be in [0, 1), got ", holdout_fraction);
  train->clear();
  holdout->clear();
  std::map<int, std::vector<size_t>> by_label;
  for (size_t i = 0; i < data.size(); ++i) by_label[data[i].label].push_back(i);
  for (auto &[label, idx] : by_label) {
    Rng rng(DeriveSeed(seed, "split", static_cast<uint64_t>(label)));
    rng.Shuffle(&idx);
    size_t nh = static_cast<size_t>(std::lround(holdout_fraction * idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) {
      (k < nh ? holdout : train)->push_back(data[idx[k]]);
    }
  }
  auto by_id = [](const LabeledWave &a, const LabeledWave &b) { return a.id < b.id; };
  std::sort(train->begin(), train->end(), by_id);
  std::sort(holdout->begin(), holdout->end(), by_id);
}

}  // namespace advsig
