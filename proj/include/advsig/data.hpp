// advsig/data.hpp
// Labeled-waveform datasets and corpus manifest I/O.

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

#ifndef ADVSIG_DATA_HPP
#define ADVSIG_DATA_HPP

#include <string>
#include <vector>

#include "advsig/waveform.hpp"

namespace advsig {

struct LabeledWave {
  Waveform wave;
  int label = -1;
  std::string id;  // stable identifier (e.g. relative path)
};

/// Reads a corpus directory written by gen-corpus: manifest.jsonl rows
/// {path, speaker_id, duration} with WAV paths relative to the directory.
/// Result is sorted by id so downstream behavior is independent of manifest
/// order.
std::vector<LabeledWave> LoadCorpus(const std::string &dir, int expected_rate = 16000);

/// Deterministic per-class split: for each label, the first
/// round(holdout_fraction * n) utterances of a seeded shuffle go to *holdout,
/// the rest to *train.
void SplitByLabel(const std::vector<LabeledWave> &data, double holdout_fraction,
                  uint64_t seed, std::vector<LabeledWave> *train,
                  std::vector<LabeledWave> *holdout);

}  // namespace advsig

#endif  // ADVSIG_DATA_HPP
