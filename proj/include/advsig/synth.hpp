// advsig/synth.hpp
// Deterministic synthetic speaker corpus: each speaker is a fixed bank of
// second-order resonators excited by a pulse train plus noise, giving
// speaker-discriminable spectra without any external data.

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

#ifndef ADVSIG_SYNTH_HPP
#define ADVSIG_SYNTH_HPP

#include <string>
#include <vector>

#include "advsig/data.hpp"

namespace advsig {

struct SynthSpec {
  int num_speakers = 10;
  int utterances_per_speaker = 20;
  double duration_s = 2.0;
  int sample_rate = 16000;
  uint64_t seed = 0;

  void Validate() const;
};

/// One utterance, fully determined by (spec, speaker, utt).
Waveform SynthUtterance(const SynthSpec &spec, int speaker, int utt);

/// In-memory corpus (labels = speaker indices, ids = relative paths).
std::vector<LabeledWave> SynthCorpus(const SynthSpec &spec);

/// Writes WAVs + manifest.jsonl under dir; returns the number of rows.
int GenerateCorpus(const SynthSpec &spec, const std::string &dir);

}  // namespace advsig

#endif  // ADVSIG_SYNTH_HPP
