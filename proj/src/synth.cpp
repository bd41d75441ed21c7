// src/synth.cpp

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

#include "advsig/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "advsig/jsonio.hpp"
#include "advsig/rng.hpp"
#include "advsig/wav_io.hpp"

namespace advsig {

void SynthSpec::Validate() const {
  Require(num_speakers >= 2, "synth: need at least 2 speakers, got ", num_speakers);
  Require(utterances_per_speaker >= 1, "synth: utterances_per_speaker must be >= 1");
  Require(duration_s > 0.1, "synth: duration too short: ", duration_s);
  Require(sample_rate > 0, "synth: bad sample rate");
}

namespace {

struct SpeakerVoice {
  double formants[3];
  double bandwidths[3];
  double f0_lo, f0_hi;
  double noise_mix;
};

SpeakerVoice MakeVoice(const SynthSpec &spec, int speaker) {
  Rng rng(DeriveSeed(spec.seed, "speaker", static_cast<uint64_t>(speaker)));
  SpeakerVoice v;
  // three resonances drawn from staggered bands keep voices apart
  v.formants[0] = rng.Uniform(300.0, 900.0);
  v.formants[1] = rng.Uniform(1000.0, 2200.0);
  v.formants[2] = rng.Uniform(2400.0, 3600.0);
  for (int i = 0; i < 3; ++i) v.bandwidths[i] = rng.Uniform(60.0, 160.0);
  double f0c = rng.Uniform(90.0, 230.0);
  v.f0_lo = f0c * 0.9;
  v.f0_hi = f0c * 1.1;
  v.noise_mix = rng.Uniform(0.02, 0.08);
  return v;
}

/// In-place second-order resonator (all-pole biquad).
void Resonate(Eigen::VectorXf *x, double freq, double bw, int sample_rate) {
  const double r = std::exp(-M_PI * bw / sample_rate);
  const double a1 = -2.0 * r * std::cos(2.0 * M_PI * freq / sample_rate);
  const double a2 = r * r;
  double y1 = 0, y2 = 0;
  for (Eigen::Index i = 0; i < x->size(); ++i) {
    double y = static_cast<double>((*x)[i]) - a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    (*x)[i] = static_cast<float>(y);
  }
}

}  // namespace

Waveform SynthUtterance(const SynthSpec &spec, int speaker, int utt) {
  spec.Validate();
  Require(speaker >= 0 && speaker < spec.num_speakers, "synth: speaker index out of range");
  Require(utt >= 0 && utt < spec.utterances_per_speaker, "synth: utterance index out of range");
  SpeakerVoice voice = MakeVoice(spec, speaker);
  Rng rng(DeriveSeed(spec.seed, "utt",
                     static_cast<uint64_t>(speaker) * 1000003ull + static_cast<uint64_t>(utt)));

  const int n = static_cast<int>(std::lround(spec.duration_s * spec.sample_rate));
  Waveform w;
  w.sample_rate = spec.sample_rate;
  w.samples = Eigen::VectorXf::Zero(n);

  // glottal-ish excitation: pulse train with slowly drifting period + noise
  double f0 = rng.Uniform(voice.f0_lo, voice.f0_hi);
  double drift = rng.Uniform(-0.15, 0.15);  // semitone-scale drift over the utterance
  double phase = rng.Uniform(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / n;
    double inst_f0 = f0 * (1.0 + drift * t);
    phase += inst_f0 / spec.sample_rate;
    if (phase >= 1.0) {
      phase -= 1.0;
      w.samples[i] += 1.0f;
    }
    w.samples[i] += static_cast<float>(voice.noise_mix * rng.Normal());
  }

  // amplitude envelope: a few random "syllables" so energy varies over time
  int segs = 3 + static_cast<int>(rng.UniformInt(0, 2));
  Eigen::VectorXf env = Eigen::VectorXf::Constant(n, 0.15f);
  for (int s = 0; s < segs; ++s) {
    int c = static_cast<int>(rng.UniformInt(0, n - 1));
    int half = static_cast<int>(rng.UniformInt(n / 16, n / 6));
    for (int i = std::max(0, c - half); i < std::min(n, c + half); ++i) {
      double fall = 1.0 - std::abs(i - c) / static_cast<double>(half);
      env[i] = std::max(env[i], static_cast<float>(fall));
    }
  }
  w.samples.array() *= env.array();

  for (int i = 0; i < 3; ++i)
    Resonate(&w.samples, voice.formants[i], voice.bandwidths[i], spec.sample_rate);

  float peak = w.samples.cwiseAbs().maxCoeff();
  if (peak > 0) w.samples *= 0.5f / peak;
  return w;
}

std::vector<LabeledWave> SynthCorpus(const SynthSpec &spec) {
  spec.Validate();
  std::vector<LabeledWave> out;
  out.reserve(static_cast<size_t>(spec.num_speakers) * spec.utterances_per_speaker);
  char buf[64];
  for (int s = 0; s < spec.num_speakers; ++s) {
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      LabeledWave lw;
      std::snprintf(buf, sizeof(buf), "spk%03d/utt%03d.wav", s, u);
      lw.id = buf;
      lw.label = s;
      lw.wave = SynthUtterance(spec, s, u);
      out.push_back(std::move(lw));
    }
  }
  return out;
}

int GenerateCorpus(const SynthSpec &spec, const std::string &dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  Require(!ec && fs::is_directory(dir), "synth: cannot create output directory '", dir, "'");
  std::vector<Json> manifest;
  for (const LabeledWave &lw : SynthCorpus(spec)) {
    fs::path p = fs::path(dir) / lw.id;
    fs::create_directories(p.parent_path(), ec);
    Require(!ec, "synth: cannot create '", p.parent_path().string(), "'");
    WriteWav(p.string(), lw.wave, WavEncoding::Pcm16);
    Json row;
    row["path"] = lw.id;
    row["speaker_id"] = lw.label;
    row["duration"] = spec.duration_s;
    manifest.push_back(std::move(row));
  }
  WriteJsonl((fs::path(dir) / "manifest.jsonl").string(), manifest);
  return static_cast<int>(manifest.size());
}

}  // namespace advsig
