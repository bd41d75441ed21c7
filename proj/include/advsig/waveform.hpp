// advsig/waveform.hpp

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

#ifndef ADVSIG_WAVEFORM_HPP
#define ADVSIG_WAVEFORM_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "advsig/common.hpp"

namespace advsig {

/// Mono audio signal. Samples are float32 amplitudes, nominal range [-1, 1].
struct Waveform {
  Eigen::VectorXf samples;
  int sample_rate = 16000;

  Waveform() = default;
  Waveform(Eigen::VectorXf s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  Eigen::Index size() const { return samples.size(); }
  double DurationSeconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

inline void ValidateWaveform(const Waveform &w, const std::string &what = "waveform") {
  Require(w.sample_rate > 0, what, ": sample_rate must be positive, got ", w.sample_rate);
  Require(w.samples.allFinite(), what, ": samples contain NaN or Inf");
}

/// Norm order of a threat model. FGSM and Iter-FGSM imply LInf.
enum class Norm { L0, L1, L2, LInf };

inline std::string NormName(Norm p) {
  switch (p) {
    case Norm::L0: return "0";
    case Norm::L1: return "1";
    case Norm::L2: return "2";
    case Norm::LInf: return "inf";
  }
  Fail("NormName: bad norm enum");
}

inline Norm NormFromName(const std::string &s) {
  if (s == "0") return Norm::L0;
  if (s == "1") return Norm::L1;
  if (s == "2") return Norm::L2;
  if (s == "inf") return Norm::LInf;
  Fail("NormFromName: unsupported norm order '", s, "' (expected 0, 1, 2 or inf)");
}

/// Lp-ball constraint on a perturbation: ||delta||_p <= epsilon.
/// For p = 0, epsilon counts nonzero samples; otherwise it is in amplitude units.
struct ThreatModel {
  Norm p = Norm::LInf;
  double epsilon = 0.0;

  ThreatModel() = default;
  ThreatModel(Norm p_in, double eps) : p(p_in), epsilon(eps) { Validate(); }

  void Validate() const {
    Require(epsilon > 0, "ThreatModel: epsilon must be positive, got ", epsilon);
  }
};

}  // namespace advsig

#endif  // ADVSIG_WAVEFORM_HPP
