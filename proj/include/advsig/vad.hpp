// advsig/vad.hpp

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

#ifndef ADVSIG_VAD_HPP
#define ADVSIG_VAD_HPP

#include <cmath>
#include <vector>

#include "advsig/waveform.hpp"

namespace advsig {

/// Energy-based voice activity detection. The signal is cut into
/// non-overlapping frames of frame_ms (the trailing remainder forms a short
/// final frame); a frame is kept when its mean-power log-energy exceeds the
/// loudest frame's by more than threshold_db (threshold_db < 0). Thresholding
/// relative to the utterance maximum keeps the decision level-invariant.
/// Kept frames are concatenated in order.
inline Waveform EnergyVad(const Waveform &x, double frame_ms = 25.0,
                          double threshold_db = -40.0) {
  ValidateWaveform(x, "vad input");
  Require(x.size() > 0, "EnergyVad: empty input");
  Require(frame_ms > 0, "EnergyVad: frame_ms must be positive");
  Require(threshold_db < 0, "EnergyVad: threshold_db must be negative, got ",
          threshold_db);

  const Eigen::Index n = x.size();
  Eigen::Index frame_len =
      static_cast<Eigen::Index>(std::lround(frame_ms * x.sample_rate / 1000.0));
  if (frame_len < 1) frame_len = 1;
  if (frame_len > n) frame_len = n;

  struct Frame {
    Eigen::Index begin, len;
    double log_e;
  };
  std::vector<Frame> frames;
  constexpr double kFloor = 1e-12;
  for (Eigen::Index b = 0; b < n; b += frame_len) {
    Eigen::Index len = std::min(frame_len, n - b);
    double p = 0;
    for (Eigen::Index i = 0; i < len; ++i) {
      double s = x.samples[b + i];
      p += s * s;
    }
    p /= static_cast<double>(len);
    frames.push_back({b, len, 10.0 * std::log10(p + kFloor)});
  }

  double max_e = frames.front().log_e;
  for (const Frame &f : frames) max_e = std::max(max_e, f.log_e);

  Eigen::Index kept = 0;
  for (const Frame &f : frames)
    if (f.log_e > max_e + threshold_db) kept += f.len;

  Waveform out;
  out.sample_rate = x.sample_rate;
  out.samples.resize(kept);
  Eigen::Index w = 0;
  for (const Frame &f : frames) {
    if (f.log_e > max_e + threshold_db) {
      out.samples.segment(w, f.len) = x.samples.segment(f.begin, f.len);
      w += f.len;
    }
  }
  return out;
}

}  // namespace advsig

#endif  // ADVSIG_VAD_HPP
