// advsig/frontend.hpp
// Differentiable log-mel front-end. The DFT is expressed as two dense
// matrix products (real and imaginary banks with the analysis window folded
// in), so gradients flow from the loss all the way back to the waveform.

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

#ifndef ADVSIG_FRONTEND_HPP
#define ADVSIG_FRONTEND_HPP

#include <Eigen/Dense>
#include <cmath>

#include "advsig/autodiff.hpp"
#include "advsig/common.hpp"

namespace advsig {

struct FrontendConfig {
  int sample_rate = 16000;
  int frame_len = 400;  // 25 ms
  int hop = 160;        // 10 ms
  int fft_size = 512;
  int mel_bins = 40;
  double fmin = 0.0;
  double fmax = 8000.0;
  double floor = 1e-6;  // added before the log

  int Bins() const { return fft_size / 2 + 1; }
  int NumFrames(int num_samples) const {
    Require(num_samples >= frame_len, "frontend: input of ", num_samples,
            " samples is shorter than one frame (", frame_len, ")");
    return (num_samples - frame_len) / hop + 1;
  }
};

inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular mel filter bank, [mel_bins x (fft_size/2+1)].
inline Eigen::MatrixXd MelFilterbank(const FrontendConfig &cfg) {
  const int bins = cfg.Bins();
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.mel_bins, bins);
  const double mlo = HzToMel(cfg.fmin), mhi = HzToMel(cfg.fmax);
  Eigen::VectorXd edges(cfg.mel_bins + 2);
  for (int i = 0; i < cfg.mel_bins + 2; ++i)
    edges[i] = MelToHz(mlo + (mhi - mlo) * i / (cfg.mel_bins + 1));
  for (int m = 0; m < cfg.mel_bins; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int b = 0; b < bins; ++b) {
      double f = static_cast<double>(b) * cfg.sample_rate / cfg.fft_size;
      double w = 0.0;
      if (f > lo && f < hi) w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      fb(m, b) = std::max(0.0, w);
    }
  }
  return fb;
}

/// Precomputed constant matrices for one front-end configuration.
template <typename S>
struct Frontend {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  FrontendConfig cfg;
  Mat dft_re;  // [bins x frame_len], Hann window folded in
  Mat dft_im;
  Mat mel;  // [mel_bins x bins]

  explicit Frontend(const FrontendConfig &c) : cfg(c) {
    Require(cfg.fft_size >= cfg.frame_len, "frontend: fft_size < frame_len");
    const int bins = cfg.Bins();
    Eigen::VectorXd window(cfg.frame_len);
    for (int n = 0; n < cfg.frame_len; ++n)
      window[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / (cfg.frame_len - 1));
    Eigen::MatrixXd re(bins, cfg.frame_len), im(bins, cfg.frame_len);
    for (int k = 0; k < bins; ++k) {
      for (int n = 0; n < cfg.frame_len; ++n) {
        double ang = 2.0 * M_PI * k * n / cfg.fft_size;
        re(k, n) = std::cos(ang) * window[n];
        im(k, n) = std::sin(ang) * window[n];
      }
    }
    dft_re = re.cast<S>();
    dft_im = im.cast<S>();
    mel = MelFilterbank(cfg).cast<S>();
  }

  /// wave is a [1 x T] node; returns log-mel features [mel_bins x frames].
  ad::Var Apply(ad::Tape<S> *t, ad::Var wave) const {
    ad::ConvGeom g;
    g.kernel = cfg.frame_len;
    g.stride = cfg.hop;
    ad::Var frames = t->Im2Col(wave, g);  // [frame_len x F]
    ad::Var re = t->MatMul(t->Leaf(dft_re), frames);
    ad::Var im = t->MatMul(t->Leaf(dft_im), frames);
    ad::Var power = t->Add(t->Square(re), t->Square(im));
    ad::Var melspec = t->MatMul(t->Leaf(mel), power);
    return t->LogEps(melspec, static_cast<S>(cfg.floor));
  }

  /// Plain (no-tape) spectrogram magnitude for oracle tests: |STFT|,
  /// [bins x frames].
  Mat Magnitude(const Eigen::Matrix<S, Eigen::Dynamic, 1> &x) const {
    const int f = cfg.NumFrames(static_cast<int>(x.size()));
    Mat frames(cfg.frame_len, f);
    for (int j = 0; j < f; ++j)
      frames.col(j) = x.segment(j * cfg.hop, cfg.frame_len);
    Mat re = dft_re * frames;
    Mat im = dft_im * frames;
    return (re.array().square() + im.array().square()).sqrt().matrix();
  }
};

}  // namespace advsig

#endif  // ADVSIG_FRONTEND_HPP
