// advsig/advest.hpp
// Perturbation estimation: a masking time-domain generator that recovers the
// clean waveform from an attacked one (the estimated perturbation is the
// residual), an unconditional waveform discriminator, the multi-resolution
// spectral loss, and the adversarial training loop tying them together.

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

#ifndef ADVSIG_ADVEST_HPP
#define ADVSIG_ADVEST_HPP

#include <string>
#include <vector>

#include "advsig/attacks.hpp"
#include "advsig/autodiff.hpp"
#include "advsig/nn.hpp"
#include "advsig/rng.hpp"
#include "advsig/waveform.hpp"

namespace advsig {

// ---- multi-resolution spectral loss ------------------------------------

struct StftResolution {
  int fft_size = 1024;
  int hop = 256;
};

std::vector<StftResolution> DefaultStftResolutions();

/// Loss components averaged over resolutions, for inspection.
struct StftLossParts {
  double convergence = 0.0;  // ||  |X| - |Xhat|  ||_F / ||  |X|  ||_F
  double log_mag = 0.0;      // mean | log|X| - log|Xhat| |
};

/// Sum of spectral-convergence and log-magnitude distances over several
/// STFT resolutions. Zero exactly when both waveforms are identical.
class MultiResStft {
 public:
  explicit MultiResStft(std::vector<StftResolution> resolutions);

  /// pred and target are [1 x T] nodes on *t; T must cover the largest
  /// window. Returns a scalar node; parts (if given) receive the values of
  /// the two averaged components.
  ad::Var Loss(ad::Tape<float> *t, ad::Var pred, ad::Var target,
               StftLossParts *parts = nullptr) const;

  /// Value-only convenience wrapper.
  double Eval(const Waveform &pred, const Waveform &target, StftLossParts *parts = nullptr) const;

 private:
  struct Basis {
    StftResolution res;
    Eigen::MatrixXf dft_re, dft_im;  // [bins x fft], Hann window folded in
  };
  ad::Var Magnitude(ad::Tape<float> *t, ad::Var wave, const Basis &basis) const;
  std::vector<Basis> bases_;
};

// ---- generator / discriminator -----------------------------------------

struct AdvEstConfig {
  int enc_kernel = 16;
  int enc_stride = 8;
  int enc_channels = 128;  // learned filterbank size
  int bottleneck = 32;
  int hidden = 64;
  int tcn_blocks = 6;  // dilations 1, 2, 4, ...
  int tcn_kernel = 3;
  double mask_bias = 1.0;  // initial mask logit: start close to pass-through
  int d_layers = 10;       // dilations 1..d_layers
  int d_channels = 16;
  int d_kernel = 3;
  bool d_sigmoid = false;  // squash discriminator scores before the loss

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static AdvEstConfig FromJson(const nlohmann::ordered_json &j);
};

/// Masking separator over a learned filterbank: encode, run a dilated
/// temporal convolution stack, apply a sigmoid mask to the encoding, decode.
/// Output length always matches the input length.
class GeneratorNet {
 public:
  explicit GeneratorNet(const AdvEstConfig &cfg);

  void InitParams(Rng *rng);
  const AdvEstConfig &config() const { return cfg_; }
  nn::ParamStore<float> &params() { return params_; }
  const nn::ParamStore<float> &params() const { return params_; }

  /// wave is [1 x T]; returns the cleaned estimate, [1 x T].
  ad::Var Forward(ad::Tape<float> *t, const std::vector<ad::Var> &leaves, ad::Var wave) const;

  /// Value-only forward pass.
  Waveform Run(const Waveform &x) const;

  void Save(const std::string &path) const;
  static GeneratorNet Load(const std::string &path);

 private:
  AdvEstConfig cfg_;
  nn::ParamStore<float> params_;
};

/// Dilated 1-D conv stack ending in a time-averaged scalar score.
class DiscriminatorNet {
 public:
  explicit DiscriminatorNet(const AdvEstConfig &cfg);

  void InitParams(Rng *rng);
  const AdvEstConfig &config() const { return cfg_; }
  nn::ParamStore<float> &params() { return params_; }
  const nn::ParamStore<float> &params() const { return params_; }

  /// wave is [1 x T]; returns a [1 x 1] score node.
  ad::Var Forward(ad::Tape<float> *t, const std::vector<ad::Var> &leaves, ad::Var wave) const;

  void Save(const std::string &path) const;
  static DiscriminatorNet Load(const std::string &path);

 private:
  AdvEstConfig cfg_;
  nn::ParamStore<float> params_;
};

/// Estimated perturbation: the attacked input minus the cleaned estimate.
Waveform EstimatePerturbation(const GeneratorNet &gen, const Waveform &attacked);

// ---- adversarial training ----------------------------------------------

struct AdvEstTrainOpts {
  int cycles = 200;  // each cycle: 2 generator steps, 1 discriminator step
  int batch = 2;     // segments per step
  int segment = 4096;
  double lr_g = 2e-4;
  double lr_d = 1e-4;
  double lr_end = 1e-8;    // both rates decay linearly to this
  double lambda_sup = 1.0; // weight of the spectral supervision term
  std::vector<std::string> exclude_labels;  // attack classes held out of training
  std::string log_path;  // JSONL per-cycle log, empty to skip
};

struct AdvEstTrainStats {
  double final_g_loss = 0.0;
  double final_d_loss = 0.0;
  std::vector<double> sup_history;  // spectral loss per generator step
  int steps_g = 0;
  int steps_d = 0;
};

/// Alternating optimization on (attacked, benign) segment pairs drawn from
/// the database. The generator minimizes the relativistic pairwise loss plus
/// lambda_sup times the spectral loss; the discriminator maximizes the
/// pairwise loss with the generator frozen. Aborts on non-finite losses.
AdvEstTrainStats TrainAdvEst(GeneratorNet *gen, DiscriminatorNet *dsc, const AttackDb &db,
                             const AdvEstTrainOpts &opts, uint64_t seed);

}  // namespace advsig

#endif  // ADVSIG_ADVEST_HPP
