// src/attacks.cpp

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

#include "advsig/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "advsig/wav_io.hpp"

namespace advsig {

namespace fs = std::filesystem;

const char *AttackClassName(AttackClass c) {
  switch (c) {
    case AttackClass::Benign: return "benign";
    case AttackClass::Fgsm: return "fgsm";
    case AttackClass::IterFgsm: return "iter_fgsm";
    case AttackClass::PgdL1: return "pgd_l1";
    case AttackClass::PgdL2: return "pgd_l2";
    case AttackClass::PgdLinf: return "pgd_linf";
    case AttackClass::CwL0: return "cw_l0";
    case AttackClass::CwL2: return "cw_l2";
    case AttackClass::CwLinf: return "cw_linf";
  }
  Fail("AttackClassName: bad enum");
}

AttackClass AttackClassFromName(const std::string &name) {
  for (AttackClass c : AllAttackClasses())
    if (name == AttackClassName(c)) return c;
  Fail("unknown attack class '", name, "'");
}

std::vector<AttackClass> AllAttackClasses() {
  return {AttackClass::Benign, AttackClass::Fgsm,   AttackClass::IterFgsm,
          AttackClass::PgdL1,  AttackClass::PgdL2,  AttackClass::PgdLinf,
          AttackClass::CwL0,   AttackClass::CwL2,   AttackClass::CwLinf};
}

std::optional<Norm> AttackClassNorm(AttackClass c) {
  switch (c) {
    case AttackClass::Benign: return std::nullopt;
    case AttackClass::Fgsm:
    case AttackClass::IterFgsm:
    case AttackClass::PgdLinf:
    case AttackClass::CwLinf: return Norm::LInf;
    case AttackClass::PgdL1: return Norm::L1;
    case AttackClass::PgdL2:
    case AttackClass::CwL2: return Norm::L2;
    case AttackClass::CwL0: return Norm::L0;
  }
  Fail("AttackClassNorm: bad enum");
}

namespace {

int ArgmaxLowest(const Eigen::VectorXf &z) {
  int best = 0;
  for (int i = 1; i < z.size(); ++i)
    if (z[i] > z[best]) best = i;
  return best;
}

/// Margin of the inference scores, f = z_y - max_{j != y} z_j; the attack
/// has succeeded once f < 0 (equivalently, once the argmax leaves y).
struct MarginEval {
  double f = 0.0;
  int y_pred = -1;
  Eigen::VectorXf grad;  // df/dx, only when requested
};

MarginEval MarginAndGrad(const Classifier &model, const Eigen::VectorXf &x, int y,
                         bool want_grad) {
  ad::Tape<float> tape;
  Eigen::MatrixXf wv(1, x.size());
  wv.row(0) = x.transpose();
  ad::Var wave = tape.Leaf(wv, want_grad);
  auto leaves = nn::MakeLeaves(&tape, model.net().params(), false);
  XvecOutputs out = model.net().Forward(&tape, leaves, wave, -1);
  Eigen::VectorXf z = tape.Value(out.logits).col(0);

  MarginEval ev;
  ev.y_pred = ArgmaxLowest(z);
  int runner = -1;
  for (int j = 0; j < z.size(); ++j) {
    if (j == y) continue;
    if (runner < 0 || z[j] > z[runner]) runner = j;
  }
  ev.f = static_cast<double>(z[y]) - static_cast<double>(z[runner]);
  if (want_grad) {
    Eigen::MatrixXf sel = Eigen::MatrixXf::Zero(1, z.size());
    sel(0, y) = 1.0f;
    sel(0, runner) = -1.0f;
    ad::Var scalar = tape.MatMul(tape.Leaf(sel, false), out.logits);
    tape.Backward(scalar);
    ev.grad = tape.Grad(wave).row(0).transpose();
  }
  return ev;
}

Waveform MakeWave(const Eigen::VectorXf &samples, int sample_rate) {
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples = samples;
  return w;
}

Eigen::VectorXf ClipBox(const Eigen::VectorXf &v, double lo, double hi) {
  return v.cwiseMax(static_cast<float>(lo)).cwiseMin(static_cast<float>(hi));
}

void CheckAttackInput(const Classifier &model, const Waveform &x, int y) {
  ValidateWaveform(x, "attack input");
  Require(y >= 0 && y < model.config().num_classes, "attack: label ", y, " out of range [0, ",
          model.config().num_classes, ")");
  Require(model.config().num_classes >= 2, "attack: need at least 2 classes");
}

}  // namespace

// ---- FGSM --------------------------------------------------------------

Eigen::VectorXf FgsmStep(const Eigen::VectorXf &x, const Eigen::VectorXf &grad, double epsilon,
                         double clip_lo, double clip_hi) {
  Require(x.size() == grad.size(), "fgsm: gradient length mismatch");
  Require(epsilon >= 0, "fgsm: negative epsilon");
  Eigen::VectorXf adv = x;
  const float e = static_cast<float>(epsilon);
  for (Eigen::Index i = 0; i < adv.size(); ++i) {
    if (grad[i] > 0)
      adv[i] += e;
    else if (grad[i] < 0)
      adv[i] -= e;
  }
  return ClipBox(adv, clip_lo, clip_hi);
}

AttackResult RunFgsm(const Classifier &model, const Waveform &x, int y, const FgsmOpts &opts) {
  CheckAttackInput(model, x, y);
  auto [loss, grad] = model.LossAndInputGradient(x, y);
  (void)loss;
  AttackResult res;
  res.adv = MakeWave(FgsmStep(x.samples, grad, opts.epsilon, opts.clip_lo, opts.clip_hi),
                     x.sample_rate);
  res.y_pred = model.Predict(res.adv).label;
  res.success = res.y_pred != y;
  return res;
}

// ---- PGD ---------------------------------------------------------------

namespace {

/// Ascent direction for one PGD step, already scaled so its p-norm is ~1.
Eigen::VectorXf PgdDirection(const Eigen::VectorXf &g, Norm p, double coord_fraction) {
  const Eigen::Index n = g.size();
  Eigen::VectorXf dir = Eigen::VectorXf::Zero(n);
  switch (p) {
    case Norm::LInf: {
      for (Eigen::Index i = 0; i < n; ++i) dir[i] = g[i] > 0 ? 1.0f : (g[i] < 0 ? -1.0f : 0.0f);
      return dir;
    }
    case Norm::L2: {
      double nrm = LpNorm<float>(g, Norm::L2);
      if (nrm <= 0) return dir;
      return g / static_cast<float>(nrm);
    }
    case Norm::L1: {
      // sparse step: all mass on the top-|g| coordinates
      int k = std::max<int>(1, static_cast<int>(std::lround(coord_fraction * n)));
      k = std::min<int>(k, static_cast<int>(n));
      std::vector<Eigen::Index> idx(static_cast<size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                        [&](Eigen::Index a, Eigen::Index b) {
                          float ma = std::abs(g[a]), mb = std::abs(g[b]);
                          if (ma != mb) return ma > mb;
                          return a < b;
                        });
      const float share = 1.0f / static_cast<float>(k);
      for (int j = 0; j < k; ++j) {
        Eigen::Index i = idx[static_cast<size_t>(j)];
        dir[i] = g[i] > 0 ? share : (g[i] < 0 ? -share : 0.0f);
      }
      return dir;
    }
    case Norm::L0: Fail("pgd: no L0 variant; use cw_l0");
  }
  Fail("pgd: bad norm enum");
}

Eigen::VectorXf RandomInBall(Eigen::Index n, Norm p, double eps, Rng *rng) {
  Eigen::VectorXf d(n);
  switch (p) {
    case Norm::LInf: {
      for (Eigen::Index i = 0; i < n; ++i)
        d[i] = static_cast<float>(eps * (2.0 * rng->Uniform() - 1.0));
      return d;
    }
    case Norm::L2: {
      for (Eigen::Index i = 0; i < n; ++i) d[i] = static_cast<float>(rng->Normal());
      double nrm = LpNorm<float>(d, Norm::L2);
      if (nrm <= 0) return Eigen::VectorXf::Zero(n);
      double r = eps * std::pow(rng->Uniform(), 1.0 / static_cast<double>(n));
      return d * static_cast<float>(r / nrm);
    }
    case Norm::L1: {
      for (Eigen::Index i = 0; i < n; ++i) d[i] = static_cast<float>(rng->Normal());
      ProjectL1Ball<float>(&d, eps * rng->Uniform());
      return d;
    }
    case Norm::L0: Fail("pgd: no L0 variant");
  }
  Fail("pgd: bad norm enum");
}

}  // namespace

AttackResult RunPgd(const Classifier &model, const Waveform &x, int y, const PgdOpts &opts,
                    Rng *rng, AttackTrace *trace) {
  CheckAttackInput(model, x, y);
  Require(opts.epsilon >= 0, "pgd: negative epsilon");
  Require(opts.steps >= 1, "pgd: need at least one step");
  Require(opts.p != Norm::L0, "pgd: no L0 variant; use cw_l0");
  const double alpha = opts.alpha > 0 ? opts.alpha : 2.5 * opts.epsilon / opts.steps;

  Eigen::VectorXf delta;
  if (opts.random_init) {
    Require(rng != nullptr, "pgd: random_init needs an rng");
    delta = RandomInBall(x.size(), opts.p, opts.epsilon, rng);
    ProjectLpBall<float>(&delta, opts.p, opts.epsilon);
  } else {
    delta = Eigen::VectorXf::Zero(x.size());
  }

  for (int step = 0; step < opts.steps; ++step) {
    Waveform cur = MakeWave(x.samples + delta, x.sample_rate);
    auto [loss, grad] = model.LossAndInputGradient(cur, y);
    (void)loss;
    Eigen::VectorXf dir = PgdDirection(grad, opts.p, opts.l1_coord_fraction);
    delta += static_cast<float>(alpha) * dir;
    ProjectLpBall<float>(&delta, opts.p, opts.epsilon);
    if (trace) trace->iterate_norms.push_back(LpNorm<float>(delta, opts.p));
  }

  Eigen::VectorXf adv = ClipBox(x.samples + delta, opts.clip_lo, opts.clip_hi);
  AttackResult res;
  res.adv = MakeWave(adv, x.sample_rate);
  res.y_pred = model.Predict(res.adv).label;
  res.success = res.y_pred != y;
  return res;
}

AttackResult RunIterFgsm(const Classifier &model, const Waveform &x, int y, double epsilon,
                         int steps, double alpha, AttackTrace *trace) {
  PgdOpts opts;
  opts.p = Norm::LInf;
  opts.epsilon = epsilon;
  opts.steps = steps;
  opts.alpha = alpha;
  opts.random_init = false;
  return RunPgd(model, x, y, opts, nullptr, trace);
}

// ---- Carlini-Wagner ----------------------------------------------------

namespace {

/// Plain elementwise Adam for the inner CW optimizers.
class VecAdam {
 public:
  VecAdam(Eigen::Index n, double lr) : lr_(lr), m_(Eigen::VectorXf::Zero(n)),
                                       v_(Eigen::VectorXf::Zero(n)) {}

  void Step(Eigen::VectorXf *w, const Eigen::VectorXf &g) {
    ++t_;
    m_ = 0.9f * m_ + 0.1f * g;
    v_ = 0.999f * v_ + 0.001f * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(0.9, t_);
    const double bc2 = 1.0 - std::pow(0.999, t_);
    for (Eigen::Index i = 0; i < w->size(); ++i) {
      double mh = m_[i] / bc1;
      double vh = v_[i] / bc2;
      (*w)[i] -= static_cast<float>(lr_ * mh / (std::sqrt(vh) + 1e-8));
    }
  }

 private:
  double lr_;
  int t_ = 0;
  Eigen::VectorXf m_, v_;
};

float Atanh(float z) {
  const float lim = 1.0f - 1e-6f;
  z = std::max(-lim, std::min(lim, z));
  return 0.5f * std::log((1.0f + z) / (1.0f - z));
}

}  // namespace

AttackResult RunCwL2(const Classifier &model, const Waveform &x, int y, const CwOpts &opts,
                     AttackTrace *trace) {
  CheckAttackInput(model, x, y);
  Require(opts.bsearch_steps >= 1 && opts.iters >= 1, "cw_l2: bad search budget");
  const Eigen::Index n = x.size();
  const float mid = static_cast<float>(0.5 * (opts.clip_lo + opts.clip_hi));
  const float half = static_cast<float>(0.5 * (opts.clip_hi - opts.clip_lo));

  Eigen::VectorXf w0(n);
  for (Eigen::Index i = 0; i < n; ++i) w0[i] = Atanh((x.samples[i] - mid) / half);

  double c = opts.c_init, c_lo = 0.0, c_hi = 0.0;
  bool have_hi = false;
  double best_norm = 0.0;
  Eigen::VectorXf best_adv;
  bool found = false;

  for (int bs = 0; bs < opts.bsearch_steps; ++bs) {
    Eigen::VectorXf w = w0;
    VecAdam adam(n, opts.lr);
    bool step_success = false;
    for (int it = 0; it < opts.iters; ++it) {
      Eigen::VectorXf tw = w.array().tanh().matrix();
      Eigen::VectorXf adv = (mid + (half * tw.array())).matrix();
      Eigen::VectorXf delta = adv - x.samples;
      MarginEval ev = MarginAndGrad(model, adv, y, true);
      if (ev.y_pred != y) {
        step_success = true;
        double nrm = LpNorm<float>(delta, Norm::L2);
        if (trace) trace->candidate_norms.push_back(nrm);
        if (!found || nrm < best_norm) {
          found = true;
          best_norm = nrm;
          best_adv = adv;
        }
      }
      // d/dadv of ||delta||^2 + c * max(f + kappa, 0), chained through tanh
      Eigen::VectorXf gadv = 2.0f * delta;
      if (ev.f + opts.kappa > 0) gadv += static_cast<float>(c) * ev.grad;
      Eigen::VectorXf gw =
          gadv.cwiseProduct((half * (1.0f - tw.array().square())).matrix());
      adam.Step(&w, gw);
    }
    if (step_success) {
      c_hi = c;
      have_hi = true;
      c = 0.5 * (c_lo + c_hi);
    } else {
      c_lo = c;
      c = have_hi ? 0.5 * (c_lo + c_hi) : c * 10.0;
    }
  }

  AttackResult res;
  if (found) {
    res.adv = MakeWave(best_adv, x.sample_rate);
    res.success = true;
  } else {
    res.adv = x;
    res.success = false;
  }
  res.y_pred = model.Predict(res.adv).label;
  if (found) Require(res.y_pred != y, "cw_l2: best candidate no longer adversarial");
  return res;
}

AttackResult RunCwL0(const Classifier &model, const Waveform &x, int y, const CwOpts &opts,
                     AttackTrace *trace) {
  CheckAttackInput(model, x, y);
  const Eigen::Index n = x.size();
  const float mid = static_cast<float>(0.5 * (opts.clip_lo + opts.clip_hi));
  const float half = static_cast<float>(0.5 * (opts.clip_hi - opts.clip_lo));

  Eigen::VectorXf w0(n);
  for (Eigen::Index i = 0; i < n; ++i) w0[i] = Atanh((x.samples[i] - mid) / half);

  std::vector<bool> active(static_cast<size_t>(n), true);
  Eigen::Index active_count = n;

  Eigen::VectorXf best_adv;
  int best_support = 0;
  bool found = false;

  for (int round = 0; round < opts.l0_max_rounds; ++round) {
    Eigen::VectorXf w = w0;
    VecAdam adam(n, opts.lr);
    bool round_success = false;
    Eigen::VectorXf round_adv, round_grad;
    for (int it = 0; it < opts.iters; ++it) {
      Eigen::VectorXf tw = w.array().tanh().matrix();
      Eigen::VectorXf adv = (mid + (half * tw.array())).matrix();
      for (Eigen::Index i = 0; i < n; ++i)
        if (!active[static_cast<size_t>(i)]) adv[i] = x.samples[i];  // frozen coords stay clean
      Eigen::VectorXf delta = adv - x.samples;
      MarginEval ev = MarginAndGrad(model, adv, y, true);
      if (ev.y_pred != y) {
        round_success = true;
        round_adv = adv;
        round_grad = ev.grad;
      }
      Eigen::VectorXf gadv = 2.0f * delta;
      if (ev.f + opts.kappa > 0) gadv += static_cast<float>(opts.c_init) * ev.grad;
      Eigen::VectorXf gw =
          gadv.cwiseProduct((half * (1.0f - tw.array().square())).matrix());
      for (Eigen::Index i = 0; i < n; ++i)
        if (!active[static_cast<size_t>(i)]) gw[i] = 0.0f;
      adam.Step(&w, gw);
    }

    if (!round_success) break;
    int support = static_cast<int>(LpNorm<float>(round_adv - x.samples, Norm::L0));
    if (!found || support <= best_support) {
      best_adv = round_adv;
      best_support = support;
    }
    found = true;
    if (trace) trace->support_sizes.push_back(best_support);
    if (opts.l0_target_support > 0 && best_support <= opts.l0_target_support) break;

    // freeze the least useful active coordinates: smallest |delta_i * g_i|
    Eigen::VectorXf delta = round_adv - x.samples;
    std::vector<Eigen::Index> act;
    act.reserve(static_cast<size_t>(active_count));
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[static_cast<size_t>(i)]) act.push_back(i);
    Eigen::Index freeze =
        std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(
                                      opts.l0_freeze_fraction * static_cast<double>(act.size()))));
    if (freeze >= static_cast<Eigen::Index>(act.size())) break;  // nothing left to shrink
    std::partial_sort(act.begin(), act.begin() + freeze, act.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        double sa = std::abs(static_cast<double>(delta[a]) * round_grad[a]);
                        double sb = std::abs(static_cast<double>(delta[b]) * round_grad[b]);
                        if (sa != sb) return sa < sb;
                        return a < b;
                      });
    for (Eigen::Index j = 0; j < freeze; ++j) active[static_cast<size_t>(act[j])] = false;
    active_count -= freeze;
  }

  AttackResult res;
  if (found) {
    res.adv = MakeWave(best_adv, x.sample_rate);
    res.success = true;
  } else {
    res.adv = x;
    res.success = false;
  }
  res.y_pred = model.Predict(res.adv).label;
  if (found) Require(res.y_pred != y, "cw_l0: best candidate no longer adversarial");
  return res;
}

AttackResult RunCwLinf(const Classifier &model, const Waveform &x, int y, const CwOpts &opts,
                       AttackTrace *trace) {
  CheckAttackInput(model, x, y);
  const Eigen::Index n = x.size();
  const float flo = static_cast<float>(opts.clip_lo), fhi = static_cast<float>(opts.clip_hi);

  Eigen::VectorXf delta = Eigen::VectorXf::Zero(n);
  double tau = 1.0;
  Eigen::VectorXf best_adv;
  double tau_accept = 0.0;
  bool found = false;

  const int max_rounds = 60;
  for (int round = 0; round < max_rounds; ++round) {
    // adam moves each coordinate by ~lr per step, so the step size must
    // shrink along with the threshold
    VecAdam adam(n, std::min(opts.lr, tau / 4.0));
    bool round_success = false;
    Eigen::VectorXf round_adv;
    for (int it = 0; it < opts.iters; ++it) {
      Eigen::VectorXf adv = x.samples + delta;
      for (Eigen::Index i = 0; i < n; ++i) adv[i] = std::max(flo, std::min(fhi, adv[i]));
      delta = adv - x.samples;  // keep the box projection inside delta
      MarginEval ev = MarginAndGrad(model, adv, y, true);
      double linf = LpNorm<float>(delta, Norm::LInf);
      if (ev.y_pred != y && linf <= tau + 1e-6) {
        round_success = true;
        round_adv = adv;
      }
      // c * max(f + kappa, 0) + sum_i max(|delta_i| - tau, 0)
      Eigen::VectorXf g = Eigen::VectorXf::Zero(n);
      if (ev.f + opts.kappa > 0) g += static_cast<float>(opts.c_init) * ev.grad;
      const float ft = static_cast<float>(tau);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (delta[i] > ft)
          g[i] += 1.0f;
        else if (delta[i] < -ft)
          g[i] -= 1.0f;
      }
      adam.Step(&delta, g);
    }
    if (!round_success) break;
    best_adv = round_adv;
    tau_accept = tau;
    found = true;
    if (trace) trace->candidate_norms.push_back(LpNorm<float>(round_adv - x.samples, Norm::LInf));
    if (tau <= opts.tau_floor) break;
    double linf = LpNorm<float>(best_adv - x.samples, Norm::LInf);
    tau = std::max(opts.tau_floor, std::min(tau, linf) * opts.tau_decay);
    delta = best_adv - x.samples;  // warm start from the accepted solution
  }
  if (trace) trace->tau_final = tau_accept;

  AttackResult res;
  if (found) {
    res.adv = MakeWave(best_adv, x.sample_rate);
    res.success = true;
  } else {
    res.adv = x;
    res.success = false;
  }
  res.y_pred = model.Predict(res.adv).label;
  if (found) Require(res.y_pred != y, "cw_linf: best candidate no longer adversarial");
  return res;
}

// ---- hyperparameter sampling ------------------------------------------

Json AttackRanges::ToJson() const {
  Json j;
  j["linf_eps_lo"] = linf_eps_lo;
  j["linf_eps_hi"] = linf_eps_hi;
  j["snr_lo_db"] = snr_lo_db;
  j["snr_hi_db"] = snr_hi_db;
  j["steps_lo"] = steps_lo;
  j["steps_hi"] = steps_hi;
  j["cw_iters"] = cw_iters;
  j["cw_bsearch"] = cw_bsearch;
  j["cw_lr"] = cw_lr;
  j["l0_frac_lo"] = l0_frac_lo;
  j["l0_frac_hi"] = l0_frac_hi;
  return j;
}

AttackRanges AttackRanges::FromJson(const Json &j) {
  AttackRanges r;
  r.linf_eps_lo = j.at("linf_eps_lo").get<double>();
  r.linf_eps_hi = j.at("linf_eps_hi").get<double>();
  r.snr_lo_db = j.at("snr_lo_db").get<double>();
  r.snr_hi_db = j.at("snr_hi_db").get<double>();
  r.steps_lo = j.at("steps_lo").get<int>();
  r.steps_hi = j.at("steps_hi").get<int>();
  r.cw_iters = j.at("cw_iters").get<int>();
  r.cw_bsearch = j.at("cw_bsearch").get<int>();
  r.cw_lr = j.at("cw_lr").get<double>();
  r.l0_frac_lo = j.at("l0_frac_lo").get<double>();
  r.l0_frac_hi = j.at("l0_frac_hi").get<double>();
  return r;
}

SampledAttack SampleAttackParams(AttackClass cls, const AttackRanges &ranges, uint64_t seed,
                                 const Waveform &x) {
  ValidateWaveform(x, "sample params");
  Require(ranges.linf_eps_lo > 0 && ranges.linf_eps_hi >= ranges.linf_eps_lo,
          "sample params: bad linf epsilon range");
  Require(ranges.steps_lo >= 1 && ranges.steps_hi >= ranges.steps_lo,
          "sample params: bad steps range");
  Rng rng(seed);
  auto log_uniform = [&rng](double lo, double hi) {
    return std::exp(std::log(lo) + rng.Uniform() * (std::log(hi) - std::log(lo)));
  };
  SampledAttack s;
  s.cls = cls;
  Json &h = s.hyperparams;
  h["class"] = AttackClassName(cls);
  switch (cls) {
    case AttackClass::Benign:
      s.epsilon = 0.0;
      break;
    case AttackClass::Fgsm:
      s.epsilon = log_uniform(ranges.linf_eps_lo, ranges.linf_eps_hi);
      break;
    case AttackClass::IterFgsm:
    case AttackClass::PgdLinf: {
      s.epsilon = log_uniform(ranges.linf_eps_lo, ranges.linf_eps_hi);
      int steps = static_cast<int>(rng.UniformInt(ranges.steps_lo, ranges.steps_hi));
      h["steps"] = steps;
      h["alpha"] = 2.5 * s.epsilon / steps;
      h["random_init"] = cls == AttackClass::PgdLinf;
      break;
    }
    case AttackClass::PgdL2: {
      double snr = ranges.snr_lo_db + rng.Uniform() * (ranges.snr_hi_db - ranges.snr_lo_db);
      s.epsilon = LpNorm(x, Norm::L2) * std::pow(10.0, -snr / 20.0);
      int steps = static_cast<int>(rng.UniformInt(ranges.steps_lo, ranges.steps_hi));
      h["target_snr_db"] = snr;
      h["steps"] = steps;
      h["alpha"] = 2.5 * s.epsilon / steps;
      h["random_init"] = true;
      break;
    }
    case AttackClass::PgdL1: {
      double per_coord = log_uniform(ranges.linf_eps_lo, ranges.linf_eps_hi);
      s.epsilon = per_coord * std::sqrt(static_cast<double>(x.size()));
      int steps = static_cast<int>(rng.UniformInt(ranges.steps_lo, ranges.steps_hi));
      h["per_coord_scale"] = per_coord;
      h["steps"] = steps;
      h["alpha"] = 2.5 * s.epsilon / steps;
      h["random_init"] = true;
      break;
    }
    case AttackClass::CwL2:
      s.epsilon = 0.0;  // achieved norm, filled after the run
      h["iters"] = ranges.cw_iters;
      h["bsearch_steps"] = ranges.cw_bsearch;
      h["lr"] = ranges.cw_lr;
      break;
    case AttackClass::CwL0: {
      double frac = ranges.l0_frac_lo + rng.Uniform() * (ranges.l0_frac_hi - ranges.l0_frac_lo);
      s.epsilon = 0.0;
      h["target_support"] =
          std::max(1.0, std::floor(frac * static_cast<double>(x.size())));
      h["iters"] = ranges.cw_iters;
      h["lr"] = ranges.cw_lr;
      break;
    }
    case AttackClass::CwLinf:
      s.epsilon = 0.0;
      h["tau_floor"] = log_uniform(ranges.linf_eps_lo, ranges.linf_eps_hi);
      h["iters"] = ranges.cw_iters;
      h["lr"] = ranges.cw_lr;
      break;
  }
  return s;
}

// ---- attack database ---------------------------------------------------

Json AttackRecord::ToJson() const {
  Json j;
  j["record_id"] = record_id;
  j["benign_path"] = benign_path;
  j["adv_path"] = adv_path;
  j["label"] = label;
  j["p"] = p;
  j["epsilon"] = epsilon;
  j["hyperparams"] = hyperparams;
  j["success"] = success;
  j["y"] = y;
  j["y_pred"] = y_pred;
  if (snr_db)
    j["snr_db"] = *snr_db;
  else
    j["snr_db"] = nullptr;
  return j;
}

AttackRecord AttackRecord::FromJson(const Json &j) {
  AttackRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.benign_path = j.at("benign_path").get<std::string>();
  r.adv_path = j.at("adv_path").get<std::string>();
  r.label = j.at("label").get<std::string>();
  r.p = j.at("p").get<std::string>();
  r.epsilon = j.at("epsilon").get<double>();
  r.hyperparams = j.at("hyperparams");
  r.success = j.at("success").get<bool>();
  r.y = j.at("y").get<int>();
  r.y_pred = j.at("y_pred").get<int>();
  if (!j.at("snr_db").is_null()) r.snr_db = j.at("snr_db").get<double>();
  return r;
}

namespace {

std::string SanitizeUttId(const std::string &id) {
  std::string out;
  for (char c : id) {
    if (c == '/') {
      out.push_back('-');
    } else {
      out.push_back(c);
    }
  }
  const std::string suffix = ".wav";
  if (out.size() > suffix.size() && out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0)
    out.resize(out.size() - suffix.size());
  return out;
}

AttackResult DispatchAttack(const Classifier &model, const Waveform &x, int y,
                            const SampledAttack &s, uint64_t attack_seed) {
  const Json &h = s.hyperparams;
  switch (s.cls) {
    case AttackClass::Benign: {
      AttackResult res;
      res.adv = x;
      res.y_pred = model.Predict(x).label;
      res.success = true;  // benign rows are always retained
      return res;
    }
    case AttackClass::Fgsm: {
      FgsmOpts o;
      o.epsilon = s.epsilon;
      return RunFgsm(model, x, y, o);
    }
    case AttackClass::IterFgsm:
      return RunIterFgsm(model, x, y, s.epsilon, h.at("steps").get<int>(),
                         h.at("alpha").get<double>());
    case AttackClass::PgdL1:
    case AttackClass::PgdL2:
    case AttackClass::PgdLinf: {
      PgdOpts o;
      o.p = *AttackClassNorm(s.cls);
      o.epsilon = s.epsilon;
      o.steps = h.at("steps").get<int>();
      o.alpha = h.at("alpha").get<double>();
      o.random_init = h.at("random_init").get<bool>();
      Rng rng(attack_seed);
      return RunPgd(model, x, y, o, &rng);
    }
    case AttackClass::CwL2: {
      CwOpts o;
      o.iters = h.at("iters").get<int>();
      o.bsearch_steps = h.at("bsearch_steps").get<int>();
      o.lr = h.at("lr").get<double>();
      return RunCwL2(model, x, y, o);
    }
    case AttackClass::CwL0: {
      CwOpts o;
      o.iters = h.at("iters").get<int>();
      o.lr = h.at("lr").get<double>();
      o.l0_target_support = h.at("target_support").get<double>();
      return RunCwL0(model, x, y, o);
    }
    case AttackClass::CwLinf: {
      CwOpts o;
      o.iters = h.at("iters").get<int>();
      o.lr = h.at("lr").get<double>();
      o.tau_floor = h.at("tau_floor").get<double>();
      return RunCwLinf(model, x, y, o);
    }
  }
  Fail("DispatchAttack: bad enum");
}

bool IsCwClass(AttackClass c) {
  return c == AttackClass::CwL0 || c == AttackClass::CwL2 || c == AttackClass::CwLinf;
}

}  // namespace

AttackDb GenerateAttackDb(const Classifier &model, const std::vector<LabeledWave> &corpus,
                          const AttackDbSpec &spec, const std::string &out_dir) {
  Require(!spec.classes.empty(), "attack db: no classes configured");
  Require(!corpus.empty(), "attack db: empty corpus");
  Require(spec.fraction > 0 && spec.fraction <= 1.0, "attack db: fraction must be in (0, 1]");
  {
    std::set<AttackClass> uniq(spec.classes.begin(), spec.classes.end());
    Require(uniq.size() == spec.classes.size(), "attack db: duplicate class");
  }

  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "benign");

  AttackDb db;
  db.dir = out_dir;
  std::set<std::string> benign_written;

  const int take = std::max<int>(
      1, static_cast<int>(std::lround(spec.fraction * static_cast<double>(corpus.size()))));

  for (AttackClass cls : spec.classes) {
    const std::string cname = AttackClassName(cls);
    if (cls != AttackClass::Benign) fs::create_directories(fs::path(out_dir) / cname);

    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng pick_rng(DeriveSeed(spec.seed, "pick-" + cname));
    pick_rng.Shuffle(&order);

    for (int t = 0; t < take; ++t) {
      const LabeledWave &utt = corpus[order[static_cast<size_t>(t)]];
      const std::string utt_tag = SanitizeUttId(utt.id);
      const uint64_t rec_seed = DeriveSeed(spec.seed, cname + "/" + utt_tag);

      SampledAttack sampled = SampleAttackParams(cls, spec.ranges, rec_seed, utt.wave);
      AttackResult res =
          DispatchAttack(model, utt.wave, utt.label, sampled, DeriveSeed(rec_seed, "attack"));
      if (!res.success) continue;

      Waveform delta;
      delta.sample_rate = utt.wave.sample_rate;
      delta.samples = res.adv.samples - utt.wave.samples;

      AttackRecord rec;
      rec.record_id = cname + "/" + utt_tag;
      rec.label = cname;
      rec.y = utt.label;
      rec.y_pred = res.y_pred;
      rec.success = res.success;
      rec.hyperparams = sampled.hyperparams;
      rec.hyperparams["seed"] = rec_seed;

      std::optional<Norm> p = AttackClassNorm(cls);
      if (p) {
        rec.p = NormName(*p);
        double achieved = LpNorm(delta, *p);
        if (IsCwClass(cls)) {
          rec.epsilon = achieved;
        } else {
          // the stored delta is float32(x + delta) - x, so it can sit a few
          // ulps outside the nominal ball; the recorded budget covers that
          // rounding while a real projection bug still faults here
          const double n = static_cast<double>(delta.size());
          double envelope = 1e-7;
          if (*p == Norm::L2) envelope = 1e-7 * std::sqrt(n);
          if (*p == Norm::L1) envelope = 1e-7 * n;
          Require(achieved <= sampled.epsilon * (1.0 + 1e-6) + envelope, "attack db: ",
                  rec.record_id, " violates its budget: ||delta||_", rec.p, " = ", achieved,
                  " > ", sampled.epsilon);
          rec.hyperparams["epsilon_nominal"] = sampled.epsilon;
          rec.epsilon = std::max(sampled.epsilon, achieved);
        }
      } else {
        rec.p = "";
        rec.epsilon = 0.0;
      }
      if (LpNorm(delta, Norm::L2) > 0) rec.snr_db = SnrDb(utt.wave, delta);

      rec.benign_path = "benign/" + utt_tag + ".wav";
      if (benign_written.insert(utt_tag).second)
        WriteWav((fs::path(out_dir) / rec.benign_path).string(), utt.wave, WavEncoding::Float32);
      if (cls == AttackClass::Benign) {
        rec.adv_path = rec.benign_path;
      } else {
        rec.adv_path = cname + "/" + utt_tag + ".wav";
        WriteWav((fs::path(out_dir) / rec.adv_path).string(), res.adv, WavEncoding::Float32);
      }
      db.records.push_back(std::move(rec));
    }
  }

  std::sort(db.records.begin(), db.records.end(),
            [](const AttackRecord &a, const AttackRecord &b) { return a.record_id < b.record_id; });

  std::vector<Json> rows;
  rows.reserve(db.records.size());
  for (const auto &r : db.records) rows.push_back(r.ToJson());
  WriteJsonl((fs::path(out_dir) / "index.jsonl").string(), rows);

  Json meta;
  meta["classes"] = Json::array();
  for (AttackClass c : spec.classes) meta["classes"].push_back(AttackClassName(c));
  meta["ranges"] = spec.ranges.ToJson();
  meta["fraction"] = spec.fraction;
  meta["seed"] = spec.seed;
  meta["num_records"] = db.records.size();
  WriteJsonFile((fs::path(out_dir) / "db.json").string(), meta);
  return db;
}

AttackDb LoadAttackDb(const std::string &dir) {
  AttackDb db;
  db.dir = dir;
  std::string index = (fs::path(dir) / "index.jsonl").string();
  for (const Json &row : ReadJsonl(index)) db.records.push_back(AttackRecord::FromJson(row));
  Require(std::is_sorted(db.records.begin(), db.records.end(),
                         [](const AttackRecord &a, const AttackRecord &b) {
                           return a.record_id < b.record_id;
                         }),
          "attack db '", dir, "': index is not sorted by record_id");
  return db;
}

Waveform LoadRecordBenign(const AttackDb &db, const AttackRecord &rec) {
  return ReadWav((fs::path(db.dir) / rec.benign_path).string());
}

Waveform LoadRecordAdv(const AttackDb &db, const AttackRecord &rec) {
  return ReadWav((fs::path(db.dir) / rec.adv_path).string());
}

Waveform LoadRecordDelta(const AttackDb &db, const AttackRecord &rec) {
  Waveform benign = LoadRecordBenign(db, rec);
  Waveform adv = LoadRecordAdv(db, rec);
  Require(benign.size() == adv.size(), "attack db: length mismatch in record ", rec.record_id);
  Waveform delta;
  delta.sample_rate = benign.sample_rate;
  delta.samples = adv.samples - benign.samples;
  return delta;
}

int ValidateAttackDb(const AttackDb &db, const Classifier *model) {
  for (const AttackRecord &rec : db.records) {
    Require(rec.success, "attack db: stored record ", rec.record_id, " is marked unsuccessful");
    Waveform delta = LoadRecordDelta(db, rec);
    if (rec.label == "benign") {
      Require(LpNorm(delta, Norm::LInf) == 0.0, "attack db: benign record ", rec.record_id,
              " has a nonzero perturbation");
      continue;
    }
    Norm p = NormFromName(rec.p);
    double nrm = LpNorm(delta, p);
    Require(nrm <= rec.epsilon * (1.0 + 1e-6), "attack db: ", rec.record_id,
            " violates its budget: ||delta||_", rec.p, " = ", nrm, " > ", rec.epsilon);
    Require(rec.snr_db.has_value(), "attack db: ", rec.record_id, " is missing its snr");
    if (model) {
      Waveform adv = LoadRecordAdv(db, rec);
      int pred = model->Predict(adv).label;
      Require(pred == rec.y_pred, "attack db: ", rec.record_id, " stored y_pred ", rec.y_pred,
              " but model now predicts ", pred);
      Require(pred != rec.y, "attack db: ", rec.record_id, " no longer flips the prediction");
    }
  }
  return static_cast<int>(db.records.size());
}

}  // namespace advsig
