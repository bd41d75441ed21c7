// advsig/lp.hpp
// Lp norms, Euclidean projections onto Lp balls, and the signal-to-
// adversarial-noise ratio. The vector kernels are free functions templated
// on the Eigen scalar; the float32 Waveform overloads sit on top.

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

#ifndef ADVSIG_LP_HPP
#define ADVSIG_LP_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "advsig/waveform.hpp"

namespace advsig {

/// Lp norm with 64-bit accumulation. For p = 0 returns the count of samples
/// whose magnitude strictly exceeds zero_tol (default 0: exact nonzeros).
template <typename Scalar>
double LpNorm(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> &v, Norm p,
              double zero_tol = 0.0) {
  switch (p) {
    case Norm::L0: {
      double count = 0;
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(static_cast<double>(v[i])) > zero_tol) count += 1;
      return count;
    }
    case Norm::L1: {
      double s = 0;
      for (Eigen::Index i = 0; i < v.size(); ++i) s += std::abs(static_cast<double>(v[i]));
      return s;
    }
    case Norm::L2: {
      double s = 0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        double d = static_cast<double>(v[i]);
        s += d * d;
      }
      return std::sqrt(s);
    }
    case Norm::LInf: {
      double m = 0;
      for (Eigen::Index i = 0; i < v.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(v[i])));
      return m;
    }
  }
  Fail("LpNorm: bad norm enum");
}

inline double LpNorm(const Waveform &w, Norm p, double zero_tol = 0.0) {
  ValidateWaveform(w);
  return LpNorm<float>(w.samples, p, zero_tol);
}

/// In-place Euclidean projection onto {u : ||u||_inf <= eps}: per-sample clamp.
template <typename Scalar>
void ProjectLinfBall(Eigen::Matrix<Scalar, Eigen::Dynamic, 1> *v, double eps) {
  const Scalar e = static_cast<Scalar>(eps);
  *v = v->cwiseMax(-e).cwiseMin(e);
}

/// In-place Euclidean projection onto {u : ||u||_2 <= eps}: radial scaling.
/// Already-feasible inputs are returned bit-for-bit.
template <typename Scalar>
void ProjectL2Ball(Eigen::Matrix<Scalar, Eigen::Dynamic, 1> *v, double eps) {
  double n = LpNorm<Scalar>(*v, Norm::L2);
  if (n <= eps) return;
  *v *= static_cast<Scalar>(eps / n);
}

/// In-place Euclidean projection onto {u : ||u||_1 <= eps} via the exact
/// O(n log n) sort-based simplex projection (soft threshold at the level
/// where the shrunk magnitudes sum to eps). Feasible inputs pass unchanged.
template <typename Scalar>
void ProjectL1Ball(Eigen::Matrix<Scalar, Eigen::Dynamic, 1> *v, double eps) {
  const Eigen::Index n = v->size();
  if (n == 0) return;
  if (LpNorm<Scalar>(*v, Norm::L1) <= eps) return;

  std::vector<double> mag(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) mag[static_cast<size_t>(i)] = std::abs(static_cast<double>((*v)[i]));
  std::sort(mag.begin(), mag.end(), std::greater<double>());

  double cum = 0.0, theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cum += mag[static_cast<size_t>(j)];
    double t = (cum - eps) / static_cast<double>(j + 1);
    if (j + 1 == n || mag[static_cast<size_t>(j + 1)] <= t) {
      theta = t;
      break;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = std::abs(static_cast<double>((*v)[i])) - theta;
    double s = (*v)[i] >= 0 ? 1.0 : -1.0;
    (*v)[i] = static_cast<Scalar>(a > 0 ? s * a : 0.0);
  }
}

template <typename Scalar>
void ProjectLpBall(Eigen::Matrix<Scalar, Eigen::Dynamic, 1> *v, Norm p, double eps) {
  switch (p) {
    case Norm::L1: ProjectL1Ball<Scalar>(v, eps); return;
    case Norm::L2: ProjectL2Ball<Scalar>(v, eps); return;
    case Norm::LInf: ProjectLinfBall<Scalar>(v, eps); return;
    case Norm::L0:
      Fail("ProjectLpBall: L0 constraints are enforced inside attack algorithms, "
           "not by projection");
  }
  Fail("ProjectLpBall: bad norm enum");
}

inline Waveform ProjectLpBall(const Waveform &v, const ThreatModel &tm) {
  ValidateWaveform(v);
  tm.Validate();
  Waveform out = v;
  ProjectLpBall<float>(&out.samples, tm.p, tm.epsilon);
  return out;
}

/// 10 log10(||x||^2 / ||delta||^2), the stealth measure of an attack.
inline double SnrDb(const Waveform &x, const Waveform &delta) {
  ValidateWaveform(x, "snr x");
  ValidateWaveform(delta, "snr delta");
  Require(x.size() == delta.size(), "SnrDb: length mismatch (", x.size(), " vs ",
          delta.size(), ")");
  Require(x.sample_rate == delta.sample_rate, "SnrDb: sample rate mismatch (",
          x.sample_rate, " vs ", delta.sample_rate, ")");
  double ex = LpNorm<float>(x.samples, Norm::L2);
  double ed = LpNorm<float>(delta.samples, Norm::L2);
  Require(ed > 0, "SnrDb: zero-energy delta, SNR undefined");
  return 10.0 * std::log10((ex * ex) / (ed * ed));
}

}  // namespace advsig

#endif  // ADVSIG_LP_HPP
