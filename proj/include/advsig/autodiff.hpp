// advsig/autodiff.hpp
// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// A Tape owns a growing list of nodes; every op appends one node whose
// backward closure scatters its gradient into the parents. Creation order is
// a topological order, so Backward() just walks the list in reverse. All
// activations are [channels x time] (or [dim x 1] for vectors).
//
// The scalar type is a template parameter: the pipeline runs float32, tests
// instantiate double for tight finite-difference checks.

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

#ifndef ADVSIG_AUTODIFF_HPP
#define ADVSIG_AUTODIFF_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "advsig/common.hpp"

namespace advsig {
namespace ad {

struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

/// Geometry of a 1-D convolution along the column (time) axis.
struct ConvGeom {
  int kernel = 1;
  int stride = 1;
  int dilation = 1;
  int pad_left = 0;
  int pad_right = 0;

  int OutLen(int in_len) const {
    int span = (kernel - 1) * dilation + 1;
    int padded = in_len + pad_left + pad_right;
    Require(padded >= span, "ConvGeom: input length ", in_len, " too short for kernel span ",
            span, " with padding ", pad_left, "+", pad_right);
    return (padded - span) / stride + 1;
  }
};

template <typename S>
class Tape {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  // ---- node access ----------------------------------------------------

  Var Leaf(Mat value, bool requires_grad = false) {
    return Append(std::move(value), requires_grad, nullptr);
  }

  const Mat &Value(Var v) const { return nodes_[Check(v)].value; }
  Mat &Grad(Var v) { return nodes_[Check(v)].grad; }
  bool RequiresGrad(Var v) const { return nodes_[Check(v)].requires_grad; }
  S ScalarValue(Var v) const {
    const Mat &m = Value(v);
    Require(m.rows() == 1 && m.cols() == 1, "ScalarValue: node is ", m.rows(), "x", m.cols());
    return m(0, 0);
  }
  size_t size() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = 1 and accumulates gradients into every node
  /// with requires_grad. root must be scalar (1x1).
  void Backward(Var root) {
    Require(Value(root).rows() == 1 && Value(root).cols() == 1,
            "Backward: root must be a scalar node");
    for (auto &n : nodes_) {
      if (n.requires_grad) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    }
    nodes_[Check(root)].grad = Mat::Constant(1, 1, S(1));
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      auto &n = nodes_[static_cast<size_t>(i)];
      if (n.back && n.requires_grad) n.back();
    }
  }

  // ---- elementwise and linear ops -------------------------------------

  Var Add(Var a, Var b) {
    SameShape(a, b, "Add");
    Mat v = Value(a) + Value(b);
    return Append(std::move(v), Rg(a) || Rg(b), [this, a, b](Var out) {
      if (Rg(a)) Grad(a) += Grad(out);
      if (Rg(b)) Grad(b) += Grad(out);
    });
  }

  Var Sub(Var a, Var b) {
    SameShape(a, b, "Sub");
    Mat v = Value(a) - Value(b);
    return Append(std::move(v), Rg(a) || Rg(b), [this, a, b](Var out) {
      if (Rg(a)) Grad(a) += Grad(out);
      if (Rg(b)) Grad(b) -= Grad(out);
    });
  }

  Var CMul(Var a, Var b) {
    SameShape(a, b, "CMul");
    Mat v = Value(a).cwiseProduct(Value(b));
    return Append(std::move(v), Rg(a) || Rg(b), [this, a, b](Var out) {
      if (Rg(a)) Grad(a) += Grad(out).cwiseProduct(Value(b));
      if (Rg(b)) Grad(b) += Grad(out).cwiseProduct(Value(a));
    });
  }

  /// Elementwise a / b. b must stay away from zero.
  Var CDiv(Var a, Var b) {
    SameShape(a, b, "CDiv");
    Mat v = Value(a).cwiseQuotient(Value(b));
    return Append(std::move(v), Rg(a) || Rg(b), [this, a, b](Var out) {
      if (Rg(a)) Grad(a) += Grad(out).cwiseQuotient(Value(b));
      if (Rg(b))
        Grad(b) -= Grad(out).cwiseProduct(Value(out)).cwiseQuotient(Value(b));
    });
  }

  Var Scale(Var a, S s) {
    Mat v = Value(a) * s;
    return Append(std::move(v), Rg(a), [this, a, s](Var out) {
      if (Rg(a)) Grad(a) += Grad(out) * s;
    });
  }

  Var AddScalar(Var a, S s) {
    Mat v = (Value(a).array() + s).matrix();
    return Append(std::move(v), Rg(a), [this, a](Var out) {
      if (Rg(a)) Grad(a) += Grad(out);
    });
  }

  Var MatMul(Var a, Var b) {
    Require(Value(a).cols() == Value(b).rows(), "MatMul: inner dims ", Value(a).cols(),
            " vs ", Value(b).rows());
    Mat v = Value(a) * Value(b);
    return Append(std::move(v), Rg(a) || Rg(b), [this, a, b](Var out) {
      if (Rg(a)) Grad(a).noalias() += Grad(out) * Value(b).transpose();
      if (Rg(b)) Grad(b).noalias() += Value(a).transpose() * Grad(out);
    });
  }

  /// Adds a per-row bias (b is rows x 1), broadcast over columns.
  Var AddColVec(Var a, Var b) {
    Require(Value(b).cols() == 1 && Value(b).rows() == Value(a).rows(),
            "AddColVec: bias shape mismatch");
    Mat v = Value(a).colwise() + Vec(Value(b).col(0));
    return Append(std::move(v), Rg(a) || Rg(b), [this, a, b](Var out) {
      if (Rg(a)) Grad(a) += Grad(out);
      if (Rg(b)) Grad(b).col(0) += Grad(out).rowwise().sum();
    });
  }

  /// Multiplies each row by a per-row factor (w is rows x 1).
  Var MulColVec(Var a, Var w) {
    Require(Value(w).cols() == 1 && Value(w).rows() == Value(a).rows(),
            "MulColVec: factor shape mismatch");
    Mat v = (Value(a).array().colwise() * Value(w).col(0).array()).matrix();
    return Append(std::move(v), Rg(a) || Rg(w), [this, a, w](Var out) {
      if (Rg(a)) Grad(a).array() += Grad(out).array().colwise() * Value(w).col(0).array();
      if (Rg(w))
        Grad(w).col(0) += Grad(out).cwiseProduct(Value(a)).rowwise().sum();
    });
  }

  // ---- nonlinearities --------------------------------------------------

  Var Relu(Var a) {
    Mat v = Value(a).cwiseMax(S(0));
    return Append(std::move(v), Rg(a), [this, a](Var out) {
      if (Rg(a))
        Grad(a).array() +=
            Grad(out).array() * (Value(a).array() > S(0)).template cast<S>();
    });
  }

  Var LeakyRelu(Var a, S slope) {
    Mat v = Value(a).cwiseMax(Value(a) * slope);
    return Append(std::move(v), Rg(a), [this, a, slope](Var out) {
      if (Rg(a)) {
        auto pos = (Value(a).array() > S(0)).template cast<S>();
        Grad(a).array() += Grad(out).array() * (pos + (S(1) - pos) * slope);
      }
    });
  }

  /// PReLU with one learnable slope per row (channel): alpha is rows x 1.
  Var PRelu(Var a, Var alpha) {
    Require(Value(alpha).cols() == 1 && Value(alpha).rows() == Value(a).rows(),
            "PRelu: alpha shape mismatch");
    Mat neg = Value(a).cwiseMin(S(0));
    Mat v = Value(a).cwiseMax(S(0)) + (neg.array().colwise() * Value(alpha).col(0).array()).matrix();
    return Append(std::move(v), Rg(a) || Rg(alpha), [this, a, alpha](Var out) {
      Mat pos = ((Value(a).array() > S(0)).template cast<S>()).matrix();
      if (Rg(a)) {
        Mat gneg = (Grad(out).array() * (S(1) - pos.array())).matrix();
        Grad(a).array() += Grad(out).array() * pos.array();
        Grad(a).array() += gneg.array().colwise() * Value(alpha).col(0).array();
      }
      if (Rg(alpha)) {
        Mat negpart = Value(a).cwiseMin(S(0));
        Grad(alpha).col(0) += Grad(out).cwiseProduct(negpart).rowwise().sum();
      }
    });
  }

  Var Sigmoid(Var a) {
    Mat v = (S(1) / (S(1) + (-Value(a).array()).exp())).matrix();
    return Append(std::move(v), Rg(a), [this, a](Var out) {
      if (Rg(a)) {
        auto y = Value(out).array();
        Grad(a).array() += Grad(out).array() * y * (S(1) - y);
      }
    });
  }

  Var Tanh(Var a) {
    Mat v = Value(a).array().tanh().matrix();
    return Append(std::move(v), Rg(a), [this, a](Var out) {
      if (Rg(a)) {
        auto y = Value(out).array();
        Grad(a).array() += Grad(out).array() * (S(1) - y * y);
      }
    });
  }

  Var Square(Var a) {
    Mat v = Value(a).array().square().matrix();
    return Append(std::move(v), Rg(a), [this, a](Var out) {
      if (Rg(a)) Grad(a).array() += Grad(out).array() * S(2) * Value(a).array();
    });
  }

  Var Abs(Var a) {
    Mat v = Value(a).cwiseAbs();
    return Append(std::move(v), Rg(a), [this, a](Var out) {
      if (Rg(a)) Grad(a).array() += Grad(out).array() * Value(a).array().sign();
    });
  }

  /// log(a + eps), elementwise.
  Var LogEps(Var a, S eps) {
    Mat v = (Value(a).array() + eps).log().matrix();
    return Append(std::move(v), Rg(a), [this, a, eps](Var out) {
      if (Rg(a)) Grad(a).array() += Grad(out).array() / (Value(a).array() + eps);
    });
  }

  /// sqrt(a + eps), elementwise. Backward is guarded at zero.
  Var SqrtEps(Var a, S eps) {
    Mat v = (Value(a).array() + eps).sqrt().matrix();
    return Append(std::move(v), Rg(a), [this, a](Var out) {
      if (Rg(a)) {
        auto denom = (S(2) * Value(out).array()).max(S(1e-30));
        Grad(a).array() += Grad(out).array() / denom;
      }
    });
  }

  // ---- reductions ------------------------------------------------------

  Var Sum(Var a) {
    Mat v(1, 1);
    v(0, 0) = Value(a).sum();
    return Append(std::move(v), Rg(a), [this, a](Var out) {
      if (Rg(a)) Grad(a).array() += Grad(out)(0, 0);
    });
  }

  Var Mean(Var a) {
    S inv = S(1) / static_cast<S>(Value(a).size());
    Mat v(1, 1);
    v(0, 0) = Value(a).sum() * inv;
    return Append(std::move(v), Rg(a), [this, a, inv](Var out) {
      if (Rg(a)) Grad(a).array() += Grad(out)(0, 0) * inv;
    });
  }

  /// Statistics pooling: per-row mean and standard deviation over columns,
  /// stacked as [means; stds] (2R x 1).
  Var RowMeanStd(Var a, S eps) {
    const Mat &x = Value(a);
    const Eigen::Index r = x.rows(), t = x.cols();
    Require(t >= 1, "RowMeanStd: empty input");
    Vec mean = x.rowwise().mean();
    Mat centered = x.colwise() - mean;
    Vec var = centered.array().square().matrix().rowwise().mean();
    Vec sd = (var.array() + eps).sqrt().matrix();
    Mat v(2 * r, 1);
    v.col(0).head(r) = mean;
    v.col(0).tail(r) = sd;
    return Append(std::move(v), Rg(a), [this, a, r, t](Var out) {
      if (!Rg(a)) return;
      const Mat &x = Value(a);
      Vec mean = x.rowwise().mean();
      Vec sd = Value(out).col(0).tail(r);
      Vec dmean = Grad(out).col(0).head(r);
      Vec dsd = Grad(out).col(0).tail(r);
      S invt = S(1) / static_cast<S>(t);
      Mat centered = x.colwise() - mean;
      // d sd / d x = (x - mean) / (T * sd); the mean term cancels
      Vec coef = dsd.array() / (static_cast<S>(t) * sd.array().max(S(1e-30)));
      Grad(a) += (centered.array().colwise() * coef.array()).matrix();
      Grad(a).colwise() += Vec(dmean * invt);
    });
  }

  // ---- shape ops -------------------------------------------------------

  Var PadCols(Var a, int left, int right) {
    const Mat &x = Value(a);
    Mat v = Mat::Zero(x.rows(), x.cols() + left + right);
    v.middleCols(left, x.cols()) = x;
    return Append(std::move(v), Rg(a), [this, a, left](Var out) {
      if (Rg(a)) Grad(a) += Grad(out).middleCols(left, Value(a).cols());
    });
  }

  Var CropCols(Var a, int start, int len) {
    Require(start >= 0 && start + len <= Value(a).cols(), "CropCols: out of range");
    Mat v = Value(a).middleCols(start, len);
    return Append(std::move(v), Rg(a), [this, a, start, len](Var out) {
      if (Rg(a)) Grad(a).middleCols(start, len) += Grad(out);
    });
  }

  Var ConcatRows(Var a, Var b) {
    Require(Value(a).cols() == Value(b).cols(), "ConcatRows: column mismatch");
    Mat v(Value(a).rows() + Value(b).rows(), Value(a).cols());
    v.topRows(Value(a).rows()) = Value(a);
    v.bottomRows(Value(b).rows()) = Value(b);
    return Append(std::move(v), Rg(a) || Rg(b), [this, a, b](Var out) {
      if (Rg(a)) Grad(a) += Grad(out).topRows(Value(a).rows());
      if (Rg(b)) Grad(b) += Grad(out).bottomRows(Value(b).rows());
    });
  }

  /// Collects scalar nodes into one [N x 1] node.
  Var StackScalars(const std::vector<Var> &xs) {
    Require(!xs.empty(), "StackScalars: empty input");
    Mat v(static_cast<Eigen::Index>(xs.size()), 1);
    bool rg = false;
    for (size_t i = 0; i < xs.size(); ++i) {
      v(static_cast<Eigen::Index>(i), 0) = ScalarValue(xs[i]);
      rg = rg || Rg(xs[i]);
    }
    std::vector<Var> parents = xs;
    return Append(std::move(v), rg, [this, parents](Var out) {
      for (size_t i = 0; i < parents.size(); ++i) {
        if (Rg(parents[i]))
          Grad(parents[i])(0, 0) += Grad(out)(static_cast<Eigen::Index>(i), 0);
      }
    });
  }

  // ---- sliding-window (time axis) ops ---------------------------------

  /// im2col along the column axis: input [C x T] becomes [(K*C) x T_out]
  /// with out(j*C + c, t) = in(c, t*stride + j*dilation - pad_left),
  /// zero outside. The same primitive frames waveforms for the STFT
  /// front-ends (C = 1, kernel = frame length, stride = hop).
  Var Im2Col(Var a, const ConvGeom &g) {
    Mat v = Im2ColValue(Value(a), g);
    return Append(std::move(v), Rg(a), [this, a, g](Var out) {
      if (Rg(a)) Col2ImAccum(Grad(out), g, &Grad(a));
    });
  }

  /// Transposed sliding-window (adjoint of Im2Col): input [(K*C) x T] is
  /// scattered into [C x out_len].
  Var Col2Im(Var a, const ConvGeom &g, int channels, int out_len) {
    Require(Value(a).rows() == static_cast<Eigen::Index>(g.kernel) * channels,
            "Col2Im: row count does not match kernel*channels");
    Mat v = Mat::Zero(channels, out_len);
    Col2ImAccum(Value(a), g, &v);
    return Append(std::move(v), Rg(a), [this, a, g](Var out) {
      if (Rg(a)) Grad(a) += Im2ColValue(Grad(out), g);
    });
  }

  /// Depthwise 1-D convolution: weight is [C x K], each channel filtered by
  /// its own K-tap kernel. stride is fixed at 1.
  Var DepthwiseConv(Var a, Var w, const ConvGeom &g) {
    Require(g.stride == 1, "DepthwiseConv: stride must be 1");
    const Mat &x = Value(a);
    const Mat &wt = Value(w);
    Require(wt.rows() == x.rows() && wt.cols() == g.kernel, "DepthwiseConv: weight shape");
    const int t_out = g.OutLen(static_cast<int>(x.cols()));
    Mat v = Mat::Zero(x.rows(), t_out);
    for (int j = 0; j < g.kernel; ++j) {
      const int off = j * g.dilation - g.pad_left;
      const int lo = std::max(0, -off);
      const int hi = std::min(t_out, static_cast<int>(x.cols()) - off);
      if (lo >= hi) continue;
      v.middleCols(lo, hi - lo).array() +=
          x.middleCols(lo + off, hi - lo).array().colwise() * wt.col(j).array();
    }
    return Append(std::move(v), Rg(a) || Rg(w), [this, a, w, g](Var out) {
      const Mat &x = Value(a);
      const Mat &wt = Value(w);
      const Mat &go = Grad(out);
      const int t_out = static_cast<int>(go.cols());
      for (int j = 0; j < g.kernel; ++j) {
        const int off = j * g.dilation - g.pad_left;
        const int lo = std::max(0, -off);
        const int hi = std::min(t_out, static_cast<int>(x.cols()) - off);
        if (lo >= hi) continue;
        if (Rg(a))
          Grad(a).middleCols(lo + off, hi - lo).array() +=
              go.middleCols(lo, hi - lo).array().colwise() * wt.col(j).array();
        if (Rg(w))
          Grad(w).col(j) += go.middleCols(lo, hi - lo)
                                .cwiseProduct(x.middleCols(lo + off, hi - lo))
                                .rowwise()
                                .sum();
      }
    });
  }

  // ---- normalization ---------------------------------------------------

  /// Global layer norm: normalize over all (channel, time) entries, then
  /// apply a per-channel affine. gamma/beta are [C x 1].
  Var GlobalLayerNorm(Var a, Var gamma, Var beta, S eps) {
    const Mat &x = Value(a);
    Require(Value(gamma).rows() == x.rows() && Value(beta).rows() == x.rows(),
            "GlobalLayerNorm: affine shape mismatch");
    const S n = static_cast<S>(x.size());
    S mu = x.sum() / n;
    S var = (x.array() - mu).square().sum() / n;
    S inv_sd = S(1) / std::sqrt(var + eps);
    Mat xhat = ((x.array() - mu) * inv_sd).matrix();
    Mat v = (xhat.array().colwise() * Value(gamma).col(0).array()).matrix();
    v.colwise() += Vec(Value(beta).col(0));
    // keep xhat and inv_sd for backward
    std::shared_ptr<std::pair<Mat, S>> ctx =
        std::make_shared<std::pair<Mat, S>>(std::move(xhat), inv_sd);
    return Append(std::move(v), Rg(a) || Rg(gamma) || Rg(beta),
                  [this, a, gamma, beta, ctx, n](Var out) {
                    const Mat &xhat = ctx->first;
                    const S inv_sd = ctx->second;
                    const Mat &go = Grad(out);
                    if (Rg(gamma))
                      Grad(gamma).col(0) += go.cwiseProduct(xhat).rowwise().sum();
                    if (Rg(beta)) Grad(beta).col(0) += go.rowwise().sum();
                    if (Rg(a)) {
                      Mat dxhat = (go.array().colwise() * Value(gamma).col(0).array()).matrix();
                      S sum_d = dxhat.sum();
                      S sum_dx = dxhat.cwiseProduct(xhat).sum();
                      Grad(a).array() +=
                          inv_sd * (dxhat.array() - sum_d / n - xhat.array() * (sum_dx / n));
                    }
                  });
  }

  /// Normalizes each row of a to unit L2 norm (for cosine classifier weights).
  Var L2NormalizeRows(Var a, S eps) {
    const Mat &x = Value(a);
    Vec norms = (x.array().square().rowwise().sum() + eps).sqrt().matrix();
    Mat v = (x.array().colwise() / norms.array()).matrix();
    std::shared_ptr<Vec> ctx = std::make_shared<Vec>(norms);
    return Append(std::move(v), Rg(a), [this, a, ctx](Var out) {
      if (!Rg(a)) return;
      const Vec &norms = *ctx;
      const Mat &y = Value(out);
      const Mat &go = Grad(out);
      Vec dot = go.cwiseProduct(y).rowwise().sum();
      Mat t = go - (y.array().colwise() * dot.array()).matrix();
      Grad(a) += (t.array().colwise() / norms.array()).matrix();
    });
  }

  /// Normalizes the whole matrix (seen as one vector) to unit L2 norm.
  Var L2NormalizeFlat(Var a, S eps) {
    const Mat &x = Value(a);
    S norm = std::sqrt(x.squaredNorm() + eps);
    Mat v = x / norm;
    return Append(std::move(v), Rg(a), [this, a, norm](Var out) {
      if (!Rg(a)) return;
      const Mat &y = Value(out);
      const Mat &go = Grad(out);
      S dot = go.cwiseProduct(y).sum();
      Grad(a) += (go - y * dot) / norm;
    });
  }

  // ---- task-specific heads --------------------------------------------

  /// Softmax cross-entropy of a [K x 1] logit vector at class y.
  /// Accumulates in double regardless of S.
  Var SoftmaxCrossEntropy(Var logits, int y) {
    const Mat &z = Value(logits);
    Require(z.cols() == 1, "SoftmaxCrossEntropy: logits must be K x 1");
    Require(y >= 0 && y < z.rows(), "SoftmaxCrossEntropy: label ", y, " out of range");
    Eigen::VectorXd zd = z.col(0).template cast<double>();
    double zmax = zd.maxCoeff();
    Eigen::VectorXd ez = (zd.array() - zmax).exp();
    double denom = ez.sum();
    double loss = -(zd[y] - zmax - std::log(denom));
    std::shared_ptr<Eigen::VectorXd> probs = std::make_shared<Eigen::VectorXd>(ez / denom);
    Mat v(1, 1);
    v(0, 0) = static_cast<S>(loss);
    return Append(std::move(v), Rg(logits), [this, logits, y, probs](Var out) {
      if (!Rg(logits)) return;
      S g = Grad(out)(0, 0);
      for (Eigen::Index i = 0; i < probs->size(); ++i) {
        S p = static_cast<S>((*probs)[i]);
        Grad(logits)(i, 0) += g * (p - (i == y ? S(1) : S(0)));
      }
    });
  }

  /// Additive angular margin adjustment of cosine logits: the target entry
  /// becomes s*cos(theta_y + m), every other entry s*cos(theta_i).
  /// Inputs must be cosines in [-1, 1] (up to 1e-6 slack, clamped).
  Var AamAdjust(Var cosines, int y, S margin, S scale) {
    const Mat &c = Value(cosines);
    Require(c.cols() == 1, "AamAdjust: cosines must be K x 1");
    Require(y >= 0 && y < c.rows(), "AamAdjust: label out of range");
    Require(margin >= S(0), "AamAdjust: margin must be >= 0");
    Require(scale > S(0), "AamAdjust: scale must be > 0");
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      Require(std::abs(static_cast<double>(c(i, 0))) <= 1.0 + 1e-6,
              "AamAdjust: cosine logit ", static_cast<double>(c(i, 0)),
              " outside [-1, 1]");
    }
    const S cm = std::cos(margin), sm = std::sin(margin);
    Mat v = c * scale;
    // clamp for the sqrt; the adjusted value itself uses the clamped cosine
    S cy = std::min(S(1), std::max(S(-1), c(y, 0)));
    S sy = std::sqrt(std::max(S(0), S(1) - cy * cy));
    v(y, 0) = scale * (cy * cm - sy * sm);
    return Append(std::move(v), Rg(cosines), [this, cosines, y, cm, sm, scale](Var out) {
      if (!Rg(cosines)) return;
      const Mat &c = Value(cosines);
      Grad(cosines) += Grad(out) * scale;
      // fix up the target entry: d/dc [c*cm - sqrt(1-c^2)*sm]
      S cy = std::min(S(1), std::max(S(-1), c(y, 0)));
      S sy = std::sqrt(std::max(S(0), S(1) - cy * cy));
      S d = cm + cy / std::max(sy, S(1e-4)) * sm;
      Grad(cosines)(y, 0) += Grad(out)(y, 0) * scale * (d - S(1));
    });
  }

  /// Dual contrastive adversarial objective over batch logits:
  ///   term1 = -mean over reals of log(1 + sum_fakes exp(fake - real))
  ///   term2 = -mean over fakes of log(1 + sum_reals exp(fake - real))
  /// Stabilized with log-sum-exp in double; finite for logits up to +-80.
  /// The discriminator ascends this value, the generator descends it.
  Var DclLoss(Var real, Var fake) {
    const Mat &r = Value(real);
    const Mat &f = Value(fake);
    Require(r.cols() == 1 && f.cols() == 1, "DclLoss: logits must be N x 1");
    Require(r.rows() > 0 && f.rows() > 0, "DclLoss: empty batch");
    const Eigen::Index nr = r.rows(), nf = f.rows();
    Eigen::VectorXd rd = r.col(0).template cast<double>();
    Eigen::VectorXd fd = f.col(0).template cast<double>();

    // weights(i,j) = exp(f_j - r_i) / (1 + sum_j exp(f_j - r_i)) for term1 rows,
    // and the same matrix reused column-wise for term2.
    auto lse_row = [](double base, const Eigen::VectorXd &a) {
      // log(exp(base) + sum exp(a_k)), all in double
      double m = base;
      for (Eigen::Index k = 0; k < a.size(); ++k) m = std::max(m, a[k]);
      double s = std::exp(base - m);
      for (Eigen::Index k = 0; k < a.size(); ++k) s += std::exp(a[k] - m);
      return m + std::log(s);
    };

    double term1 = 0;
    std::shared_ptr<Eigen::MatrixXd> w1 = std::make_shared<Eigen::MatrixXd>(nr, nf);
    for (Eigen::Index i = 0; i < nr; ++i) {
      Eigen::VectorXd a = (fd.array() - rd[i]).matrix();
      double l = lse_row(0.0, a);
      term1 += l;
      w1->row(i) = (a.array() - l).exp().matrix().transpose();
    }
    term1 = -term1 / static_cast<double>(nr);

    double term2 = 0;
    std::shared_ptr<Eigen::MatrixXd> w2 = std::make_shared<Eigen::MatrixXd>(nf, nr);
    for (Eigen::Index j = 0; j < nf; ++j) {
      Eigen::VectorXd a = (fd[j] - rd.array()).matrix();
      double l = lse_row(0.0, a);
      term2 += l;
      w2->row(j) = (a.array() - l).exp().matrix().transpose();
    }
    term2 = -term2 / static_cast<double>(nf);

    Mat v(1, 1);
    v(0, 0) = static_cast<S>(term1 + term2);
    return Append(std::move(v), Rg(real) || Rg(fake),
                  [this, real, fake, w1, w2, nr, nf](Var out) {
                    S g = Grad(out)(0, 0);
                    double inr = 1.0 / static_cast<double>(nr);
                    double inf_ = 1.0 / static_cast<double>(nf);
                    if (Rg(fake)) {
                      for (Eigen::Index j = 0; j < nf; ++j) {
                        double acc = 0;
                        for (Eigen::Index i = 0; i < nr; ++i) acc += (*w1)(i, j) * inr;
                        for (Eigen::Index i = 0; i < nr; ++i) acc += (*w2)(j, i) * inf_;
                        Grad(fake)(j, 0) += g * static_cast<S>(-acc);
                      }
                    }
                    if (Rg(real)) {
                      for (Eigen::Index i = 0; i < nr; ++i) {
                        double acc = 0;
                        for (Eigen::Index j = 0; j < nf; ++j) acc += (*w1)(i, j) * inr;
                        for (Eigen::Index j = 0; j < nf; ++j) acc += (*w2)(j, i) * inf_;
                        Grad(real)(i, 0) += g * static_cast<S>(acc);
                      }
                    }
                  });
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> back;
    bool requires_grad = false;
  };

  bool Rg(Var v) const { return nodes_[Check(v)].requires_grad; }

  size_t Check(Var v) const {
    Require(v.idx >= 0 && static_cast<size_t>(v.idx) < nodes_.size(),
            "Tape: invalid Var handle");
    return static_cast<size_t>(v.idx);
  }

  template <typename F>
  Var Append(Mat value, bool requires_grad, F &&back_fn) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    Var out{static_cast<int>(nodes_.size()) - 1};
    if constexpr (!std::is_same_v<std::decay_t<F>, std::nullptr_t>) {
      if (requires_grad) {
        auto fn = std::forward<F>(back_fn);
        nodes_.back().back = [fn, out]() mutable { fn(out); };
      }
    }
    return out;
  }

  Var Append(Mat value, bool requires_grad, std::nullptr_t) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  void SameShape(Var a, Var b, const char *op) const {
    Require(Value(a).rows() == Value(b).rows() && Value(a).cols() == Value(b).cols(), op,
            ": shape mismatch ", Value(a).rows(), "x", Value(a).cols(), " vs ",
            Value(b).rows(), "x", Value(b).cols());
  }

  static Mat Im2ColValue(const Mat &x, const ConvGeom &g) {
    const int c = static_cast<int>(x.rows());
    const int t_out = g.OutLen(static_cast<int>(x.cols()));
    Mat cols = Mat::Zero(static_cast<Eigen::Index>(g.kernel) * c, t_out);
    for (int j = 0; j < g.kernel; ++j) {
      for (int t = 0; t < t_out; ++t) {
        int src = t * g.stride + j * g.dilation - g.pad_left;
        if (src >= 0 && src < x.cols()) cols.block(j * c, t, c, 1) = x.col(src);
      }
    }
    return cols;
  }

  /// Adjoint of Im2ColValue: scatter-adds cols into *acc (already sized).
  static void Col2ImAccum(const Mat &cols, const ConvGeom &g, Mat *acc) {
    const int c = static_cast<int>(acc->rows());
    const int t_out = static_cast<int>(cols.cols());
    for (int j = 0; j < g.kernel; ++j) {
      for (int t = 0; t < t_out; ++t) {
        int dst = t * g.stride + j * g.dilation - g.pad_left;
        if (dst >= 0 && dst < acc->cols()) acc->col(dst) += cols.block(j * c, t, c, 1);
      }
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace ad
}  // namespace advsig

#endif  // ADVSIG_AUTODIFF_HPP
