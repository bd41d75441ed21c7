// advsig/nn.hpp
// Named parameter storage, Adam updates and single-file checkpoints shared
// by every trainable model in the pipeline.

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

#ifndef ADVSIG_NN_HPP
#define ADVSIG_NN_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "advsig/autodiff.hpp"
#include "advsig/common.hpp"
#include "advsig/rng.hpp"

#include <json.hpp>

namespace advsig {
namespace nn {

/// Ordered collection of named float32 parameter matrices. Iteration order is
/// insertion order, which fixes the update order and the checkpoint layout.
template <typename S>
class ParamStore {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  Mat &Add(const std::string &name, Eigen::Index rows, Eigen::Index cols) {
    Require(index_.find(name) == index_.end(), "ParamStore: duplicate parameter '", name, "'");
    index_[name] = names_.size();
    names_.push_back(name);
    mats_.emplace_back(Mat::Zero(rows, cols));
    return mats_.back();
  }

  Mat &Get(const std::string &name) {
    auto it = index_.find(name);
    Require(it != index_.end(), "ParamStore: no parameter '", name, "'");
    return mats_[it->second];
  }
  const Mat &Get(const std::string &name) const {
    auto it = index_.find(name);
    Require(it != index_.end(), "ParamStore: no parameter '", name, "'");
    return mats_[it->second];
  }
  bool Has(const std::string &name) const { return index_.count(name) > 0; }

  size_t IndexOf(const std::string &name) const {
    auto it = index_.find(name);
    Require(it != index_.end(), "ParamStore: no parameter '", name, "'");
    return it->second;
  }

  size_t size() const { return mats_.size(); }
  const std::string &NameAt(size_t i) const { return names_[i]; }
  Mat &At(size_t i) { return mats_[i]; }
  const Mat &At(size_t i) const { return mats_[i]; }

  int64_t TotalCount() const {
    int64_t n = 0;
    for (const auto &m : mats_) n += m.size();
    return n;
  }

  /// Order-sensitive digest of every parameter value; used to verify that a
  /// pass which must not touch the model really leaves it untouched.
  double Checksum() const {
    double acc = 0;
    int64_t k = 1;
    for (const auto &m : mats_) {
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          acc += static_cast<double>(m(i, j)) * std::cos(static_cast<double>(k % 9973));
          ++k;
        }
    }
    return acc;
  }

 private:
  std::vector<std::string> names_;
  std::deque<Mat> mats_;  // deque: references from Add() stay valid
  std::map<std::string, size_t> index_;
};

/// He-style uniform init with bound sqrt(1 / fan_in), matching the default
/// used by common conv/linear layers.
template <typename S>
void InitUniformFanIn(Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> *m, int fan_in,
                      Rng *rng) {
  Require(fan_in > 0, "InitUniformFanIn: fan_in must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index j = 0; j < m->cols(); ++j)
    for (Eigen::Index i = 0; i < m->rows(); ++i)
      (*m)(i, j) = static_cast<S>(rng->Uniform(-bound, bound));
}

template <typename S>
void InitConstant(Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> *m, S value) {
  m->setConstant(value);
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over every matrix in a ParamStore. Moments are kept in the scalar
/// type of the store; step count is shared.
template <typename S>
class Adam {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  Adam(ParamStore<S> *params, AdamConfig cfg) : params_(params), cfg_(cfg) {
    m_.resize(params->size());
    v_.resize(params->size());
    for (size_t i = 0; i < params->size(); ++i) {
      m_[i] = Mat::Zero(params->At(i).rows(), params->At(i).cols());
      v_[i] = Mat::Zero(params->At(i).rows(), params->At(i).cols());
    }
  }

  /// Applies one update from gradients laid out like the store. lr overrides
  /// the configured rate when >= 0 (for schedules).
  void Step(const std::vector<Mat> &grads, double lr_override = -1.0) {
    Require(grads.size() == params_->size(), "Adam: gradient count mismatch");
    ++t_;
    const double lr = lr_override >= 0 ? lr_override : cfg_.lr;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (size_t i = 0; i < grads.size(); ++i) {
      Mat &p = params_->At(i);
      Require(grads[i].rows() == p.rows() && grads[i].cols() == p.cols(),
              "Adam: gradient shape mismatch at '", params_->NameAt(i), "'");
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
      v_[i] = (cfg_.beta2 * v_[i].array() + (1.0 - cfg_.beta2) * grads[i].array().square())
                  .matrix();
      Mat mhat = m_[i] / static_cast<S>(bc1);
      Mat vhat = v_[i] / static_cast<S>(bc2);
      p.array() -=
          static_cast<S>(lr) * mhat.array() / (vhat.array().sqrt() + static_cast<S>(cfg_.eps));
    }
  }

  int64_t StepCount() const { return t_; }

 private:
  ParamStore<S> *params_;
  AdamConfig cfg_;
  std::vector<Mat> m_, v_;
  int64_t t_ = 0;
};

// ---- checkpoints -------------------------------------------------------
//
// Single-file format: a magic line, a JSON config blob (length-prefixed),
// then for each parameter its name, shape and float32 payload in insertion
// order. Everything little-endian.

inline constexpr const char *kCheckpointMagic = "ADVSIGCKPT1";

void SaveCheckpoint(const std::string &path, const std::string &model_kind,
                    const nlohmann::ordered_json &config, const ParamStore<float> &params);

/// Reads a checkpoint, returning the model kind and config; parameters are
/// appended to *params (which must be empty).
nlohmann::ordered_json LoadCheckpoint(const std::string &path, const std::string &expect_kind,
                                      ParamStore<float> *params);

/// Registers every parameter of a store as a leaf on the tape, in order.
/// Returned handles are aligned with store indices.
template <typename S>
std::vector<ad::Var> MakeLeaves(ad::Tape<S> *tape, const ParamStore<S> &params,
                                bool requires_grad) {
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i)
    vars.push_back(tape->Leaf(params.At(i), requires_grad));
  return vars;
}

/// Collects gradients for every leaf registered by MakeLeaves.
template <typename S>
std::vector<typename ad::Tape<S>::Mat> CollectGrads(ad::Tape<S> *tape,
                                                    const std::vector<ad::Var> &leaves) {
  std::vector<typename ad::Tape<S>::Mat> grads;
  grads.reserve(leaves.size());
  for (ad::Var v : leaves) grads.push_back(tape->Grad(v));
  return grads;
}

}  // namespace nn
}  // namespace advsig

#endif  // ADVSIG_NN_HPP
