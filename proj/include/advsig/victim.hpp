// advsig/victim.hpp
// The speaker-identification classifier under attack: training, prediction
// and gradients of the classification loss with respect to the input
// waveform (the quantity every gradient-based attack consumes).

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

#ifndef ADVSIG_VICTIM_HPP
#define ADVSIG_VICTIM_HPP

#include <memory>
#include <string>
#include <vector>

#include "advsig/data.hpp"
#include "advsig/xvec.hpp"

namespace advsig {

struct Prediction {
  int label = -1;
  Eigen::VectorXf posteriors;  // sums to 1
};

struct XvecTrainOpts {
  int epochs = 12;
  int batch = 8;
  double lr = 1e-3;
  double crop_seconds = 1.0;  // random training crop; <=0 uses full length
  std::string log_path;       // JSONL training log, empty to skip
};

struct XvecTrainStats {
  double final_loss = 0.0;
  int steps = 0;
};

/// Wraps a float32 XvecNet with the classifier-facing operations. The same
/// wrapper backs the attack-signature extractor (different checkpoint kind).
class Classifier {
 public:
  Classifier(const XvecConfig &cfg, std::string kind);

  static Classifier Load(const std::string &path, const std::string &expect_kind);
  void Save(const std::string &path) const;

  const XvecConfig &config() const { return net_->config(); }
  XvecNet<float> &net() { return *net_; }
  const XvecNet<float> &net() const { return *net_; }
  const std::string &kind() const { return kind_; }

  /// Argmax over posteriors; ties break to the lowest class index.
  Prediction Predict(const Waveform &x) const;

  /// Unit-norm utterance embedding.
  Eigen::VectorXf Embed(const Waveform &x) const;

  /// Cross-entropy of the inference scores (no margin) at the given label.
  double Loss(const Waveform &x, int label) const;

  /// Loss plus its gradient with respect to every input sample.
  std::pair<double, Eigen::VectorXf> LossAndInputGradient(const Waveform &x, int label) const;

 private:
  std::shared_ptr<XvecNet<float>> net_;
  std::string kind_;
};

/// Minibatch Adam training with per-epoch reshuffling and random crops.
/// Deterministic given seed. Labels must cover {0..num_classes-1} with at
/// least two distinct values.
XvecTrainStats TrainClassifier(Classifier *model, const std::vector<LabeledWave> &train,
                               const XvecTrainOpts &opts, uint64_t seed);

/// Fraction of utterances whose prediction matches the label.
double EvalAccuracy(const Classifier &model, const std::vector<LabeledWave> &data);

}  // namespace advsig

#endif  // ADVSIG_VICTIM_HPP
