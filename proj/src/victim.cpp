// src/victim.cpp

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

#include "advsig/victim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "advsig/jsonio.hpp"

namespace advsig {

nlohmann::ordered_json FrontendConfigToJson(const FrontendConfig &c) {
  Json j;
  j["sample_rate"] = c.sample_rate;
  j["frame_len"] = c.frame_len;
  j["hop"] = c.hop;
  j["fft_size"] = c.fft_size;
  j["mel_bins"] = c.mel_bins;
  j["fmin"] = c.fmin;
  j["fmax"] = c.fmax;
  j["floor"] = c.floor;
  return j;
}

FrontendConfig FrontendConfigFromJson(const nlohmann::ordered_json &j) {
  FrontendConfig c;
  c.sample_rate = j.at("sample_rate").get<int>();
  c.frame_len = j.at("frame_len").get<int>();
  c.hop = j.at("hop").get<int>();
  c.fft_size = j.at("fft_size").get<int>();
  c.mel_bins = j.at("mel_bins").get<int>();
  c.fmin = j.at("fmin").get<double>();
  c.fmax = j.at("fmax").get<double>();
  c.floor = j.at("floor").get<double>();
  return c;
}

nlohmann::ordered_json XvecConfig::ToJson() const {
  Json j;
  j["frontend"] = FrontendConfigToJson(frontend);
  j["num_classes"] = num_classes;
  j["channels"] = channels;
  j["num_blocks"] = num_blocks;
  j["embed_dim"] = embed_dim;
  j["margin"] = margin;
  j["scale"] = scale;
  return j;
}

XvecConfig XvecConfig::FromJson(const nlohmann::ordered_json &j) {
  XvecConfig c;
  c.frontend = FrontendConfigFromJson(j.at("frontend"));
  c.num_classes = j.at("num_classes").get<int>();
  c.channels = j.at("channels").get<int>();
  c.num_blocks = j.at("num_blocks").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.margin = j.at("margin").get<double>();
  c.scale = j.at("scale").get<double>();
  c.Validate();
  return c;
}

Classifier::Classifier(const XvecConfig &cfg, std::string kind)
    : net_(std::make_shared<XvecNet<float>>(cfg)), kind_(std::move(kind)) {}

Classifier Classifier::Load(const std::string &path, const std::string &expect_kind) {
  nn::ParamStore<float> loaded;
  Json cfg_json = nn::LoadCheckpoint(path, expect_kind, &loaded);
  XvecConfig cfg = XvecConfig::FromJson(cfg_json);
  Classifier model(cfg, expect_kind);
  Require(loaded.size() == model.net_->params().size(),
          "checkpoint '", path, "': parameter count mismatch");
  CastParams<float, float>(loaded, &model.net_->params());
  return model;
}

void Classifier::Save(const std::string &path) const {
  nn::SaveCheckpoint(path, kind_, net_->config().ToJson(), net_->params());
}

Prediction Classifier::Predict(const Waveform &x) const {
  ad::Tape<float> tape;
  XvecOutputs out = net_->Infer(&tape, x);
  Eigen::VectorXf logits = tape.Value(out.logits).col(0);
  // softmax in double for a clean normalization
  Eigen::VectorXd z = logits.cast<double>();
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  Eigen::VectorXd p = e / e.sum();
  Prediction pred;
  pred.posteriors = p.cast<float>();
  pred.label = 0;
  for (int i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[pred.label]) pred.label = i;  // ties keep lowest index
  }
  return pred;
}

Eigen::VectorXf Classifier::Embed(const Waveform &x) const {
  ad::Tape<float> tape;
  XvecOutputs out = net_->Infer(&tape, x);
  return tape.Value(out.embedding).col(0);
}

double Classifier::Loss(const Waveform &x, int label) const {
  ad::Tape<float> tape;
  XvecOutputs out = net_->Infer(&tape, x);
  ad::Var loss = tape.SoftmaxCrossEntropy(out.logits, label);
  return static_cast<double>(tape.ScalarValue(loss));
}

std::pair<double, Eigen::VectorXf> Classifier::LossAndInputGradient(const Waveform &x,
                                                                    int label) const {
  ValidateWaveform(x);
  Require(label >= 0 && label < net_->config().num_classes, "input gradient: label ", label,
          " out of range");
  ad::Tape<float> tape;
  Eigen::MatrixXf wv(1, x.size());
  wv.row(0) = x.samples.transpose();
  ad::Var wave = tape.Leaf(wv, true);
  auto leaves = nn::MakeLeaves(&tape, net_->params(), false);
  XvecOutputs out = net_->Forward(&tape, leaves, wave, -1);
  ad::Var loss = tape.SoftmaxCrossEntropy(out.logits, label);
  tape.Backward(loss);
  Eigen::VectorXf grad = tape.Grad(wave).row(0).transpose();
  return {static_cast<double>(tape.ScalarValue(loss)), grad};
}

namespace {

Waveform CropOrFull(const Waveform &w, int crop_len, Rng *rng) {
  if (crop_len <= 0 || w.size() <= crop_len) return w;
  int start = static_cast<int>(rng->UniformInt(0, w.size() - crop_len));
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = w.samples.segment(start, crop_len);
  return out;
}

}  // namespace

XvecTrainStats TrainClassifier(Classifier *model, const std::vector<LabeledWave> &train,
                               const XvecTrainOpts &opts, uint64_t seed) {
  Require(!train.empty(), "train: empty dataset");
  std::set<int> labels;
  for (const auto &lw : train) {
    Require(lw.label >= 0 && lw.label < model->config().num_classes, "train: label ",
            lw.label, " outside configured range [0, ", model->config().num_classes, ")");
    labels.insert(lw.label);
  }
  Require(labels.size() >= 2, "train: need utterances from at least 2 classes, found ",
          labels.size());
  Require(opts.epochs > 0 && opts.batch > 0 && opts.lr > 0, "train: bad optimizer settings");

  XvecNet<float> &net = model->net();
  Rng init_rng(DeriveSeed(seed, "init"));
  net.InitParams(&init_rng);

  nn::AdamConfig acfg;
  acfg.lr = opts.lr;
  nn::Adam<float> opt(&net.params(), acfg);
  Rng order_rng(DeriveSeed(seed, "order"));
  Rng crop_rng(DeriveSeed(seed, "crop"));
  const int crop_len =
      opts.crop_seconds > 0
          ? static_cast<int>(std::lround(opts.crop_seconds * net.config().frontend.sample_rate))
          : 0;

  std::unique_ptr<JsonlWriter> log;
  if (!opts.log_path.empty()) log = std::make_unique<JsonlWriter>(opts.log_path);

  XvecTrainStats stats;
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    order_rng.Shuffle(&order);
    double epoch_loss = 0;
    int epoch_n = 0;
    for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(opts.batch)) {
      size_t take = std::min<size_t>(opts.batch, order.size() - pos);
      std::vector<Eigen::MatrixXf> acc;
      double batch_loss = 0;
      for (size_t k = 0; k < take; ++k) {
        const LabeledWave &lw = train[order[pos + k]];
        Waveform crop = CropOrFull(lw.wave, crop_len, &crop_rng);
        ad::Tape<float> tape;
        Eigen::MatrixXf wv(1, crop.size());
        wv.row(0) = crop.samples.transpose();
        ad::Var wave = tape.Leaf(wv, false);
        auto leaves = nn::MakeLeaves(&tape, net.params(), true);
        XvecOutputs out = net.Forward(&tape, leaves, wave, lw.label);
        tape.Backward(out.loss);
        batch_loss += static_cast<double>(tape.ScalarValue(out.loss));
        auto grads = nn::CollectGrads(&tape, leaves);
        if (acc.empty()) {
          acc = std::move(grads);
        } else {
          for (size_t g = 0; g < grads.size(); ++g) acc[g] += grads[g];
        }
      }
      for (auto &g : acc) g /= static_cast<float>(take);
      opt.Step(acc);
      ++stats.steps;
      epoch_loss += batch_loss;
      epoch_n += static_cast<int>(take);
      if (log) {
        Json row;
        row["epoch"] = epoch;
        row["step"] = stats.steps;
        row["loss"] = batch_loss / take;
        log->Write(row);
      }
    }
    stats.final_loss = epoch_loss / std::max(1, epoch_n);
  }
  return stats;
}

double EvalAccuracy(const Classifier &model, const std::vector<LabeledWave> &data) {
  Require(!data.empty(), "accuracy: empty dataset");
  int hits = 0;
  for (const auto &lw : data) {
    if (model.Predict(lw.wave).label == lw.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace advsig
