// advsig/xvec.hpp
// Utterance-embedding classifier: log-mel front-end, 1-D residual conv
// encoder, statistics pooling (mean + standard deviation over time), linear
// embedding and a cosine head with an optional additive angular margin.
// Used both as the speaker-identification victim and as the attack-signature
// extractor; only the label set differs.

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

#ifndef ADVSIG_XVEC_HPP
#define ADVSIG_XVEC_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "advsig/autodiff.hpp"
#include "advsig/frontend.hpp"
#include "advsig/nn.hpp"
#include "advsig/rng.hpp"
#include "advsig/waveform.hpp"

#include <json.hpp>

namespace advsig {

struct XvecConfig {
  FrontendConfig frontend;
  int num_classes = 0;
  int channels = 64;
  int num_blocks = 2;
  int embed_dim = 64;
  double margin = 0.3;
  double scale = 30.0;

  void Validate() const {
    Require(num_classes >= 2, "xvec: need at least 2 classes, got ", num_classes);
    Require(channels > 0 && embed_dim > 0 && num_blocks >= 0, "xvec: bad architecture sizes");
    Require(margin >= 0 && scale > 0, "xvec: bad margin head settings");
  }

  nlohmann::ordered_json ToJson() const;
  static XvecConfig FromJson(const nlohmann::ordered_json &j);
};

/// What a forward pass exposes; all handles live on the caller's tape.
struct XvecOutputs {
  ad::Var features;   // [mel x frames]
  ad::Var embedding;  // [embed_dim x 1], unit L2 norm
  ad::Var cosines;    // [num_classes x 1]
  ad::Var logits;     // scale * cosines (no margin) — inference scores
  ad::Var loss;       // only when a label was given (margin head applied)
};

template <typename S>
class XvecNet {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  explicit XvecNet(const XvecConfig &cfg) : cfg_(cfg), frontend_(cfg.frontend) {
    cfg_.Validate();
    const int c = cfg_.channels;
    const int mel = cfg_.frontend.mel_bins;
    params_.Add("enc.w", c, mel * 5);
    params_.Add("enc.b", c, 1);
    params_.Add("enc.g", c, 1);
    params_.Add("enc.bn", c, 1);
    for (int blk = 0; blk < cfg_.num_blocks; ++blk) {
      std::string p = "blk" + std::to_string(blk) + ".";
      params_.Add(p + "c1.w", c, c * 3);
      params_.Add(p + "c1.b", c, 1);
      params_.Add(p + "n1.g", c, 1);
      params_.Add(p + "n1.b", c, 1);
      params_.Add(p + "c2.w", c, c * 3);
      params_.Add(p + "c2.b", c, 1);
      params_.Add(p + "n2.g", c, 1);
      params_.Add(p + "n2.b", c, 1);
    }
    params_.Add("emb.w", cfg_.embed_dim, 2 * c);
    params_.Add("emb.b", cfg_.embed_dim, 1);
    params_.Add("head.w", cfg_.num_classes, cfg_.embed_dim);
  }

  void InitParams(Rng *rng) {
    const int mel = cfg_.frontend.mel_bins;
    const int c = cfg_.channels;
    nn::InitUniformFanIn(&params_.Get("enc.w"), mel * 5, rng);
    nn::InitUniformFanIn(&params_.Get("enc.b"), mel * 5, rng);
    params_.Get("enc.g").setOnes();
    params_.Get("enc.bn").setZero();
    for (int blk = 0; blk < cfg_.num_blocks; ++blk) {
      std::string p = "blk" + std::to_string(blk) + ".";
      nn::InitUniformFanIn(&params_.Get(p + "c1.w"), c * 3, rng);
      nn::InitUniformFanIn(&params_.Get(p + "c1.b"), c * 3, rng);
      nn::InitUniformFanIn(&params_.Get(p + "c2.w"), c * 3, rng);
      nn::InitUniformFanIn(&params_.Get(p + "c2.b"), c * 3, rng);
      params_.Get(p + "n1.g").setOnes();
      params_.Get(p + "n1.b").setZero();
      params_.Get(p + "n2.g").setOnes();
      params_.Get(p + "n2.b").setZero();
    }
    nn::InitUniformFanIn(&params_.Get("emb.w"), 2 * c, rng);
    nn::InitUniformFanIn(&params_.Get("emb.b"), 2 * c, rng);
    nn::InitUniformFanIn(&params_.Get("head.w"), cfg_.embed_dim, rng);
  }

  const XvecConfig &config() const { return cfg_; }
  nn::ParamStore<S> &params() { return params_; }
  const nn::ParamStore<S> &params() const { return params_; }
  const Frontend<S> &frontend() const { return frontend_; }

  /// Builds the forward graph. wave is a [1 x T] node on *t. leaves must
  /// come from nn::MakeLeaves over params() (any requires_grad setting).
  /// label < 0 skips the margin head and loss.
  XvecOutputs Forward(ad::Tape<S> *t, const std::vector<ad::Var> &leaves, ad::Var wave,
                      int label) const {
    Require(leaves.size() == params_.size(), "xvec: leaf count mismatch");
    auto P = [&](const char *name) { return leaves[params_.IndexOf(name)]; };
    auto PS = [&](const std::string &name) { return leaves[params_.IndexOf(name)]; };

    XvecOutputs out;
    out.features = frontend_.Apply(t, wave);

    ad::ConvGeom g5;
    g5.kernel = 5;
    g5.pad_left = 2;
    g5.pad_right = 2;
    ad::Var h = t->AddColVec(t->MatMul(P("enc.w"), t->Im2Col(out.features, g5)), P("enc.b"));
    h = t->Relu(t->GlobalLayerNorm(h, P("enc.g"), P("enc.bn"), S(1e-6)));

    ad::ConvGeom g3;
    g3.kernel = 3;
    g3.pad_left = 1;
    g3.pad_right = 1;
    for (int blk = 0; blk < cfg_.num_blocks; ++blk) {
      std::string p = "blk" + std::to_string(blk) + ".";
      ad::Var z = t->AddColVec(t->MatMul(PS(p + "c1.w"), t->Im2Col(h, g3)), PS(p + "c1.b"));
      z = t->Relu(t->GlobalLayerNorm(z, PS(p + "n1.g"), PS(p + "n1.b"), S(1e-6)));
      z = t->AddColVec(t->MatMul(PS(p + "c2.w"), t->Im2Col(z, g3)), PS(p + "c2.b"));
      z = t->GlobalLayerNorm(z, PS(p + "n2.g"), PS(p + "n2.b"), S(1e-6));
      h = t->Relu(t->Add(h, z));
    }

    ad::Var pooled = t->RowMeanStd(h, S(1e-6));  // [2C x 1]
    ad::Var emb = t->AddColVec(t->MatMul(P("emb.w"), pooled), P("emb.b"));
    out.embedding = t->L2NormalizeFlat(emb, S(1e-12));
    ad::Var wn = t->L2NormalizeRows(P("head.w"), S(1e-12));
    out.cosines = t->MatMul(wn, out.embedding);
    out.logits = t->Scale(out.cosines, static_cast<S>(cfg_.scale));
    if (label >= 0) {
      ad::Var adjusted = t->AamAdjust(out.cosines, label, static_cast<S>(cfg_.margin),
                                      static_cast<S>(cfg_.scale));
      out.loss = t->SoftmaxCrossEntropy(adjusted, label);
    }
    return out;
  }

  /// Value-only embedding/score pass (no gradients).
  XvecOutputs Infer(ad::Tape<S> *t, const Waveform &x) const {
    Mat wv(1, x.size());
    wv.row(0) = x.samples.template cast<S>().transpose();
    ad::Var wave = t->Leaf(wv, false);
    auto leaves = nn::MakeLeaves(t, params_, false);
    return Forward(t, leaves, wave, -1);
  }

 private:
  XvecConfig cfg_;
  nn::ParamStore<S> params_;
  Frontend<S> frontend_;
};

/// Copies parameters across scalar types (float pipeline, double for tests).
template <typename To, typename From>
void CastParams(const nn::ParamStore<From> &src, nn::ParamStore<To> *dst) {
  Require(dst->size() == src.size(), "CastParams: store layout mismatch");
  for (size_t i = 0; i < src.size(); ++i) {
    Require(dst->NameAt(i) == src.NameAt(i), "CastParams: name mismatch at ", i);
    dst->At(i) = src.At(i).template cast<To>();
  }
}

nlohmann::ordered_json FrontendConfigToJson(const FrontendConfig &c);
FrontendConfig FrontendConfigFromJson(const nlohmann::ordered_json &j);

}  // namespace advsig

#endif  // ADVSIG_XVEC_HPP
