// src/advest.cpp

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

#include "advsig/advest.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "advsig/jsonio.hpp"

namespace advsig {

// ---- multi-resolution spectral loss ------------------------------------

namespace {
constexpr float kLogFloor = 1e-7f;
}

std::vector<StftResolution> DefaultStftResolutions() {
  return {{1024, 256}, {2048, 512}, {512, 128}};
}

MultiResStft::MultiResStft(std::vector<StftResolution> resolutions) {
  Require(!resolutions.empty(), "stft loss: no resolutions");
  for (const StftResolution &res : resolutions) {
    Require(res.fft_size >= 2 && res.hop >= 1 && res.hop <= res.fft_size,
            "stft loss: bad resolution ", res.fft_size, "/", res.hop);
    Basis basis;
    basis.res = res;
    const int bins = res.fft_size / 2 + 1;
    const int n = res.fft_size;
    basis.dft_re.resize(bins, n);
    basis.dft_im.resize(bins, n);
    for (int j = 0; j < n; ++j) {
      double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * j / (n - 1));
      for (int k = 0; k < bins; ++k) {
        double arg = 2.0 * M_PI * k * j / n;
        basis.dft_re(k, j) = static_cast<float>(std::cos(arg) * w);
        basis.dft_im(k, j) = static_cast<float>(-std::sin(arg) * w);
      }
    }
    bases_.push_back(std::move(basis));
  }
}

ad::Var MultiResStft::Magnitude(ad::Tape<float> *t, ad::Var wave, const Basis &basis) const {
  ad::ConvGeom g;
  g.kernel = basis.res.fft_size;
  g.stride = basis.res.hop;
  ad::Var cols = t->Im2Col(wave, g);
  ad::Var re = t->MatMul(t->Leaf(basis.dft_re, false), cols);
  ad::Var im = t->MatMul(t->Leaf(basis.dft_im, false), cols);
  return t->SqrtEps(t->Add(t->Square(re), t->Square(im)), 0.0f);
}

ad::Var MultiResStft::Loss(ad::Tape<float> *t, ad::Var pred, ad::Var target,
                           StftLossParts *parts) const {
  Require(t->Value(pred).rows() == 1 && t->Value(target).rows() == 1,
          "stft loss: inputs must be 1 x T");
  Require(t->Value(pred).cols() == t->Value(target).cols(), "stft loss: length mismatch");
  for (const Basis &b : bases_)
    Require(t->Value(pred).cols() >= b.res.fft_size, "stft loss: signal shorter than a ",
            b.res.fft_size, "-point window");
  if (parts) *parts = StftLossParts{};

  ad::Var total;
  const float inv = 1.0f / static_cast<float>(bases_.size());
  for (const Basis &basis : bases_) {
    ad::Var mp = Magnitude(t, pred, basis);
    ad::Var mg = Magnitude(t, target, basis);
    ad::Var diff = t->Sub(mg, mp);
    ad::Var num = t->SqrtEps(t->Sum(t->Square(diff)), 0.0f);
    ad::Var den = t->SqrtEps(t->Sum(t->Square(mg)), 0.0f);
    ad::Var sc = t->CDiv(num, den);
    ad::Var lm = t->Mean(t->Abs(t->Sub(t->LogEps(mg, kLogFloor), t->LogEps(mp, kLogFloor))));
    ad::Var term = t->Add(sc, lm);
    total = total.valid() ? t->Add(total, term) : term;
    if (parts) {
      parts->convergence += static_cast<double>(t->ScalarValue(sc)) / bases_.size();
      parts->log_mag += static_cast<double>(t->ScalarValue(lm)) / bases_.size();
    }
  }
  return t->Scale(total, inv);
}

double MultiResStft::Eval(const Waveform &pred, const Waveform &target,
                          StftLossParts *parts) const {
  ValidateWaveform(pred, "stft loss pred");
  ValidateWaveform(target, "stft loss target");
  ad::Tape<float> tape;
  Eigen::MatrixXf p(1, pred.size()), g(1, target.size());
  p.row(0) = pred.samples.transpose();
  g.row(0) = target.samples.transpose();
  ad::Var loss = Loss(&tape, tape.Leaf(p, false), tape.Leaf(g, false), parts);
  return static_cast<double>(tape.ScalarValue(loss));
}

// ---- config ------------------------------------------------------------

void AdvEstConfig::Validate() const {
  Require(enc_kernel >= 1 && enc_stride >= 1 && enc_stride <= enc_kernel,
          "advest config: bad encoder geometry");
  Require(enc_channels >= 1 && bottleneck >= 1 && hidden >= 1, "advest config: bad widths");
  Require(tcn_blocks >= 1, "advest config: need at least one conv block");
  Require(tcn_kernel >= 1 && tcn_kernel % 2 == 1, "advest config: tcn kernel must be odd");
  Require(d_layers >= 1 && d_channels >= 1, "advest config: bad discriminator shape");
  Require(d_kernel >= 1 && d_kernel % 2 == 1, "advest config: d kernel must be odd");
}

nlohmann::ordered_json AdvEstConfig::ToJson() const {
  Json j;
  j["enc_kernel"] = enc_kernel;
  j["enc_stride"] = enc_stride;
  j["enc_channels"] = enc_channels;
  j["bottleneck"] = bottleneck;
  j["hidden"] = hidden;
  j["tcn_blocks"] = tcn_blocks;
  j["tcn_kernel"] = tcn_kernel;
  j["mask_bias"] = mask_bias;
  j["d_layers"] = d_layers;
  j["d_channels"] = d_channels;
  j["d_kernel"] = d_kernel;
  j["d_sigmoid"] = d_sigmoid;
  return j;
}

AdvEstConfig AdvEstConfig::FromJson(const nlohmann::ordered_json &j) {
  AdvEstConfig c;
  c.enc_kernel = j.at("enc_kernel").get<int>();
  c.enc_stride = j.at("enc_stride").get<int>();
  c.enc_channels = j.at("enc_channels").get<int>();
  c.bottleneck = j.at("bottleneck").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.tcn_blocks = j.at("tcn_blocks").get<int>();
  c.tcn_kernel = j.at("tcn_kernel").get<int>();
  c.mask_bias = j.at("mask_bias").get<double>();
  c.d_layers = j.at("d_layers").get<int>();
  c.d_channels = j.at("d_channels").get<int>();
  c.d_kernel = j.at("d_kernel").get<int>();
  c.d_sigmoid = j.at("d_sigmoid").get<bool>();
  c.Validate();
  return c;
}

// ---- generator ---------------------------------------------------------

GeneratorNet::GeneratorNet(const AdvEstConfig &cfg) : cfg_(cfg) {
  cfg_.Validate();
  const int n = cfg_.enc_channels, b = cfg_.bottleneck, h = cfg_.hidden;
  params_.Add("enc.w", n, cfg_.enc_kernel);
  params_.Add("enc.b", n, 1);
  params_.Add("bn.w", b, n);
  params_.Add("bn.b", b, 1);
  for (int i = 0; i < cfg_.tcn_blocks; ++i) {
    std::string p = "tcn" + std::to_string(i) + ".";
    params_.Add(p + "in.w", h, b);
    params_.Add(p + "in.b", h, 1);
    params_.Add(p + "in.a", h, 1);
    params_.Add(p + "in.g", h, 1);
    params_.Add(p + "in.bn", h, 1);
    params_.Add(p + "dw.w", h, cfg_.tcn_kernel);
    params_.Add(p + "dw.b", h, 1);
    params_.Add(p + "dw.a", h, 1);
    params_.Add(p + "dw.g", h, 1);
    params_.Add(p + "dw.bn", h, 1);
    params_.Add(p + "out.w", b, h);
    params_.Add(p + "out.b", b, 1);
  }
  params_.Add("mask.w", n, b);
  params_.Add("mask.b", n, 1);
  params_.Add("dec.w", cfg_.enc_kernel, n);
  params_.Add("dec.b", 1, 1);
}

void GeneratorNet::InitParams(Rng *rng) {
  const int n = cfg_.enc_channels, b = cfg_.bottleneck, h = cfg_.hidden;
  nn::InitUniformFanIn(&params_.Get("enc.w"), cfg_.enc_kernel, rng);
  nn::InitUniformFanIn(&params_.Get("enc.b"), cfg_.enc_kernel, rng);
  nn::InitUniformFanIn(&params_.Get("bn.w"), n, rng);
  nn::InitUniformFanIn(&params_.Get("bn.b"), n, rng);
  for (int i = 0; i < cfg_.tcn_blocks; ++i) {
    std::string p = "tcn" + std::to_string(i) + ".";
    nn::InitUniformFanIn(&params_.Get(p + "in.w"), b, rng);
    nn::InitUniformFanIn(&params_.Get(p + "in.b"), b, rng);
    nn::InitConstant(&params_.Get(p + "in.a"), 0.25f);
    params_.Get(p + "in.g").setOnes();
    params_.Get(p + "in.bn").setZero();
    nn::InitUniformFanIn(&params_.Get(p + "dw.w"), cfg_.tcn_kernel, rng);
    nn::InitUniformFanIn(&params_.Get(p + "dw.b"), cfg_.tcn_kernel, rng);
    nn::InitConstant(&params_.Get(p + "dw.a"), 0.25f);
    params_.Get(p + "dw.g").setOnes();
    params_.Get(p + "dw.bn").setZero();
    nn::InitUniformFanIn(&params_.Get(p + "out.w"), h, rng);
    nn::InitUniformFanIn(&params_.Get(p + "out.b"), h, rng);
  }
  nn::InitUniformFanIn(&params_.Get("mask.w"), b, rng);
  nn::InitConstant(&params_.Get("mask.b"), static_cast<float>(cfg_.mask_bias));
  nn::InitUniformFanIn(&params_.Get("dec.w"), n, rng);
  params_.Get("dec.b").setZero();

  // The filterbank starts as a scaled orthonormal transform pair, so with
  // the mask near its bias the generator opens at pass-through. A random
  // filterbank has no phase anchor: the spectral loss is magnitude-only and
  // leaves the waveform uncorrelated with the target.
  const int k = cfg_.enc_kernel;
  const int lead = std::min(n, k);
  Eigen::MatrixXf basis(lead, k);
  for (int c = 0; c < lead; ++c)
    for (int i = 0; i < k; ++i)
      basis(c, i) = static_cast<float>(std::sqrt((c == 0 ? 1.0 : 2.0) / k) *
                                       std::cos(M_PI * (i + 0.5) * c / k));
  const float coverage = static_cast<float>(k) / static_cast<float>(cfg_.enc_stride);
  const float mask0 = static_cast<float>(1.0 / (1.0 + std::exp(-cfg_.mask_bias)));
  Eigen::MatrixXf &ew = params_.Get("enc.w");
  Eigen::MatrixXf &dw = params_.Get("dec.w");
  ew *= 0.1f;
  dw *= 0.1f;
  ew.topRows(lead) = basis;
  dw.leftCols(lead) = basis.transpose() / (coverage * mask0);
  params_.Get("enc.b").setZero();
}

ad::Var GeneratorNet::Forward(ad::Tape<float> *t, const std::vector<ad::Var> &leaves,
                              ad::Var wave) const {
  Require(leaves.size() == params_.size(), "generator: leaf count mismatch");
  Require(t->Value(wave).rows() == 1, "generator: input must be 1 x T");
  const int T = static_cast<int>(t->Value(wave).cols());
  const int k = cfg_.enc_kernel, s = cfg_.enc_stride;
  Require(T >= k, "generator: input shorter than the encoder kernel");
  auto P = [&](const std::string &name) { return leaves[params_.IndexOf(name)]; };

  const int frames = (T - k + s - 1) / s + 1;
  ad::ConvGeom g;
  g.kernel = k;
  g.stride = s;
  g.pad_right = (frames - 1) * s + k - T;

  ad::Var cols = t->Im2Col(wave, g);
  ad::Var enc = t->AddColVec(t->MatMul(P("enc.w"), cols), P("enc.b"));
  ad::Var z = t->AddColVec(t->MatMul(P("bn.w"), enc), P("bn.b"));
  for (int i = 0; i < cfg_.tcn_blocks; ++i) {
    std::string p = "tcn" + std::to_string(i) + ".";
    ad::Var h = t->AddColVec(t->MatMul(P(p + "in.w"), z), P(p + "in.b"));
    h = t->PRelu(h, P(p + "in.a"));
    h = t->GlobalLayerNorm(h, P(p + "in.g"), P(p + "in.bn"), 1e-6f);
    ad::ConvGeom dg;
    dg.kernel = cfg_.tcn_kernel;
    dg.dilation = 1 << i;
    dg.pad_left = dg.pad_right = dg.dilation * (cfg_.tcn_kernel - 1) / 2;
    h = t->AddColVec(t->DepthwiseConv(h, P(p + "dw.w"), dg), P(p + "dw.b"));
    h = t->PRelu(h, P(p + "dw.a"));
    h = t->GlobalLayerNorm(h, P(p + "dw.g"), P(p + "dw.bn"), 1e-6f);
    ad::Var o = t->AddColVec(t->MatMul(P(p + "out.w"), h), P(p + "out.b"));
    z = t->Add(z, o);
  }
  ad::Var mask = t->Sigmoid(t->AddColVec(t->MatMul(P("mask.w"), z), P("mask.b")));
  ad::Var masked = t->CMul(enc, mask);
  ad::Var frags = t->MatMul(P("dec.w"), masked);
  ad::Var out = t->Col2Im(frags, g, 1, T);
  return t->AddColVec(out, P("dec.b"));
}

Waveform GeneratorNet::Run(const Waveform &x) const {
  ValidateWaveform(x, "generator input");
  ad::Tape<float> tape;
  Eigen::MatrixXf wv(1, x.size());
  wv.row(0) = x.samples.transpose();
  auto leaves = nn::MakeLeaves(&tape, params_, false);
  ad::Var out = Forward(&tape, leaves, tape.Leaf(wv, false));
  Waveform y;
  y.sample_rate = x.sample_rate;
  y.samples = tape.Value(out).row(0).transpose();
  return y;
}

void GeneratorNet::Save(const std::string &path) const {
  nn::SaveCheckpoint(path, "advest_g", cfg_.ToJson(), params_);
}

GeneratorNet GeneratorNet::Load(const std::string &path) {
  nn::ParamStore<float> loaded;
  Json cfg_json = nn::LoadCheckpoint(path, "advest_g", &loaded);
  GeneratorNet net(AdvEstConfig::FromJson(cfg_json));
  Require(loaded.size() == net.params_.size(), "checkpoint '", path,
          "': parameter count mismatch");
  CastParams<float, float>(loaded, &net.params_);
  return net;
}

// ---- discriminator -----------------------------------------------------

DiscriminatorNet::DiscriminatorNet(const AdvEstConfig &cfg) : cfg_(cfg) {
  cfg_.Validate();
  int cin = 1;
  for (int i = 0; i < cfg_.d_layers; ++i) {
    std::string p = "lyr" + std::to_string(i) + ".";
    params_.Add(p + "w", cfg_.d_channels, cin * cfg_.d_kernel);
    params_.Add(p + "b", cfg_.d_channels, 1);
    cin = cfg_.d_channels;
  }
  params_.Add("out.w", 1, cfg_.d_channels);
  params_.Add("out.b", 1, 1);
}

void DiscriminatorNet::InitParams(Rng *rng) {
  int cin = 1;
  for (int i = 0; i < cfg_.d_layers; ++i) {
    std::string p = "lyr" + std::to_string(i) + ".";
    nn::InitUniformFanIn(&params_.Get(p + "w"), cin * cfg_.d_kernel, rng);
    nn::InitUniformFanIn(&params_.Get(p + "b"), cin * cfg_.d_kernel, rng);
    cin = cfg_.d_channels;
  }
  nn::InitUniformFanIn(&params_.Get("out.w"), cfg_.d_channels, rng);
  nn::InitUniformFanIn(&params_.Get("out.b"), cfg_.d_channels, rng);
}

ad::Var DiscriminatorNet::Forward(ad::Tape<float> *t, const std::vector<ad::Var> &leaves,
                                  ad::Var wave) const {
  Require(leaves.size() == params_.size(), "discriminator: leaf count mismatch");
  Require(t->Value(wave).rows() == 1, "discriminator: input must be 1 x T");
  auto P = [&](const std::string &name) { return leaves[params_.IndexOf(name)]; };

  ad::Var cur = wave;
  for (int i = 0; i < cfg_.d_layers; ++i) {
    std::string p = "lyr" + std::to_string(i) + ".";
    ad::ConvGeom g;
    g.kernel = cfg_.d_kernel;
    g.dilation = i + 1;
    g.pad_left = g.pad_right = g.dilation * (cfg_.d_kernel - 1) / 2;
    ad::Var cols = t->Im2Col(cur, g);
    cur = t->AddColVec(t->MatMul(P(p + "w"), cols), P(p + "b"));
    cur = t->LeakyRelu(cur, 0.2f);
  }
  ad::Var score = t->Mean(t->AddColVec(t->MatMul(P("out.w"), cur), P("out.b")));
  if (cfg_.d_sigmoid) score = t->Sigmoid(score);
  return score;
}

void DiscriminatorNet::Save(const std::string &path) const {
  nn::SaveCheckpoint(path, "advest_d", cfg_.ToJson(), params_);
}

DiscriminatorNet DiscriminatorNet::Load(const std::string &path) {
  nn::ParamStore<float> loaded;
  Json cfg_json = nn::LoadCheckpoint(path, "advest_d", &loaded);
  DiscriminatorNet net(AdvEstConfig::FromJson(cfg_json));
  Require(loaded.size() == net.params_.size(), "checkpoint '", path,
          "': parameter count mismatch");
  CastParams<float, float>(loaded, &net.params_);
  return net;
}

Waveform EstimatePerturbation(const GeneratorNet &gen, const Waveform &attacked) {
  Waveform cleaned = gen.Run(attacked);
  Waveform delta;
  delta.sample_rate = attacked.sample_rate;
  delta.samples = attacked.samples - cleaned.samples;
  return delta;
}

// ---- training ----------------------------------------------------------

namespace {

struct TrainPair {
  Eigen::VectorXf attacked, benign;
};

Eigen::MatrixXf SegmentRow(const Eigen::VectorXf &v, int start, int len) {
  Eigen::MatrixXf m(1, len);
  m.row(0) = v.segment(start, len).transpose();
  return m;
}

}  // namespace

AdvEstTrainStats TrainAdvEst(GeneratorNet *gen, DiscriminatorNet *dsc, const AttackDb &db,
                             const AdvEstTrainOpts &opts, uint64_t seed) {
  Require(opts.cycles > 0 && opts.batch > 0, "advest training: bad schedule");
  Require(opts.lr_g > 0 && opts.lr_d > 0 && opts.lr_end > 0, "advest training: bad rates");
  MultiResStft stft(DefaultStftResolutions());
  for (const StftResolution &r : DefaultStftResolutions())
    Require(opts.segment >= r.fft_size, "advest training: segment ", opts.segment,
            " shorter than a ", r.fft_size, "-point window");

  std::vector<TrainPair> pairs;
  for (const AttackRecord &rec : db.records) {
    if (std::find(opts.exclude_labels.begin(), opts.exclude_labels.end(), rec.label) !=
        opts.exclude_labels.end())
      continue;
    Waveform adv = LoadRecordAdv(db, rec);
    Waveform ben = LoadRecordBenign(db, rec);
    Require(adv.size() == ben.size(), "advest training: length mismatch in ", rec.record_id);
    Require(adv.size() >= opts.segment, "advest training: record ", rec.record_id,
            " shorter than the training segment");
    pairs.push_back({adv.samples, ben.samples});
  }
  Require(!pairs.empty(), "advest training: no usable records");

  Rng init_rng(DeriveSeed(seed, "init"));
  gen->InitParams(&init_rng);
  dsc->InitParams(&init_rng);

  nn::AdamConfig acfg;
  acfg.beta1 = 0.5;  // the usual damped first moment for adversarial training
  acfg.lr = opts.lr_g;
  nn::Adam<float> adam_g(&gen->params(), acfg);
  acfg.lr = opts.lr_d;
  nn::Adam<float> adam_d(&dsc->params(), acfg);

  Rng rng(DeriveSeed(seed, "batch"));
  std::unique_ptr<JsonlWriter> log;
  if (!opts.log_path.empty()) log = std::make_unique<JsonlWriter>(opts.log_path);

  auto draw = [&](ad::Tape<float> *tape, ad::Var *xp, ad::Var *xb) {
    const TrainPair &pr = pairs[rng.UniformInt(0, static_cast<int>(pairs.size()) - 1)];
    int start = static_cast<int>(
        rng.UniformInt(0, static_cast<int>(pr.attacked.size()) - opts.segment));
    *xp = tape->Leaf(SegmentRow(pr.attacked, start, opts.segment), false);
    *xb = tape->Leaf(SegmentRow(pr.benign, start, opts.segment), false);
  };

  AdvEstTrainStats stats;
  double last_sup = 0.0;
  for (int cycle = 0; cycle < opts.cycles; ++cycle) {
    const double frac = opts.cycles > 1 ? static_cast<double>(cycle) / (opts.cycles - 1) : 0.0;
    const double lr_g = opts.lr_g + (opts.lr_end - opts.lr_g) * frac;
    const double lr_d = opts.lr_d + (opts.lr_end - opts.lr_d) * frac;

    for (int sub = 0; sub < 2; ++sub) {
      ad::Tape<float> tape;
      auto gl = nn::MakeLeaves(&tape, gen->params(), true);
      auto dl = nn::MakeLeaves(&tape, dsc->params(), false);
      std::vector<ad::Var> reals, fakes, sups;
      for (int b = 0; b < opts.batch; ++b) {
        ad::Var xp, xb;
        draw(&tape, &xp, &xb);
        ad::Var xhat = gen->Forward(&tape, gl, xp);
        fakes.push_back(dsc->Forward(&tape, dl, xhat));
        reals.push_back(dsc->Forward(&tape, dl, xb));  // frozen: no gradient flows here
        sups.push_back(stft.Loss(&tape, xhat, xb));
      }
      ad::Var pair_loss = tape.DclLoss(tape.StackScalars(reals), tape.StackScalars(fakes));
      ad::Var sup = tape.Mean(tape.StackScalars(sups));
      ad::Var loss =
          tape.Add(pair_loss, tape.Scale(sup, static_cast<float>(opts.lambda_sup)));
      tape.Backward(loss);
      adam_g.Step(nn::CollectGrads(&tape, gl), lr_g);
      ++stats.steps_g;
      stats.final_g_loss = static_cast<double>(tape.ScalarValue(loss));
      last_sup = static_cast<double>(tape.ScalarValue(sup));
      stats.sup_history.push_back(last_sup);
      Require(std::isfinite(stats.final_g_loss), "advest training: generator loss diverged at cycle ",
              cycle);
    }

    {
      ad::Tape<float> tape;
      auto gl = nn::MakeLeaves(&tape, gen->params(), false);  // frozen generator
      auto dl = nn::MakeLeaves(&tape, dsc->params(), true);
      std::vector<ad::Var> reals, fakes;
      for (int b = 0; b < opts.batch; ++b) {
        ad::Var xp, xb;
        draw(&tape, &xp, &xb);
        ad::Var xhat = gen->Forward(&tape, gl, xp);
        fakes.push_back(dsc->Forward(&tape, dl, xhat));
        reals.push_back(dsc->Forward(&tape, dl, xb));
      }
      ad::Var pair_loss = tape.DclLoss(tape.StackScalars(reals), tape.StackScalars(fakes));
      ad::Var loss = tape.Scale(pair_loss, -1.0f);  // the discriminator ascends
      tape.Backward(loss);
      adam_d.Step(nn::CollectGrads(&tape, dl), lr_d);
      ++stats.steps_d;
      stats.final_d_loss = static_cast<double>(tape.ScalarValue(pair_loss));
      Require(std::isfinite(stats.final_d_loss),
              "advest training: discriminator loss diverged at cycle ", cycle);
    }

    if (log) {
      Json row;
      row["cycle"] = cycle;
      row["g_loss"] = stats.final_g_loss;
      row["sup_loss"] = last_sup;
      row["d_loss"] = stats.final_d_loss;
      row["lr_g"] = lr_g;
      row["lr_d"] = lr_d;
      log->Write(row);
    }
  }
  return stats;
}

}  // namespace advsig
