// ffsv/embed_net.hpp

// Copyright 2026  FFSV Toolkit Contributors

// See COPYING for clarification regarding multiple authors
//
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

#ifndef FFSV_EMBED_NET_HPP_
#define FFSV_EMBED_NET_HPP_

#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ffsv/common.hpp"
#include "ffsv/features.hpp"
#include "ffsv/nn.hpp"
#include "ffsv/tensor.hpp"

namespace ffsv {

enum class NetVariant { kResnet34, kResnet50 };

// Architecture description.  width_num/width_den scale the channel counts
// (1/1 is the reference scale); smaller widths let tests train in seconds
// while keeping the reference shapes documented and checkable.
struct NetworkConfig {
  NetVariant variant = NetVariant::kResnet34;
  uint32_t width_num = 1;
  uint32_t width_den = 1;
  std::array<int, 4> block_counts = {3, 4, 6, 3};
  int embedding_dim = 128;
  int n_classes = 2;
  Pooling pooling = Pooling::kMeanStd;
  int input_dim = 64;

  static NetworkConfig Resnet34(int n_classes) {
    NetworkConfig c;
    c.variant = NetVariant::kResnet34;
    c.block_counts = {3, 4, 6, 3};
    c.embedding_dim = 128;
    c.pooling = Pooling::kMeanStd;
    c.input_dim = 64;
    c.n_classes = n_classes;
    return c;
  }

  static NetworkConfig Resnet50(int n_classes) {
    NetworkConfig c;
    c.variant = NetVariant::kResnet50;
    c.block_counts = {3, 4, 6, 5};
    c.embedding_dim = 1024;
    c.pooling = Pooling::kMean;
    c.input_dim = 30;
    c.n_classes = n_classes;
    return c;
  }

  int BaseChannels() const { return variant == NetVariant::kResnet34 ? 32 : 64; }

  int ScaledChannels(int reference) const {
    const double c = static_cast<double>(reference) * width_num / width_den;
    return std::max(1, static_cast<int>(std::llround(c)));
  }

  int MinLength() const { return variant == NetVariant::kResnet34 ? 8 : 16; }
};

namespace net_internal {

class ResBlock {
 public:
  virtual ~ResBlock() = default;
  virtual Tensor Forward(const Tensor &x, Mode mode) = 0;
  virtual Tensor Backward(const Tensor &dy) = 0;
  virtual void Init(Rng *rng) = 0;
  virtual void CollectParams(std::vector<ParamRef> *out) = 0;
  virtual void HashActivationSigns(uint64_t *h) const = 0;
};

// Two 3x3 convolutions; 1x1 shortcut convolution when the shape changes.
class BasicBlock : public ResBlock {
 public:
  BasicBlock(const std::string &name, int in_ch, int out_ch, int stride)
      : conv1_(name + ".conv1", in_ch, out_ch, 3, stride),
        bn1_(name + ".bn1", out_ch),
        conv2_(name + ".conv2", out_ch, out_ch, 3, 1),
        bn2_(name + ".bn2", out_ch) {
    if (stride != 1 || in_ch != out_ch) {
      shortcut_ = std::make_unique<Conv2d>(name + ".shortcut", in_ch, out_ch, 1, stride);
      shortcut_bn_ = std::make_unique<BatchNorm2d>(name + ".shortcut_bn", out_ch);
    }
  }

  Tensor Forward(const Tensor &x, Mode mode) override {
    Tensor y = relu1_.Forward(bn1_.Forward(conv1_.Forward(x), mode));
    y = bn2_.Forward(conv2_.Forward(y), mode);
    Tensor skip = shortcut_ ? shortcut_bn_->Forward(shortcut_->Forward(x), mode) : x;
    for (size_t i = 0; i < y.data.size(); i++) y.data[i] += skip.data[i];
    return relu2_.Forward(y);
  }

  Tensor Backward(const Tensor &dy) override {
    Tensor d = relu2_.Backward(dy);
    Tensor dskip = shortcut_ ? shortcut_->Backward(shortcut_bn_->Backward(d)) : d;
    Tensor dmain = conv1_.Backward(bn1_.Backward(relu1_.Backward(
        conv2_.Backward(bn2_.Backward(d)))));
    for (size_t i = 0; i < dmain.data.size(); i++) dmain.data[i] += dskip.data[i];
    return dmain;
  }

  void Init(Rng *rng) override {
    conv1_.Init(rng);
    conv2_.Init(rng);
    if (shortcut_) shortcut_->Init(rng);
  }

  void CollectParams(std::vector<ParamRef> *out) override {
    conv1_.CollectParams(out);
    bn1_.CollectParams(out);
    conv2_.CollectParams(out);
    bn2_.CollectParams(out);
    if (shortcut_) {
      shortcut_->CollectParams(out);
      shortcut_bn_->CollectParams(out);
    }
  }

  void HashActivationSigns(uint64_t *h) const override {
    relu1_.HashSigns(h);
    relu2_.HashSigns(h);
  }

 private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  Relu relu1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  Relu relu2_;
  std::unique_ptr<Conv2d> shortcut_;
  std::unique_ptr<BatchNorm2d> shortcut_bn_;
};

// 1x1 reduce, 3x3 (carries the stride), 1x1 expand.
class BottleneckBlock : public ResBlock {
 public:
  BottleneckBlock(const std::string &name, int in_ch, int mid_ch, int out_ch,
                  int stride)
      : conv1_(name + ".conv1", in_ch, mid_ch, 1, 1),
        bn1_(name + ".bn1", mid_ch),
        conv2_(name + ".conv2", mid_ch, mid_ch, 3, stride),
        bn2_(name + ".bn2", mid_ch),
        conv3_(name + ".conv3", mid_ch, out_ch, 1, 1),
        bn3_(name + ".bn3", out_ch) {
    if (stride != 1 || in_ch != out_ch) {
      shortcut_ = std::make_unique<Conv2d>(name + ".shortcut", in_ch, out_ch, 1, stride);
      shortcut_bn_ = std::make_unique<BatchNorm2d>(name + ".shortcut_bn", out_ch);
    }
  }

  Tensor Forward(const Tensor &x, Mode mode) override {
    Tensor y = relu1_.Forward(bn1_.Forward(conv1_.Forward(x), mode));
    y = relu2_.Forward(bn2_.Forward(conv2_.Forward(y), mode));
    y = bn3_.Forward(conv3_.Forward(y), mode);
    Tensor skip = shortcut_ ? shortcut_bn_->Forward(shortcut_->Forward(x), mode) : x;
    for (size_t i = 0; i < y.data.size(); i++) y.data[i] += skip.data[i];
    return relu3_.Forward(y);
  }

  Tensor Backward(const Tensor &dy) override {
    Tensor d = relu3_.Backward(dy);
    Tensor dskip = shortcut_ ? shortcut_->Backward(shortcut_bn_->Backward(d)) : d;
    Tensor dmain = conv1_.Backward(bn1_.Backward(relu1_.Backward(
        conv2_.Backward(bn2_.Backward(relu2_.Backward(
            conv3_.Backward(bn3_.Backward(d))))))));
    for (size_t i = 0; i < dmain.data.size(); i++) dmain.data[i] += dskip.data[i];
    return dmain;
  }

  void Init(Rng *rng) override {
    conv1_.Init(rng);
    conv2_.Init(rng);
    conv3_.Init(rng);
    if (shortcut_) shortcut_->Init(rng);
  }

  void CollectParams(std::vector<ParamRef> *out) override {
    conv1_.CollectParams(out);
    bn1_.CollectParams(out);
    conv2_.CollectParams(out);
    bn2_.CollectParams(out);
    conv3_.CollectParams(out);
    bn3_.CollectParams(out);
    if (shortcut_) {
      shortcut_->CollectParams(out);
      shortcut_bn_->CollectParams(out);
    }
  }

  void HashActivationSigns(uint64_t *h) const override {
    relu1_.HashSigns(h);
    relu2_.HashSigns(h);
    relu3_.HashSigns(h);
  }

 private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  Relu relu1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  Relu relu2_;
  Conv2d conv3_;
  BatchNorm2d bn3_;
  Relu relu3_;
  std::unique_ptr<Conv2d> shortcut_;
  std::unique_ptr<BatchNorm2d> shortcut_bn_;
};

}  // namespace net_internal

struct ForwardResult {
  Tensor encoding;   // [N, pooled dim]
  Tensor embedding;  // [N, embedding_dim]
  Tensor logits;     // [N, n_classes]
};

struct StageShape {
  int channels = 0;
  int freq = 0;
  int time = 0;
};

// Front-end pattern extractor (residual stages), statistics-pooling encoder,
// embedding layer and classifier.  The embedding is the pre-classifier
// fully-connected output.
class EmbedNet {
 public:
  explicit EmbedNet(const NetworkConfig &cfg) : cfg_(cfg) { Build(); }

  EmbedNet(const NetworkConfig &cfg, Rng *rng) : cfg_(cfg) {
    Build();
    InitParams(rng);
  }

  const NetworkConfig &config() const { return cfg_; }

  void InitParams(Rng *rng) {
    conv1_->Init(rng);
    for (auto &b : blocks_) b->Init(rng);
    embed_->Init(rng, std::sqrt(1.0 / encoding_dim_));
    // Modest classifier weights keep the initial loss near log(n_classes)
    // while leaving enough signal for gradients to reach the backbone.
    classifier_->Init(rng, std::sqrt(0.5 / cfg_.embedding_dim));
  }

  // x: [N, 1, input_dim, L].  Eval mode uses batch-norm running statistics.
  ForwardResult Forward(const Tensor &x, Mode mode) {
    FFSV_CHECK(x.Rank() == 4 && x.Dim(1) == 1, "input must be [N, 1, F, L]");
    FFSV_CHECK(x.Dim(2) == cfg_.input_dim,
               "feature dim " << x.Dim(2) << " does not match network input dim "
               << cfg_.input_dim);
    FFSV_CHECK(x.Dim(3) >= cfg_.MinLength(),
               "utterance too short: " << x.Dim(3) << " frames < minimum "
               << cfg_.MinLength());

    Tensor y = relu1_.Forward(bn1_->Forward(conv1_->Forward(x), mode));
    stage_shapes_.clear();
    stage_shapes_.push_back({y.Dim(1), y.Dim(2), y.Dim(3)});
    for (size_t i = 0; i < blocks_.size(); i++) {
      y = blocks_[i]->Forward(y, mode);
      if (stage_ends_.count(i))
        stage_shapes_.push_back({y.Dim(1), y.Dim(2), y.Dim(3)});
    }
    ForwardResult r;
    r.encoding = pool_->Forward(y);
    r.embedding = embed_->Forward(r.encoding);
    r.logits = classifier_->Forward(r.embedding);
    return r;
  }

  // Feature-map shapes after the stem and after each residual stage, as seen
  // by the most recent Forward call.
  const std::vector<StageShape> &stage_shapes() const { return stage_shapes_; }

  // Hash of every ReLU sign pattern from the most recent Forward call.
  uint64_t ActivationSignature() const {
    uint64_t h = 14695981039346656037ULL;
    relu1_.HashSigns(&h);
    for (const auto &b : blocks_) b->HashActivationSigns(&h);
    return h;
  }

  // Backpropagates from dlogits through the whole network, accumulating
  // parameter gradients.  Must follow a Forward call.
  Tensor Backward(const Tensor &dlogits) {
    Tensor d = classifier_->Backward(dlogits);
    d = pool_->Backward(embed_->Backward(d));
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it)
      d = (*it)->Backward(d);
    return conv1_->Backward(bn1_->Backward(relu1_.Backward(d)));
  }

  std::vector<ParamRef> Params() {
    std::vector<ParamRef> out;
    conv1_->CollectParams(&out);
    bn1_->CollectParams(&out);
    for (auto &b : blocks_) b->CollectParams(&out);
    embed_->CollectParams(&out);
    classifier_->CollectParams(&out);
    return out;
  }

  void ZeroGrad() {
    for (auto &p : Params())
      if (p.grad) p.grad->SetZero();
  }

  int EncodingDim() const { return encoding_dim_; }

  // Replaces the classifier for a new label set (used when fine-tuning onto
  // a different speaker inventory).
  void ResetClassifier(int n_classes, Rng *rng) {
    cfg_.n_classes = n_classes;
    classifier_ = std::make_unique<Linear>("classifier", cfg_.embedding_dim, n_classes);
    classifier_->Init(rng, std::sqrt(0.5 / cfg_.embedding_dim));
  }

 private:
  void Build() {
    FFSV_CHECK(cfg_.width_num > 0 && cfg_.width_den > 0, "bad width multiplier");
    FFSV_CHECK(cfg_.embedding_dim >= 1 && cfg_.n_classes >= 1, "bad head dims");

    const bool resnet34 = cfg_.variant == NetVariant::kResnet34;
    const int base = cfg_.ScaledChannels(cfg_.BaseChannels());
    conv1_ = std::make_unique<Conv2d>("conv1", 1, base, resnet34 ? 3 : 7,
                                      resnet34 ? 1 : 2);
    bn1_ = std::make_unique<BatchNorm2d>("bn1", base);

    int in_ch = base;
    int final_ch = base;
    for (int stage = 0; stage < 4; stage++) {
      const int ref = cfg_.BaseChannels() << stage;
      const int ch = cfg_.ScaledChannels(ref);
      for (int b = 0; b < cfg_.block_counts[static_cast<size_t>(stage)]; b++) {
        const int stride = (stage > 0 && b == 0) ? 2 : 1;
        const std::string name =
            "layer" + std::to_string(stage + 1) + "." + std::to_string(b);
        if (resnet34) {
          blocks_.push_back(std::make_unique<net_internal::BasicBlock>(
              name, in_ch, ch, stride));
          in_ch = ch;
          final_ch = ch;
        } else {
          const int out_ch = 4 * ch;
          blocks_.push_back(std::make_unique<net_internal::BottleneckBlock>(
              name, in_ch, ch, out_ch, stride));
          in_ch = out_ch;
          final_ch = out_ch;
        }
      }
      stage_ends_.insert(blocks_.size() - 1);
    }

    pool_ = std::make_unique<GlobalStatsPool>(cfg_.pooling);
    encoding_dim_ = pool_->OutputDim(final_ch);
    embed_ = std::make_unique<Linear>("embed", encoding_dim_, cfg_.embedding_dim);
    classifier_ = std::make_unique<Linear>("classifier", cfg_.embedding_dim,
                                           cfg_.n_classes);
  }

  NetworkConfig cfg_;
  std::unique_ptr<Conv2d> conv1_;
  std::unique_ptr<BatchNorm2d> bn1_;
  Relu relu1_;
  std::vector<std::unique_ptr<net_internal::ResBlock>> blocks_;
  std::set<size_t> stage_ends_;
  std::unique_ptr<GlobalStatsPool> pool_;
  std::unique_ptr<Linear> embed_;
  std::unique_ptr<Linear> classifier_;
  int encoding_dim_ = 0;
  std::vector<StageShape> stage_shapes_;
};

// --- training ----------------------------------------------------------------

// Step-decay schedule: lr(e) = initial_lr * decay_factor^floor(e / decay_every).
// decay_every <= 0 means a constant rate.
struct TrainSchedule {
  double initial_lr = 0.1;
  int epochs = 50;
  int decay_every = 20;
  double decay_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;

  double LrAt(int epoch) const {
    if (decay_every <= 0) return initial_lr;
    return initial_lr * std::pow(decay_factor, std::floor(static_cast<double>(epoch) /
                                                          decay_every));
  }
};

struct TrainOptions {
  int batch_size = 16;
  int crop_frames = 300;
  uint64_t seed = 1;
};

struct LabeledDataset {
  std::vector<FeatureMatrix> features;
  std::vector<int> labels;

  size_t Size() const { return features.size(); }
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
};

namespace net_internal {

// Fixed-length crop: random start when the utterance is long enough,
// cyclic tiling otherwise.
inline void FillCrop(const FeatureMatrix &f, int crop, int start, Tensor *x, int row) {
  for (int t = 0; t < crop; t++) {
    const int src = (f.num_frames >= crop) ? start + t : t % f.num_frames;
    for (int d = 0; d < f.dim; d++) x->At4(row, 0, d, t) = f.At(src, d);
  }
}

inline Tensor BatchTensor(const LabeledDataset &data, const std::vector<size_t> &idx,
                          int crop, int input_dim, Rng *rng) {
  Tensor x({static_cast<int>(idx.size()), 1, input_dim, crop});
  for (size_t i = 0; i < idx.size(); i++) {
    const FeatureMatrix &f = data.features[idx[i]];
    FFSV_CHECK(f.dim == input_dim, "feature dim mismatch in training data");
    const int start = (f.num_frames > crop)
                          ? static_cast<int>(rng->Index(f.num_frames - crop + 1))
                          : 0;
    FillCrop(f, crop, start, &x, static_cast<int>(i));
  }
  return x;
}

}  // namespace net_internal

// Minibatch SGD with momentum on cross-entropy over speaker labels.
// Returns the per-epoch (lr, mean loss) log.
inline std::vector<EpochStats> Train(EmbedNet *model, const LabeledDataset &data,
                                     const TrainSchedule &sched,
                                     const TrainOptions &opts = TrainOptions()) {
  FFSV_CHECK(data.Size() > 0, "empty training set");
  FFSV_CHECK(data.features.size() == data.labels.size(), "labels/features mismatch");
  const int n_classes = model->config().n_classes;
  for (int label : data.labels)
    FFSV_CHECK(label >= 0 && label < n_classes,
               "label " << label << " outside [0, " << n_classes << ")");

  Rng rng(opts.seed);
  auto params = model->Params();
  std::vector<Tensor> velocity;
  for (auto &p : params) velocity.emplace_back(p.value->dims);

  std::vector<size_t> order(data.Size());
  for (size_t i = 0; i < order.size(); i++) order[i] = i;

  std::vector<EpochStats> log;
  for (int epoch = 0; epoch < sched.epochs; epoch++) {
    const double lr = sched.LrAt(epoch);
    for (size_t i = order.size(); i > 1; i--)
      std::swap(order[i - 1], order[rng.Index(i)]);

    double loss_sum = 0.0;
    size_t n_seen = 0;
    for (size_t pos = 0; pos < order.size(); pos += opts.batch_size) {
      const size_t stop = std::min(order.size(), pos + opts.batch_size);
      std::vector<size_t> idx(order.begin() + pos, order.begin() + stop);
      std::vector<int> labels;
      for (size_t i : idx) labels.push_back(data.labels[i]);

      Tensor x = net_internal::BatchTensor(data, idx, opts.crop_frames,
                                           model->config().input_dim, &rng);
      model->ZeroGrad();
      ForwardResult out = model->Forward(x, Mode::kTrain);
      Tensor dlogits;
      const double loss = SoftmaxCrossEntropy(out.logits, labels, &dlogits);
      model->Backward(dlogits);

      for (size_t p = 0; p < params.size(); p++) {
        if (!params[p].grad) continue;
        auto &w = params[p].value->data;
        auto &g = params[p].grad->data;
        auto &v = velocity[p].data;
        const double wd = params[p].weight_decay ? sched.weight_decay : 0.0;
        for (size_t j = 0; j < w.size(); j++) {
          v[j] = sched.momentum * v[j] + g[j] + wd * w[j];
          w[j] -= lr * v[j];
        }
      }
      loss_sum += loss * static_cast<double>(idx.size());
      n_seen += idx.size();
    }
    log.push_back({epoch, lr, loss_sum / static_cast<double>(n_seen)});
  }
  return log;
}

// Same loop at a constant learning rate; re-initializes the classifier when
// the label inventory size changes.
inline std::vector<EpochStats> FineTune(EmbedNet *model, const LabeledDataset &data,
                                        double lr, int epochs,
                                        const TrainOptions &opts = TrainOptions()) {
  int max_label = -1;
  for (int label : data.labels) max_label = std::max(max_label, label);
  if (max_label + 1 != model->config().n_classes) {
    Rng rng(opts.seed ^ 0xf1e2d3c4b5a69788ULL);
    model->ResetClassifier(max_label + 1, &rng);
  }
  TrainSchedule sched;
  sched.initial_lr = lr;
  sched.epochs = epochs;
  sched.decay_every = 0;  // constant rate
  return Train(model, data, sched, opts);
}

// Eval-mode forward over the full utterance; returns the embedding-layer
// output (pre-classifier).
inline std::vector<double> ExtractEmbedding(EmbedNet *model, const FeatureMatrix &f) {
  Tensor x({1, 1, f.dim, f.num_frames});
  for (int t = 0; t < f.num_frames; t++)
    for (int d = 0; d < f.dim; d++) x.At4(0, 0, d, t) = f.At(t, d);
  ForwardResult out = model->Forward(x, Mode::kEval);
  return std::vector<double>(out.embedding.data.begin(), out.embedding.data.end());
}

// Compares analytic gradients against central finite differences on a random
// subset of at least n_samples parameters.  Batch norm runs in eval (frozen
// statistics) mode so the loss is a deterministic function of the
// parameters.  Probes whose perturbation flips a ReLU sign are discarded and
// redrawn: across a kink the central difference does not estimate the
// derivative.  Returns the maximum guarded relative error,
// |a - f| / max(|a| + |f|, 1e-3).
inline double GradCheck(EmbedNet *model, const Tensor &x,
                        const std::vector<int> &labels, double epsilon = 1e-4,
                        int n_samples = 200, uint64_t seed = 7) {
  auto params = model->Params();

  model->ZeroGrad();
  ForwardResult out = model->Forward(x, Mode::kEval);
  Tensor dlogits;
  SoftmaxCrossEntropy(out.logits, labels, &dlogits);
  model->Backward(dlogits);

  std::vector<Tensor> analytic;
  std::vector<size_t> trainable;
  for (size_t p = 0; p < params.size(); p++) {
    if (!params[p].grad) continue;
    trainable.push_back(p);
    analytic.push_back(*params[p].grad);
  }

  auto loss_at = [&](uint64_t *signature) {
    ForwardResult r = model->Forward(x, Mode::kEval);
    *signature = model->ActivationSignature();
    return SoftmaxCrossEntropy(r.logits, labels, nullptr);
  };

  Rng rng(seed);
  double max_rel = 0.0;
  int valid = 0;
  for (int attempt = 0; valid < n_samples && attempt < 50 * n_samples; attempt++) {
    const size_t ti = static_cast<size_t>(rng.Index(trainable.size()));
    const size_t p = trainable[ti];
    auto &w = params[p].value->data;
    const size_t j = static_cast<size_t>(rng.Index(w.size()));

    const double saved = w[j];
    uint64_t sig_plus = 0, sig_minus = 0;
    w[j] = saved + epsilon;
    const double lp = loss_at(&sig_plus);
    w[j] = saved - epsilon;
    const double lm = loss_at(&sig_minus);
    w[j] = saved;
    if (sig_plus != sig_minus) continue;

    const double fd = (lp - lm) / (2.0 * epsilon);
    const double an = analytic[ti].data[j];
    const double rel = std::abs(an - fd) / std::max(std::abs(an) + std::abs(fd), 1e-3);
    max_rel = std::max(max_rel, rel);
    valid++;
  }
  FFSV_CHECK(valid >= n_samples, "gradient check could not place " << n_samples
             << " kink-free probes (got " << valid << ")");
  return max_rel;
}

// --- checkpoint --------------------------------------------------------------
//
// Layout: magic "FFSVMODL", version u32, serialized NetworkConfig, parameter
// count u32, then per tensor: name, rank u32, dims u32 each, f32 data.

inline void WriteModel(const std::string &path, EmbedNet *model) {
  std::ofstream os(path, std::ios::binary);
  FFSV_CHECK(os.is_open(), "cannot create model file " << path);
  const NetworkConfig &c = model->config();
  os.write("FFSVMODL", 8);
  WriteRaw<uint32_t>(os, 1);
  WriteRaw<uint8_t>(os, c.variant == NetVariant::kResnet34 ? 0 : 1);
  WriteRaw<uint32_t>(os, c.width_num);
  WriteRaw<uint32_t>(os, c.width_den);
  for (int b : c.block_counts) WriteRaw<uint32_t>(os, static_cast<uint32_t>(b));
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(c.embedding_dim));
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(c.n_classes));
  WriteRaw<uint8_t>(os, c.pooling == Pooling::kMeanStd ? 0 : 1);
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(c.input_dim));

  auto params = model->Params();
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(params.size()));
  for (auto &p : params) {
    WriteString(os, p.name);
    WriteRaw<uint32_t>(os, static_cast<uint32_t>(p.value->Rank()));
    for (int d : p.value->dims) WriteRaw<uint32_t>(os, static_cast<uint32_t>(d));
    for (double v : p.value->data) WriteRaw<float>(os, static_cast<float>(v));
  }
  FFSV_CHECK(os.good(), "write failed for " << path);
}

inline std::unique_ptr<EmbedNet> ReadModel(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  FFSV_CHECK(is.is_open(), "cannot open model file " << path);
  ExpectMagic(is, "FFSVMODL");
  const uint32_t version = ReadRaw<uint32_t>(is);
  FFSV_CHECK(version == 1, "unsupported model version " << version);

  NetworkConfig c;
  c.variant = ReadRaw<uint8_t>(is) == 0 ? NetVariant::kResnet34 : NetVariant::kResnet50;
  c.width_num = ReadRaw<uint32_t>(is);
  c.width_den = ReadRaw<uint32_t>(is);
  for (auto &b : c.block_counts) b = static_cast<int>(ReadRaw<uint32_t>(is));
  c.embedding_dim = static_cast<int>(ReadRaw<uint32_t>(is));
  c.n_classes = static_cast<int>(ReadRaw<uint32_t>(is));
  c.pooling = ReadRaw<uint8_t>(is) == 0 ? Pooling::kMeanStd : Pooling::kMean;
  c.input_dim = static_cast<int>(ReadRaw<uint32_t>(is));

  auto model = std::make_unique<EmbedNet>(c);
  auto params = model->Params();
  const uint32_t count = ReadRaw<uint32_t>(is);
  FFSV_CHECK(count == params.size(), "model file has " << count
             << " tensors, architecture expects " << params.size());
  for (uint32_t i = 0; i < count; i++) {
    const std::string name = ReadString(is);
    FFSV_CHECK(name == params[i].name, "tensor " << i << " is \"" << name
               << "\", expected \"" << params[i].name << "\"");
    const uint32_t rank = ReadRaw<uint32_t>(is);
    FFSV_CHECK(rank == static_cast<uint32_t>(params[i].value->Rank()),
               "rank mismatch for " << name);
    int64_t numel = 1;
    for (uint32_t d = 0; d < rank; d++) {
      const int dim = static_cast<int>(ReadRaw<uint32_t>(is));
      FFSV_CHECK(dim == params[i].value->dims[d], "dim mismatch for " << name);
      numel *= dim;
    }
    for (int64_t j = 0; j < numel; j++)
      params[i].value->data[static_cast<size_t>(j)] = ReadRaw<float>(is);
  }
  return model;
}

}  // namespace ffsv

#endif  // FFSV_EMBED_NET_HPP_
