// ffsv/nn.hpp

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

#ifndef FFSV_NN_HPP_
#define FFSV_NN_HPP_

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ffsv/common.hpp"
#include "ffsv/tensor.hpp"

namespace ffsv {

enum class Mode { kTrain, kEval };

// Handle to one named parameter tensor.  Gradients live next to the values;
// running statistics are serialized but not touched by the optimizer.
struct ParamRef {
  std::string name;
  Tensor *value = nullptr;
  Tensor *grad = nullptr;      // null for running statistics
  bool weight_decay = false;   // conv / linear weights only
};

// 2-D convolution over [N, C, F, T], square kernel, "same"-style padding
// k/2, no bias (batch norm follows every conv here).
class Conv2d {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride)
      : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel),
        stride_(stride), pad_(kernel / 2),
        weight_({out_ch, in_ch, kernel, kernel}),
        wgrad_({out_ch, in_ch, kernel, kernel}) {}

  void Init(Rng *rng) {
    const double std = std::sqrt(2.0 / (in_ch_ * kernel_ * kernel_));
    for (auto &v : weight_.data) v = std * rng->Gaussian();
  }

  static int OutSize(int in, int kernel, int stride) {
    return (in + 2 * (kernel / 2) - kernel) / stride + 1;
  }

  Tensor Forward(const Tensor &x) {
    FFSV_CHECK(x.Rank() == 4 && x.Dim(1) == in_ch_,
               name_ << ": expected " << in_ch_ << " input channels, got "
               << x.Dim(1));
    input_ = x;
    const int n = x.Dim(0), fi = x.Dim(2), ti = x.Dim(3);
    const int fo = OutSize(fi, kernel_, stride_), to = OutSize(ti, kernel_, stride_);
    FFSV_CHECK(fo >= 1 && to >= 1, name_ << ": input " << fi << "x" << ti
               << " too small for stride " << stride_);

    Tensor y({n, out_ch_, fo, to});
    const int ck = in_ch_ * kernel_ * kernel_;
    std::vector<double> col(static_cast<size_t>(ck) * fo * to);
    for (int s = 0; s < n; s++) {
      Im2Col(x, s, fo, to, col.data());
      nn_internal::MatMulAcc(weight_.data.data(), col.data(),
                             &y.At4(s, 0, 0, 0), out_ch_, ck, fo * to);
    }
    return y;
  }

  Tensor Backward(const Tensor &dy) {
    const int n = input_.Dim(0), fi = input_.Dim(2), ti = input_.Dim(3);
    const int fo = dy.Dim(2), to = dy.Dim(3);
    const int ck = in_ch_ * kernel_ * kernel_;

    Tensor dx({n, in_ch_, fi, ti});
    std::vector<double> col(static_cast<size_t>(ck) * fo * to);
    std::vector<double> dcol(col.size());
    const size_t sample_stride = static_cast<size_t>(out_ch_) * fo * to;
    for (int s = 0; s < n; s++) {
      const double *dy_s = dy.data.data() + s * sample_stride;
      Im2Col(input_, s, fo, to, col.data());
      // dW += dY * col^T
      nn_internal::MatMulAccNT(dy_s, col.data(), wgrad_.data.data(),
                               out_ch_, fo * to, ck);
      // dcol = W^T * dY
      std::fill(dcol.begin(), dcol.end(), 0.0);
      nn_internal::MatMulAccTN(weight_.data.data(), dy_s, dcol.data(),
                               out_ch_, ck, fo * to);
      Col2Im(dcol.data(), s, fo, to, &dx);
    }
    return dx;
  }

  void CollectParams(std::vector<ParamRef> *out) {
    out->push_back({name_ + ".weight", &weight_, &wgrad_, true});
  }

  Tensor &weight() { return weight_; }

 private:
  void Im2Col(const Tensor &x, int s, int fo, int to, double *col) const {
    const int fi = x.Dim(2), ti = x.Dim(3);
    size_t r = 0;
    for (int c = 0; c < in_ch_; c++) {
      for (int ki = 0; ki < kernel_; ki++) {
        for (int kj = 0; kj < kernel_; kj++, r++) {
          double *dst = col + r * fo * to;
          for (int f = 0; f < fo; f++) {
            const int src_f = f * stride_ - pad_ + ki;
            if (src_f < 0 || src_f >= fi) {
              std::fill(dst + static_cast<size_t>(f) * to,
                        dst + static_cast<size_t>(f + 1) * to, 0.0);
              continue;
            }
            for (int t = 0; t < to; t++) {
              const int src_t = t * stride_ - pad_ + kj;
              dst[static_cast<size_t>(f) * to + t] =
                  (src_t < 0 || src_t >= ti) ? 0.0 : x.At4(s, c, src_f, src_t);
            }
          }
        }
      }
    }
  }

  void Col2Im(const double *dcol, int s, int fo, int to, Tensor *dx) const {
    const int fi = dx->Dim(2), ti = dx->Dim(3);
    size_t r = 0;
    for (int c = 0; c < in_ch_; c++) {
      for (int ki = 0; ki < kernel_; ki++) {
        for (int kj = 0; kj < kernel_; kj++, r++) {
          const double *src = dcol + r * fo * to;
          for (int f = 0; f < fo; f++) {
            const int dst_f = f * stride_ - pad_ + ki;
            if (dst_f < 0 || dst_f >= fi) continue;
            for (int t = 0; t < to; t++) {
              const int dst_t = t * stride_ - pad_ + kj;
              if (dst_t < 0 || dst_t >= ti) continue;
              dx->At4(s, c, dst_f, dst_t) += src[static_cast<size_t>(f) * to + t];
            }
          }
        }
      }
    }
  }

  std::string name_;
  int in_ch_, out_ch_, kernel_, stride_, pad_;
  Tensor weight_, wgrad_;
  Tensor input_;
};

// Per-channel batch normalization over [N, C, F, T].  Training mode uses
// batch statistics (population variance) and maintains running estimates;
// eval mode applies the running statistics, which keeps the loss surface
// deterministic for gradient checking.
class BatchNorm2d {
 public:
  BatchNorm2d(std::string name, int channels)
      : name_(std::move(name)), channels_(channels),
        gamma_({channels}), beta_({channels}),
        ggrad_({channels}), bgrad_({channels}),
        running_mean_({channels}), running_var_({channels}) {
    std::fill(gamma_.data.begin(), gamma_.data.end(), 1.0);
    std::fill(running_var_.data.begin(), running_var_.data.end(), 1.0);
  }

  Tensor Forward(const Tensor &x, Mode mode) {
    FFSV_CHECK(x.Dim(1) == channels_, name_ << ": channel mismatch");
    mode_ = mode;
    input_ = x;
    const int n = x.Dim(0), f = x.Dim(2), t = x.Dim(3);
    const double m = static_cast<double>(n) * f * t;

    mean_.assign(channels_, 0.0);
    inv_std_.assign(channels_, 0.0);
    Tensor y(x.dims);
    if (mode == Mode::kTrain) {
      std::vector<double> var(channels_, 0.0);
      for (int s = 0; s < n; s++)
        for (int c = 0; c < channels_; c++)
          for (int i = 0; i < f; i++)
            for (int j = 0; j < t; j++) mean_[c] += x.At4(s, c, i, j);
      for (int c = 0; c < channels_; c++) mean_[c] /= m;
      for (int s = 0; s < n; s++)
        for (int c = 0; c < channels_; c++)
          for (int i = 0; i < f; i++)
            for (int j = 0; j < t; j++) {
              const double d = x.At4(s, c, i, j) - mean_[c];
              var[c] += d * d;
            }
      for (int c = 0; c < channels_; c++) {
        var[c] /= m;
        inv_std_[c] = 1.0 / std::sqrt(var[c] + kEps);
        running_mean_.data[c] =
            (1.0 - kMomentum) * running_mean_.data[c] + kMomentum * mean_[c];
        running_var_.data[c] =
            (1.0 - kMomentum) * running_var_.data[c] + kMomentum * var[c];
      }
    } else {
      for (int c = 0; c < channels_; c++) {
        mean_[c] = running_mean_.data[c];
        inv_std_[c] = 1.0 / std::sqrt(running_var_.data[c] + kEps);
      }
    }
    for (int s = 0; s < n; s++)
      for (int c = 0; c < channels_; c++)
        for (int i = 0; i < f; i++)
          for (int j = 0; j < t; j++)
            y.At4(s, c, i, j) = gamma_.data[c] * (x.At4(s, c, i, j) - mean_[c]) *
                                    inv_std_[c] + beta_.data[c];
    return y;
  }

  Tensor Backward(const Tensor &dy) {
    const int n = input_.Dim(0), f = input_.Dim(2), t = input_.Dim(3);
    const double m = static_cast<double>(n) * f * t;
    Tensor dx(input_.dims);

    for (int c = 0; c < channels_; c++) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int s = 0; s < n; s++)
        for (int i = 0; i < f; i++)
          for (int j = 0; j < t; j++) {
            const double xhat = (input_.At4(s, c, i, j) - mean_[c]) * inv_std_[c];
            const double g = dy.At4(s, c, i, j);
            sum_dy += g;
            sum_dy_xhat += g * xhat;
          }
      ggrad_.data[c] += sum_dy_xhat;
      bgrad_.data[c] += sum_dy;

      const double gs = gamma_.data[c] * inv_std_[c];
      for (int s = 0; s < n; s++)
        for (int i = 0; i < f; i++)
          for (int j = 0; j < t; j++) {
            const double g = dy.At4(s, c, i, j);
            if (mode_ == Mode::kTrain) {
              const double xhat = (input_.At4(s, c, i, j) - mean_[c]) * inv_std_[c];
              dx.At4(s, c, i, j) = gs * (g - sum_dy / m - xhat * sum_dy_xhat / m);
            } else {
              dx.At4(s, c, i, j) = gs * g;
            }
          }
    }
    return dx;
  }

  void CollectParams(std::vector<ParamRef> *out) {
    out->push_back({name_ + ".gamma", &gamma_, &ggrad_, false});
    out->push_back({name_ + ".beta", &beta_, &bgrad_, false});
    out->push_back({name_ + ".running_mean", &running_mean_, nullptr, false});
    out->push_back({name_ + ".running_var", &running_var_, nullptr, false});
  }

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

 private:
  std::string name_;
  int channels_;
  Tensor gamma_, beta_, ggrad_, bgrad_;
  Tensor running_mean_, running_var_;
  Tensor input_;
  std::vector<double> mean_, inv_std_;
  Mode mode_ = Mode::kTrain;
};

class Relu {
 public:
  Tensor Forward(const Tensor &x) {
    input_ = x;
    Tensor y = x;
    for (auto &v : y.data) v = std::max(0.0, v);
    return y;
  }

  Tensor Backward(const Tensor &dy) {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.data.size(); i++)
      if (input_.data[i] <= 0.0) dx.data[i] = 0.0;
    return dx;
  }

  // Folds the sign pattern of the cached pre-activations into a hash.
  // Gradient checking compares the patterns at +eps and -eps: when they
  // differ, the probe straddled a kink and the central difference is not an
  // estimate of the derivative.
  void HashSigns(uint64_t *h) const {
    for (double v : input_.data)
      *h = (*h * 1099511628211ULL) ^ (v > 0.0 ? 0x9eu : 0x31u);
  }

 private:
  Tensor input_;
};

class Linear {
 public:
  Linear(std::string name, int in_dim, int out_dim)
      : name_(std::move(name)), in_(in_dim), out_(out_dim),
        weight_({out_dim, in_dim}), bias_({out_dim}),
        wgrad_({out_dim, in_dim}), bgrad_({out_dim}) {}

  void Init(Rng *rng, double std) {
    for (auto &v : weight_.data) v = std * rng->Gaussian();
    bias_.SetZero();
  }

  Tensor Forward(const Tensor &x) {
    FFSV_CHECK(x.Rank() == 2 && x.Dim(1) == in_,
               name_ << ": expected input dim " << in_ << ", got " << x.Dim(1));
    input_ = x;
    const int n = x.Dim(0);
    Tensor y({n, out_});
    for (int s = 0; s < n; s++)
      for (int o = 0; o < out_; o++) y.At2(s, o) = bias_.data[o];
    nn_internal::MatMulAccNT(x.data.data(), weight_.data.data(), y.data.data(),
                             n, in_, out_);
    return y;
  }

  Tensor Backward(const Tensor &dy) {
    const int n = input_.Dim(0);
    // dW += dY^T * X; db += column sums of dY; dX = dY * W.
    nn_internal::MatMulAccTN(dy.data.data(), input_.data.data(),
                             wgrad_.data.data(), n, out_, in_);
    for (int s = 0; s < n; s++)
      for (int o = 0; o < out_; o++) bgrad_.data[o] += dy.At2(s, o);
    Tensor dx({n, in_});
    nn_internal::MatMulAcc(dy.data.data(), weight_.data.data(), dx.data.data(),
                           n, out_, in_);
    return dx;
  }

  void CollectParams(std::vector<ParamRef> *out) {
    out->push_back({name_ + ".weight", &weight_, &wgrad_, true});
    out->push_back({name_ + ".bias", &bias_, &bgrad_, false});
  }

  int out_dim() const { return out_; }
  Tensor &weight() { return weight_; }
  Tensor &bias() { return bias_; }

 private:
  std::string name_;
  int in_, out_;
  Tensor weight_, bias_, wgrad_, bgrad_;
  Tensor input_;
};

enum class Pooling { kMeanStd, kMean };

// Global statistics pooling: per channel, mean (and optionally standard
// deviation with a 1e-5 epsilon under the root) over all F*T positions.
// mean_std maps [N, C, F, T] to [N, 2C]; mean maps to [N, C].
class GlobalStatsPool {
 public:
  explicit GlobalStatsPool(Pooling pooling) : pooling_(pooling) {}

  Tensor Forward(const Tensor &x) {
    FFSV_CHECK(x.Rank() == 4, "GSP expects a 4-D feature map");
    const int n = x.Dim(0), c = x.Dim(1), f = x.Dim(2), t = x.Dim(3);
    const int m = f * t;
    FFSV_CHECK(pooling_ == Pooling::kMean || m >= 2,
               "mean_std pooling needs at least two spatial positions");
    input_ = x;
    mean_ = Tensor({n, c});
    std_ = Tensor({n, c});
    Tensor y({n, pooling_ == Pooling::kMeanStd ? 2 * c : c});
    for (int s = 0; s < n; s++) {
      for (int ch = 0; ch < c; ch++) {
        double mu = 0.0;
        for (int i = 0; i < f; i++)
          for (int j = 0; j < t; j++) mu += x.At4(s, ch, i, j);
        mu /= m;
        mean_.At2(s, ch) = mu;
        y.At2(s, ch) = mu;
        if (pooling_ == Pooling::kMeanStd) {
          double var = 0.0;
          for (int i = 0; i < f; i++)
            for (int j = 0; j < t; j++) {
              const double d = x.At4(s, ch, i, j) - mu;
              var += d * d;
            }
          var /= m;
          const double sd = std::sqrt(var + kEps);
          std_.At2(s, ch) = sd;
          y.At2(s, c + ch) = sd;
        }
      }
    }
    return y;
  }

  Tensor Backward(const Tensor &dy) {
    const int n = input_.Dim(0), c = input_.Dim(1), f = input_.Dim(2),
              t = input_.Dim(3);
    const double m = static_cast<double>(f) * t;
    Tensor dx(input_.dims);
    for (int s = 0; s < n; s++) {
      for (int ch = 0; ch < c; ch++) {
        const double dmu = dy.At2(s, ch);
        const double dsd = pooling_ == Pooling::kMeanStd ? dy.At2(s, c + ch) : 0.0;
        const double mu = mean_.At2(s, ch);
        const double sd = pooling_ == Pooling::kMeanStd ? std_.At2(s, ch) : 1.0;
        for (int i = 0; i < f; i++)
          for (int j = 0; j < t; j++) {
            double g = dmu / m;
            if (pooling_ == Pooling::kMeanStd)
              g += dsd * (input_.At4(s, ch, i, j) - mu) / (m * sd);
            dx.At4(s, ch, i, j) = g;
          }
      }
    }
    return dx;
  }

  int OutputDim(int channels) const {
    return pooling_ == Pooling::kMeanStd ? 2 * channels : channels;
  }

  static constexpr double kEps = 1e-5;

 private:
  Pooling pooling_;
  Tensor input_, mean_, std_;
};

// Mean cross-entropy over the batch; dlogits is (softmax - onehot) / N.
inline double SoftmaxCrossEntropy(const Tensor &logits,
                                  const std::vector<int> &labels,
                                  Tensor *dlogits) {
  const int n = logits.Dim(0), k = logits.Dim(1);
  FFSV_CHECK(static_cast<int>(labels.size()) == n, "label count mismatch");
  if (dlogits) *dlogits = Tensor({n, k});
  double loss = 0.0;
  for (int s = 0; s < n; s++) {
    FFSV_CHECK(labels[s] >= 0 && labels[s] < k,
               "label " << labels[s] << " outside [0, " << k << ")");
    double mx = logits.At2(s, 0);
    for (int j = 1; j < k; j++) mx = std::max(mx, logits.At2(s, j));
    double z = 0.0;
    for (int j = 0; j < k; j++) z += std::exp(logits.At2(s, j) - mx);
    const double logz = std::log(z) + mx;
    loss += logz - logits.At2(s, labels[s]);
    if (dlogits) {
      for (int j = 0; j < k; j++) {
        const double p = std::exp(logits.At2(s, j) - logz);
        dlogits->At2(s, j) = (p - (j == labels[s] ? 1.0 : 0.0)) / n;
      }
    }
  }
  return loss / n;
}

}  // namespace ffsv

#endif  // FFSV_NN_HPP_
