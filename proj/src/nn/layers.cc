// Copyright 2026  The upcall-mmdl Authors
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

#include "upcall/nn/layers.h"

#include <algorithm>
#include <cmath>

namespace upcall::nn {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

void require_rank(const Tensor& t, size_t rank, const char* who) {
  if (t.shape.size() != rank)
    throw ValidationError(std::string(who) + ": expected rank-" + std::to_string(rank) +
                          " input, got " + shape_str(t.shape));
}

// Rows are (channel, ky, kx), columns are output pixels.
void im2col(const double* img, int C, int H, int W, double* col) {
  const int hw = H * W;
  for (int c = 0; c < C; ++c) {
    const double* plane = img + static_cast<size_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col + static_cast<size_t>(c * 9 + ky * 3 + kx) * hw;
        // Valid output columns x satisfy 0 <= x + kx - 1 < W.
        const int x0 = std::max(0, 1 - kx), x1 = std::min(W, W + 1 - kx);
        for (int y = 0; y < H; ++y) {
          const int sy = y + ky - 1;
          double* drow = dst + static_cast<size_t>(y) * W;
          if (sy < 0 || sy >= H) {
            std::fill(drow, drow + W, 0.0);
            continue;
          }
          const double* srow = plane + static_cast<size_t>(sy) * W + (kx - 1);
          std::fill(drow, drow + x0, 0.0);
          std::copy(srow + x0, srow + x1, drow + x0);
          std::fill(drow + x1, drow + W, 0.0);
        }
      }
    }
  }
}

void col2im_add(const double* col, int C, int H, int W, double* img) {
  const int hw = H * W;
  for (int c = 0; c < C; ++c) {
    double* plane = img + static_cast<size_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = col + static_cast<size_t>(c * 9 + ky * 3 + kx) * hw;
        const int x0 = std::max(0, 1 - kx), x1 = std::min(W, W + 1 - kx);
        for (int y = 0; y < H; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          double* drow = plane + static_cast<size_t>(sy) * W + (kx - 1);
          const double* srow = src + static_cast<size_t>(y) * W;
          for (int x = x0; x < x1; ++x) drow[x] += srow[x];
        }
      }
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string_view layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::dense: return "dense";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::tanh: return "tanh";
    case LayerKind::softmax: return "softmax";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view s) {
  for (auto k : {LayerKind::conv2d, LayerKind::batchnorm, LayerKind::relu, LayerKind::maxpool,
                 LayerKind::dense, LayerKind::sigmoid, LayerKind::tanh, LayerKind::softmax,
                 LayerKind::flatten})
    if (layer_kind_name(k) == s) return k;
  throw ValidationError("unknown layer kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, bool use_bias)
    : in_(in_channels), out_(out_channels), bias_(use_bias) {
  if (in_ < 1 || out_ < 1) throw ValidationError("conv2d: channel counts must be positive");
  params_.push_back({"weight", Tensor({out_, in_, 3, 3}), true, true});
  if (bias_) params_.push_back({"bias", Tensor({out_}), true, false});
}

Shape Conv2d::output_shape(const Shape& in) const {
  if (in.size() != 3 || in[0] != in_)
    throw ValidationError("conv2d: expected input [" + std::to_string(in_) + ",H,W], got " +
                          shape_str(in));
  return {out_, in[1], in[2]};
}

void Conv2d::forward(const Tensor& in, Tensor& out, Mode) const {
  require_rank(in, 4, "conv2d");
  const int N = in.dim(0), H = in.dim(2), W = in.dim(3), hw = H * W;
  if (in.dim(1) != in_) throw ValidationError("conv2d: channel mismatch");
  out = Tensor({N, out_, H, W});
  std::vector<double> col(static_cast<size_t>(in_) * 9 * hw);
  ConstMap wm(params_[0].value.data.data(), out_, in_ * 9);
  for (int n = 0; n < N; ++n) {
    im2col(in.data.data() + static_cast<size_t>(n) * in_ * hw, in_, H, W, col.data());
    MutMap om(out.data.data() + static_cast<size_t>(n) * out_ * hw, out_, hw);
    om.noalias() = wm * ConstMap(col.data(), in_ * 9, hw);
    if (bias_)
      for (int f = 0; f < out_; ++f) om.row(f).array() += params_[1].value.data[f];
  }
}

void Conv2d::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor* grad_in,
                      std::vector<Tensor>& grads, Mode) const {
  const int N = in.dim(0), H = in.dim(2), W = in.dim(3), hw = H * W;
  std::vector<double> col(static_cast<size_t>(in_) * 9 * hw);
  std::vector<double> dcol(grad_in ? col.size() : 0);
  ConstMap wm(params_[0].value.data.data(), out_, in_ * 9);
  MutMap dw(grads[0].data.data(), out_, in_ * 9);
  if (grad_in) *grad_in = Tensor(in.shape);
  for (int n = 0; n < N; ++n) {
    im2col(in.data.data() + static_cast<size_t>(n) * in_ * hw, in_, H, W, col.data());
    ConstMap g(grad_out.data.data() + static_cast<size_t>(n) * out_ * hw, out_, hw);
    dw.noalias() += g * ConstMap(col.data(), in_ * 9, hw).transpose();
    if (bias_)
      for (int f = 0; f < out_; ++f) grads[1].data[f] += g.row(f).sum();
    if (grad_in) {
      MutMap(dcol.data(), in_ * 9, hw).noalias() = wm.transpose() * g;
      col2im_add(dcol.data(), in_, H, W, grad_in->data.data() + static_cast<size_t>(n) * in_ * hw);
    }
  }
}

nlohmann::json Conv2d::config() const {
  return {{"in_channels", in_}, {"out_channels", out_}, {"use_bias", bias_}};
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(int channels, double epsilon, double momentum)
    : channels_(channels), eps_(epsilon), momentum_(momentum) {
  if (channels < 1) throw ValidationError("batchnorm: channels must be positive");
  params_.push_back({"gamma", Tensor({channels}, 1.0), true, false});
  params_.push_back({"beta", Tensor({channels}, 0.0), true, false});
  params_.push_back({"running_mean", Tensor({channels}, 0.0), false, false});
  params_.push_back({"running_var", Tensor({channels}, 1.0), false, false});
}

void BatchNorm::batch_statistics(const Tensor& in, std::vector<double>* mean,
                                 std::vector<double>* var) const {
  const int N = in.dim(0);
  if (in.dim(1) != channels_) throw ValidationError("batchnorm: channel mismatch");
  const size_t S = in.stride0() / channels_;
  const double m = static_cast<double>(N) * static_cast<double>(S);
  mean->assign(channels_, 0.0);
  var->assign(channels_, 0.0);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < channels_; ++c) {
      const double* p = in.data.data() + (static_cast<size_t>(n) * channels_ + c) * S;
      double s = 0;
      for (size_t i = 0; i < S; ++i) s += p[i];
      (*mean)[c] += s;
    }
  for (auto& v : *mean) v /= m;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < channels_; ++c) {
      const double* p = in.data.data() + (static_cast<size_t>(n) * channels_ + c) * S;
      const double mu = (*mean)[c];
      double s = 0;
      for (size_t i = 0; i < S; ++i) s += (p[i] - mu) * (p[i] - mu);
      (*var)[c] += s;
    }
  for (auto& v : *var) v /= m;
}

void BatchNorm::forward(const Tensor& in, Tensor& out, Mode mode) const {
  if (in.shape.size() != 2 && in.shape.size() != 4)
    throw ValidationError("batchnorm: expected [N,C] or [N,C,H,W] input");
  std::vector<double> mean, var;
  if (mode == Mode::train) {
    batch_statistics(in, &mean, &var);
  } else {
    mean = running_mean();
    var = running_var();
  }
  const int N = in.dim(0);
  const size_t S = in.stride0() / channels_;
  out = Tensor(in.shape);
  const auto& gamma = params_[0].value.data;
  const auto& beta = params_[1].value.data;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < channels_; ++c) {
      const size_t off = (static_cast<size_t>(n) * channels_ + c) * S;
      const double inv = 1.0 / std::sqrt(var[c] + eps_);
      for (size_t i = 0; i < S; ++i)
        out.data[off + i] = gamma[c] * (in.data[off + i] - mean[c]) * inv + beta[c];
    }
}

void BatchNorm::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor* grad_in,
                         std::vector<Tensor>& grads, Mode mode) const {
  std::vector<double> mean, var;
  if (mode == Mode::train) {
    batch_statistics(in, &mean, &var);
  } else {
    mean = running_mean();
    var = running_var();
  }
  const int N = in.dim(0);
  const size_t S = in.stride0() / channels_;
  const double m = static_cast<double>(N) * static_cast<double>(S);
  const auto& gamma = params_[0].value.data;
  std::vector<double> sum_dy(channels_, 0.0), sum_dy_xhat(channels_, 0.0), inv(channels_);
  for (int c = 0; c < channels_; ++c) inv[c] = 1.0 / std::sqrt(var[c] + eps_);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < channels_; ++c) {
      const size_t off = (static_cast<size_t>(n) * channels_ + c) * S;
      for (size_t i = 0; i < S; ++i) {
        const double xhat = (in.data[off + i] - mean[c]) * inv[c];
        sum_dy[c] += grad_out.data[off + i];
        sum_dy_xhat[c] += grad_out.data[off + i] * xhat;
      }
    }
  for (int c = 0; c < channels_; ++c) {
    grads[0].data[c] += sum_dy_xhat[c];
    grads[1].data[c] += sum_dy[c];
  }
  if (!grad_in) return;
  *grad_in = Tensor(in.shape);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < channels_; ++c) {
      const size_t off = (static_cast<size_t>(n) * channels_ + c) * S;
      for (size_t i = 0; i < S; ++i) {
        const double dy = grad_out.data[off + i];
        if (mode == Mode::train) {
          const double xhat = (in.data[off + i] - mean[c]) * inv[c];
          grad_in->data[off + i] =
              gamma[c] * inv[c] / m * (m * dy - sum_dy[c] - xhat * sum_dy_xhat[c]);
        } else {
          grad_in->data[off + i] = gamma[c] * inv[c] * dy;
        }
      }
    }
}

void BatchNorm::observe_batch(const Tensor& in) {
  std::vector<double> mean, var;
  batch_statistics(in, &mean, &var);
  auto& rm = params_[2].value.data;
  auto& rv = params_[3].value.data;
  for (int c = 0; c < channels_; ++c) {
    rm[c] = (1.0 - momentum_) * rm[c] + momentum_ * mean[c];
    rv[c] = (1.0 - momentum_) * rv[c] + momentum_ * var[c];
  }
}

void BatchNorm::set_running(const std::vector<double>& mean, const std::vector<double>& var) {
  if (mean.size() != static_cast<size_t>(channels_) || var.size() != mean.size())
    throw ValidationError("batchnorm: running statistics size mismatch");
  params_[2].value.data = mean;
  params_[3].value.data = var;
}

nlohmann::json BatchNorm::config() const {
  return {{"channels", channels_}, {"epsilon", eps_}, {"momentum", momentum_}};
}

// --------------------------------------------------------------- MaxPool

Shape MaxPool::output_shape(const Shape& in) const {
  if (in.size() != 3) throw ValidationError("maxpool: expected [C,H,W] input, got " + shape_str(in));
  if (in[1] < 2 || in[2] < 2) throw ValidationError("maxpool: input smaller than 2x2");
  return {in[0], in[1] / 2, in[2] / 2};
}

void MaxPool::forward(const Tensor& in, Tensor& out, Mode) const {
  require_rank(in, 4, "maxpool");
  const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
  const int oh = H / 2, ow = W / 2;
  out = Tensor({N, C, oh, ow});
  for (int p = 0; p < N * C; ++p) {
    const double* src = in.data.data() + static_cast<size_t>(p) * H * W;
    double* dst = out.data.data() + static_cast<size_t>(p) * oh * ow;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const double* r0 = src + static_cast<size_t>(2 * y) * W + 2 * x;
        const double* r1 = r0 + W;
        double best = r0[0];
        if (r0[1] > best) best = r0[1];
        if (r1[0] > best) best = r1[0];
        if (r1[1] > best) best = r1[1];
        dst[y * ow + x] = best;
      }
  }
}

void MaxPool::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor* grad_in,
                       std::vector<Tensor>&, Mode) const {
  if (!grad_in) return;
  const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
  const int oh = H / 2, ow = W / 2;
  *grad_in = Tensor(in.shape);
  for (int p = 0; p < N * C; ++p) {
    const double* src = in.data.data() + static_cast<size_t>(p) * H * W;
    double* dsrc = grad_in->data.data() + static_cast<size_t>(p) * H * W;
    const double* g = grad_out.data.data() + static_cast<size_t>(p) * oh * ow;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const size_t base = static_cast<size_t>(2 * y) * W + 2 * x;
        const size_t cand[4] = {base, base + 1, base + W, base + W + 1};
        size_t arg = cand[0];
        for (int k = 1; k < 4; ++k)
          if (src[cand[k]] > src[arg]) arg = cand[k];
        dsrc[arg] += g[y * ow + x];
      }
  }
}

// ----------------------------------------------------------------- Dense

Dense::Dense(int in_features, int out_features) : in_(in_features), out_(out_features) {
  if (in_ < 1 || out_ < 1) throw ValidationError("dense: feature counts must be positive");
  params_.push_back({"weight", Tensor({out_, in_}), true, true});
  params_.push_back({"bias", Tensor({out_}), true, false});
}

Shape Dense::output_shape(const Shape& in) const {
  if (in.size() != 1 || in[0] != in_)
    throw ValidationError("dense: expected input [" + std::to_string(in_) + "], got " +
                          shape_str(in));
  return {out_};
}

void Dense::forward(const Tensor& in, Tensor& out, Mode) const {
  require_rank(in, 2, "dense");
  if (in.dim(1) != in_) throw ValidationError("dense: feature mismatch");
  const int N = in.dim(0);
  out = Tensor({N, out_});
  ConstMap x(in.data.data(), N, in_);
  ConstMap w(params_[0].value.data.data(), out_, in_);
  MutMap y(out.data.data(), N, out_);
  y.noalias() = x * w.transpose();
  Eigen::Map<const Eigen::RowVectorXd> b(params_[1].value.data.data(), out_);
  y.rowwise() += b;
}

void Dense::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor* grad_in,
                     std::vector<Tensor>& grads, Mode) const {
  const int N = in.dim(0);
  ConstMap x(in.data.data(), N, in_);
  ConstMap g(grad_out.data.data(), N, out_);
  MutMap dw(grads[0].data.data(), out_, in_);
  dw.noalias() += g.transpose() * x;
  Eigen::Map<Eigen::RowVectorXd> db(grads[1].data.data(), out_);
  db += g.colwise().sum();
  if (grad_in) {
    *grad_in = Tensor(in.shape);
    ConstMap w(params_[0].value.data.data(), out_, in_);
    MutMap(grad_in->data.data(), N, in_).noalias() = g * w;
  }
}

nlohmann::json Dense::config() const { return {{"in_features", in_}, {"out_features", out_}}; }

// ------------------------------------------------------------ Activation

Activation::Activation(LayerKind kind) : kind_(kind) {
  if (kind != LayerKind::relu && kind != LayerKind::sigmoid && kind != LayerKind::tanh &&
      kind != LayerKind::softmax)
    throw ValidationError("activation: unsupported kind");
}

void softmax_rows(std::span<const double> logits, std::span<double> out, size_t cols) {
  const size_t rows = logits.size() / cols;
  for (size_t r = 0; r < rows; ++r) {
    const double* z = logits.data() + r * cols;
    double* p = out.data() + r * cols;
    const double mx = *std::max_element(z, z + cols);
    double s = 0;
    for (size_t j = 0; j < cols; ++j) {
      p[j] = std::exp(z[j] - mx);
      s += p[j];
    }
    for (size_t j = 0; j < cols; ++j) p[j] /= s;
  }
}

void Activation::forward(const Tensor& in, Tensor& out, Mode) const {
  out = Tensor(in.shape);
  const size_t n = in.size();
  switch (kind_) {
    case LayerKind::relu:
      for (size_t i = 0; i < n; ++i) out.data[i] = in.data[i] > 0 ? in.data[i] : 0.0;
      break;
    case LayerKind::sigmoid:
      for (size_t i = 0; i < n; ++i) out.data[i] = stable_sigmoid(in.data[i]);
      break;
    case LayerKind::tanh:
      for (size_t i = 0; i < n; ++i) out.data[i] = std::tanh(in.data[i]);
      break;
    case LayerKind::softmax:
      softmax_rows(in.data, out.data, in.stride0());
      break;
    default:
      break;
  }
}

void Activation::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                          Tensor* grad_in, std::vector<Tensor>&, Mode) const {
  if (!grad_in) return;
  *grad_in = Tensor(in.shape);
  const size_t n = in.size();
  auto& gi = grad_in->data;
  const auto& g = grad_out.data;
  const auto& y = out.data;
  switch (kind_) {
    case LayerKind::relu:
      for (size_t i = 0; i < n; ++i) gi[i] = in.data[i] > 0 ? g[i] : 0.0;
      break;
    case LayerKind::sigmoid:
      for (size_t i = 0; i < n; ++i) gi[i] = g[i] * y[i] * (1.0 - y[i]);
      break;
    case LayerKind::tanh:
      for (size_t i = 0; i < n; ++i) gi[i] = g[i] * (1.0 - y[i] * y[i]);
      break;
    case LayerKind::softmax: {
      const size_t cols = in.stride0();
      for (size_t r = 0; r < n / cols; ++r) {
        double dot = 0;
        for (size_t j = 0; j < cols; ++j) dot += g[r * cols + j] * y[r * cols + j];
        for (size_t j = 0; j < cols; ++j)
          gi[r * cols + j] = y[r * cols + j] * (g[r * cols + j] - dot);
      }
      break;
    }
    default:
      break;
  }
}

// --------------------------------------------------------------- Flatten

Shape Flatten::output_shape(const Shape& in) const {
  return {static_cast<int>(shape_numel(in))};
}

void Flatten::forward(const Tensor& in, Tensor& out, Mode) const {
  out.shape = {in.dim(0), static_cast<int>(in.stride0())};
  out.data = in.data;
}

void Flatten::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor* grad_in,
                       std::vector<Tensor>&, Mode) const {
  if (!grad_in) return;
  grad_in->shape = in.shape;
  grad_in->data = grad_out.data;
}

std::unique_ptr<Layer> make_layer(LayerKind kind, const nlohmann::json& c) {
  switch (kind) {
    case LayerKind::conv2d:
      return std::make_unique<Conv2d>(c.at("in_channels").get<int>(),
                                      c.at("out_channels").get<int>(), c.at("use_bias").get<bool>());
    case LayerKind::batchnorm:
      return std::make_unique<BatchNorm>(c.at("channels").get<int>(), c.at("epsilon").get<double>(),
                                         c.at("momentum").get<double>());
    case LayerKind::maxpool:
      return std::make_unique<MaxPool>();
    case LayerKind::dense:
      return std::make_unique<Dense>(c.at("in_features").get<int>(), c.at("out_features").get<int>());
    case LayerKind::flatten:
      return std::make_unique<Flatten>();
    case LayerKind::relu:
    case LayerKind::sigmoid:
    case LayerKind::tanh:
    case LayerKind::softmax:
      return std::make_unique<Activation>(kind);
  }
  throw ValidationError("make_layer: unknown kind");
}

}  // namespace upcall::nn
