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

#ifndef UPCALL_NN_LAYERS_H_
#define UPCALL_NN_LAYERS_H_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "upcall/nn/tensor.h"

namespace upcall::nn {

enum class LayerKind { conv2d, batchnorm, relu, maxpool, dense, sigmoid, tanh, softmax, flatten };

std::string_view layer_kind_name(LayerKind k);
LayerKind parse_layer_kind(std::string_view s);

// Train mode uses batch statistics in batchnorm; infer mode uses the stored
// running statistics.
enum class Mode { train, infer };

struct Param {
  std::string name;
  Tensor value;
  bool trainable = true;
  bool decay = false;  // subject to L2 weight decay
};

// A layer is a pure function of its parameters: forward and backward never
// mutate the layer, so a finalized network can be shared across threads.
// Backward recomputes whatever it needs from the cached input and output.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  // Per-sample output shape (no batch dimension).
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual void forward(const Tensor& in, Tensor& out, Mode mode) const = 0;
  // Accumulates parameter gradients into `grads` (aligned with params()).
  // grad_in may be null when the input gradient is not needed.
  virtual void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                        Tensor* grad_in, std::vector<Tensor>& grads, Mode mode) const = 0;
  virtual nlohmann::json config() const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  // Hook for layers that track statistics while training.
  virtual void observe_batch(const Tensor& /*in*/) {}

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }

 protected:
  std::vector<Param> params_;
};

// 3x3 convolution, stride 1, zero padding 1 (spatial size preserved).
// Weight layout [out, in, 3, 3].
class Conv2d : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, bool use_bias);
  LayerKind kind() const override { return LayerKind::conv2d; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& in, Tensor& out, Mode mode) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor* grad_in,
                std::vector<Tensor>& grads, Mode mode) const override;
  nlohmann::json config() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  bool use_bias() const { return bias_; }

 private:
  int in_, out_;
  bool bias_;
};

// Per-channel normalization over (batch, height, width) for [N,C,H,W]
// inputs, or per-feature over the batch for [N,C] inputs. Running variance is
// the biased (population) estimate, so train and infer agree when batch
// statistics equal the running ones.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(int channels, double epsilon = 1e-5, double momentum = 0.1);
  LayerKind kind() const override { return LayerKind::batchnorm; }
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor& in, Tensor& out, Mode mode) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor* grad_in,
                std::vector<Tensor>& grads, Mode mode) const override;
  nlohmann::json config() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }
  void observe_batch(const Tensor& in) override;

  // Mean and biased variance of each channel over one batch.
  void batch_statistics(const Tensor& in, std::vector<double>* mean, std::vector<double>* var) const;
  void set_running(const std::vector<double>& mean, const std::vector<double>& var);
  const std::vector<double>& running_mean() const { return params_[2].value.data; }
  const std::vector<double>& running_var() const { return params_[3].value.data; }
  int channels() const { return channels_; }
  double epsilon() const { return eps_; }

 private:
  int channels_;
  double eps_, momentum_;
};

// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped. Ties
// resolve to the first maximum in row-major order.
class MaxPool : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::maxpool; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& in, Tensor& out, Mode mode) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor* grad_in,
                std::vector<Tensor>& grads, Mode mode) const override;
  nlohmann::json config() const override { return nlohmann::json::object(); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool>(*this); }
};

// y = x W^T + b with W of shape [out, in].
class Dense : public Layer {
 public:
  Dense(int in_features, int out_features);
  LayerKind kind() const override { return LayerKind::dense; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& in, Tensor& out, Mode mode) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor* grad_in,
                std::vector<Tensor>& grads, Mode mode) const override;
  nlohmann::json config() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_, out_;
};

// Elementwise activations and the softmax head share one implementation.
class Activation : public Layer {
 public:
  explicit Activation(LayerKind kind);
  LayerKind kind() const override { return kind_; }
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor& in, Tensor& out, Mode mode) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor* grad_in,
                std::vector<Tensor>& grads, Mode mode) const override;
  nlohmann::json config() const override { return nlohmann::json::object(); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Activation>(*this); }

 private:
  LayerKind kind_;
};

class Flatten : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::flatten; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& in, Tensor& out, Mode mode) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor* grad_in,
                std::vector<Tensor>& grads, Mode mode) const override;
  nlohmann::json config() const override { return nlohmann::json::object(); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
};

// Row-wise numerically stable softmax.
void softmax_rows(std::span<const double> logits, std::span<double> out, size_t cols);

std::unique_ptr<Layer> make_layer(LayerKind kind, const nlohmann::json& config);

}  // namespace upcall::nn

#endif  // UPCALL_NN_LAYERS_H_
