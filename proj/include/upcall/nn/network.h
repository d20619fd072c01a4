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

#ifndef UPCALL_NN_NETWORK_H_
#define UPCALL_NN_NETWORK_H_

#include <memory>
#include <vector>

#include "upcall/nn/layers.h"

namespace upcall::nn {

struct Prediction {
  std::vector<double> posterior;  // softmax output
  std::vector<double> logits;     // pre-softmax activations
  int argmax() const;
};

// Ordered layer stack with a fixed per-sample input shape. Copies are deep.
class Network {
 public:
  Network() = default;
  Network(Shape input_shape, int n_classes);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  void add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto p = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *p;
    add(std::move(p));
    return ref;
  }

  const Shape& input_shape() const { return input_shape_; }
  int n_classes() const { return n_classes_; }
  size_t num_layers() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_.at(i); }
  const Layer& layer(size_t i) const { return *layers_.at(i); }

  // Per-sample shape after each layer; throws on an inconsistent chain.
  std::vector<Shape> shape_chain() const;
  Shape output_shape() const;
  // Shape chain consistent and, when n_classes > 0, a softmax over n_classes
  // at the end.
  void validate() const;
  bool ends_in_softmax() const;

  // Batched forward pass. Input shape must be [N] + input_shape().
  Tensor forward_batch(const Tensor& in, Mode mode = Mode::infer) const;
  // acts[0] is the input, acts[i + 1] the output of layer i.
  std::vector<Tensor> forward_trace(const Tensor& in, Mode mode) const;
  // Single sample, given with or without a leading batch dimension of 1.
  Prediction forward(const Tensor& sample) const;

  size_t num_trainable() const;
  Vector flat_params() const;
  void set_flat_params(const Vector& v);

  // He-uniform for conv/dense layers feeding relu (batchnorm skipped when
  // looking ahead), Xavier-uniform otherwise; biases zero.
  void initialize(Rng& rng);

 private:
  void check_input(const Tensor& in) const;

  Shape input_shape_;
  int n_classes_ = 0;
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace upcall::nn

#endif  // UPCALL_NN_NETWORK_H_
