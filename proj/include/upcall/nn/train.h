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

#ifndef UPCALL_NN_TRAIN_H_
#define UPCALL_NN_TRAIN_H_

#include <span>
#include <vector>

#include "upcall/nn/network.h"

namespace upcall::nn {

enum class Loss {
  cross_entropy,  // mean over samples; requires a softmax head
  mse,            // mean over samples and outputs of squared error
};

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 30;
  uint64_t seed = 0;
  double l2 = 1e-4;

  void validate() const;
};

// One tensor per parameter of each layer, shaped like the parameter.
using Gradients = std::vector<std::vector<Tensor>>;

Gradients zero_gradients(const Network& net);
// Trainable gradients in Network::flat_params() order.
Vector flatten_gradients(const Network& net, const Gradients& g);

// -sum_i target_i * ln(max(posterior_i, 1e-15)).
double cross_entropy(std::span<const double> posterior, std::span<const double> target);

// Data loss of a batch and its gradient with respect to every parameter
// (accumulated into *grads when non-null). For cross-entropy with a softmax
// head the softmax Jacobian is folded in: dL/dlogits = (p - t) / N.
double loss_and_gradients(const Network& net, const Tensor& inputs, const Tensor& targets, Loss loss,
                          Gradients* grads, Mode mode = Mode::train,
                          std::vector<Tensor>* trace = nullptr);

// Momentum velocities, one per parameter tensor.
struct SgdState {
  Gradients velocity;
};

// Momentum SGD on data loss + (l2 / 2) * ||weights||^2. Returns the objective
// before the update. Batchnorm running statistics are updated from the batch.
double train_step(Network& net, const Tensor& inputs, const Tensor& targets, const TrainConfig& cfg,
                  SgdState& state, Loss loss = Loss::cross_entropy);

// Epochs of shuffled mini-batches; bit-deterministic given cfg.seed.
void fit(Network& net, const Tensor& inputs, const Tensor& targets, Loss loss,
         const TrainConfig& cfg);

// fit() with cross-entropy on integer labels, then finalize_batchnorm().
Network train_supervised(Network net, const Tensor& inputs, std::span<const int> labels,
                         const TrainConfig& cfg);

// Replaces batchnorm running statistics with population statistics of the
// layer inputs over `inputs`, accumulated across consecutive batches.
void finalize_batchnorm(Network& net, const Tensor& inputs, int batch_size);

// Inference over a large input set in chunks; returns [N] + output shape.
Tensor predict(const Network& net, const Tensor& inputs, int chunk = 64);

double accuracy(const Network& net, const Tensor& inputs, std::span<const int> labels);

// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|,
// 1e-8) using central differences of the data loss. ReLU and max-pool kinks
// are measure-zero; callers should use continuous random inputs so that no
// pre-activation lies within epsilon of a kink.
double finite_difference_check(const Network& net, const Tensor& inputs, const Tensor& targets,
                               double epsilon, Loss loss = Loss::cross_entropy,
                               Mode mode = Mode::train);

}  // namespace upcall::nn

#endif  // UPCALL_NN_TRAIN_H_
