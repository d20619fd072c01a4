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

#ifndef UPCALL_NN_SCG_H_
#define UPCALL_NN_SCG_H_

#include "upcall/nn/network.h"

namespace upcall::nn {

struct ScgConfig {
  int max_iters = 1000;
  double sigma0 = 5e-5;
  double lambda0 = 5e-7;
  double goal_gradient_norm = 1e-6;

  void validate() const;
};

struct ScgResult {
  int iterations = 0;
  double initial_loss = 0;
  double final_loss = 0;
  double gradient_norm = 0;
};

// Total (summed over samples) cross-entropy and its gradient with respect to
// the flat trainable parameters.
double total_cross_entropy(const Network& net, const Tensor& inputs, const Tensor& targets,
                           Vector* gradient);

// Scaled conjugate gradient (Moller 1993) on total cross-entropy. Only steps
// that do not increase the loss are accepted, so the final loss never exceeds
// the initial one. Accepts dense/tanh/sigmoid/softmax networks only.
ScgResult scg_train(Network& net, const Tensor& inputs, const Tensor& targets,
                    const ScgConfig& cfg);

}  // namespace upcall::nn

#endif  // UPCALL_NN_SCG_H_
