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

#include "upcall/nn/scg.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "upcall/nn/train.h"

namespace upcall::nn {

void ScgConfig::validate() const {
  if (max_iters < 0) throw ValidationError("scg: max_iters must be >= 0");
  if (!(sigma0 > 0) || !(lambda0 > 0) || !(goal_gradient_norm > 0))
    throw ValidationError("scg: sigma0, lambda0 and goal_gradient_norm must be positive");
}

double total_cross_entropy(const Network& net, const Tensor& inputs, const Tensor& targets,
                           Vector* gradient) {
  const double n = static_cast<double>(inputs.dim(0));
  if (!gradient) return n * loss_and_gradients(net, inputs, targets, Loss::cross_entropy, nullptr,
                                               Mode::infer);
  Gradients g = zero_gradients(net);
  double loss = loss_and_gradients(net, inputs, targets, Loss::cross_entropy, &g, Mode::infer);
  *gradient = flatten_gradients(net, g) * n;
  return n * loss;
}

ScgResult scg_train(Network& net, const Tensor& inputs, const Tensor& targets,
                    const ScgConfig& cfg) {
  cfg.validate();
  net.validate();
  for (size_t i = 0; i < net.num_layers(); ++i) {
    LayerKind k = net.layer(i).kind();
    if (k != LayerKind::dense && k != LayerKind::tanh && k != LayerKind::sigmoid &&
        k != LayerKind::softmax)
      throw ValidationError("scg: unsupported layer kind " + std::string(layer_kind_name(k)) +
                            " (fully connected networks only)");
  }
  if (inputs.dim(0) == 0) throw ValidationError("scg: no training samples");

  constexpr double kBetaMin = 1e-15, kBetaMax = 1e100;
  const Eigen::Index n_params = static_cast<Eigen::Index>(net.num_trainable());

  auto eval = [&](const Vector& w, Vector* g) {
    net.set_flat_params(w);
    return total_cross_entropy(net, inputs, targets, g);
  };

  Vector x = net.flat_params();
  Vector grad_new;
  double f_old = eval(x, &grad_new);
  ScgResult result;
  result.initial_loss = f_old;
  result.final_loss = f_old;
  result.gradient_norm = grad_new.norm();
  if (result.gradient_norm <= cfg.goal_gradient_norm) {
    net.set_flat_params(x);
    return result;
  }

  Vector grad_old = grad_new;
  Vector d = -grad_new;
  Vector g_plus;
  double beta = cfg.lambda0;
  bool success = true;
  Eigen::Index n_success = 0;
  double mu = 0, kappa = 0, gamma = 0;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    result.iterations = it;
    if (success) {
      mu = d.dot(grad_new);
      if (mu >= 0) {
        d = -grad_new;
        mu = d.dot(grad_new);
      }
      kappa = d.squaredNorm();
      if (kappa < std::numeric_limits<double>::epsilon()) break;
      const double sigma = cfg.sigma0 / std::sqrt(kappa);
      eval(x + sigma * d, &g_plus);
      gamma = d.dot(g_plus - grad_new) / sigma;
    }
    double delta = gamma + beta * kappa;
    if (delta <= 0) {
      delta = beta * kappa;
      beta -= gamma / kappa;
    }
    const double alpha = -mu / delta;
    Vector x_new = x + alpha * d;
    const double f_new = eval(x_new, nullptr);
    if (!std::isfinite(f_new)) throw RuntimeFailure("scg: non-finite loss");
    const double comparison = 2.0 * (f_new - f_old) / (alpha * mu);
    if (comparison >= 0 && f_new <= f_old) {
      success = true;
      ++n_success;
      x = std::move(x_new);
      f_old = f_new;
      grad_old = grad_new;
      eval(x, &grad_new);
      result.gradient_norm = grad_new.norm();
      if (result.gradient_norm <= cfg.goal_gradient_norm) break;
    } else {
      success = false;
    }
    if (comparison < 0.25) beta = std::min(4.0 * beta, kBetaMax);
    if (comparison > 0.75) beta = std::max(0.5 * beta, kBetaMin);
    if (n_success == n_params) {
      d = -grad_new;
      n_success = 0;
    } else if (success) {
      const double g = (grad_old - grad_new).dot(grad_new) / mu;
      d = g * d - grad_new;
    }
  }
  net.set_flat_params(x);
  result.final_loss = f_old;
  return result;
}

}  // namespace upcall::nn
