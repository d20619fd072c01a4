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

#include "upcall/nn/train.h"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace upcall::nn {

namespace {

// Keeps large activation buffers on the heap instead of per-call mmap regions.
void keep_large_allocations() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ValidationError("train: learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (epochs < 0) throw ValidationError("train: epochs must be >= 0");
  if (!(momentum >= 0 && momentum < 1)) throw ValidationError("train: momentum must be in [0,1)");
  if (!(l2 >= 0)) throw ValidationError("train: l2 must be >= 0");
}

Gradients zero_gradients(const Network& net) {
  Gradients g(net.num_layers());
  for (size_t i = 0; i < net.num_layers(); ++i)
    for (const auto& p : net.layer(i).params()) g[i].emplace_back(p.value.shape);
  return g;
}

Vector flatten_gradients(const Network& net, const Gradients& g) {
  Vector v(static_cast<Eigen::Index>(net.num_trainable()));
  Eigen::Index k = 0;
  for (size_t i = 0; i < net.num_layers(); ++i) {
    const auto& params = net.layer(i).params();
    for (size_t j = 0; j < params.size(); ++j)
      if (params[j].trainable)
        for (double x : g[i][j].data) v[k++] = x;
  }
  return v;
}

double cross_entropy(std::span<const double> posterior, std::span<const double> target) {
  double l = 0;
  for (size_t i = 0; i < posterior.size(); ++i)
    if (target[i] != 0) l -= target[i] * std::log(std::max(posterior[i], 1e-15));
  return l;
}

double loss_and_gradients(const Network& net, const Tensor& inputs, const Tensor& targets, Loss loss,
                          Gradients* grads, Mode mode, std::vector<Tensor>* trace) {
  auto acts = net.forward_trace(inputs, mode);
  const Tensor& y = acts.back();
  if (y.shape != targets.shape)
    throw ValidationError("loss: output shape " + shape_str(y.shape) + " != target shape " +
                          shape_str(targets.shape));
  const int N = inputs.dim(0);
  const size_t D = y.stride0();
  double value = 0;
  Tensor g(y.shape);
  size_t start = net.num_layers();  // layer index to begin backward at (exclusive upper bound)
  if (loss == Loss::cross_entropy) {
    if (!net.ends_in_softmax()) throw ValidationError("cross-entropy loss requires a softmax head");
    for (int n = 0; n < N; ++n) value += cross_entropy(y.row(n), targets.row(n));
    value /= N;
    for (size_t i = 0; i < y.size(); ++i) g.data[i] = (y.data[i] - targets.data[i]) / N;
    start = net.num_layers() - 1;  // skip the softmax layer
  } else {
    const double scale = 1.0 / (static_cast<double>(N) * static_cast<double>(D));
    for (size_t i = 0; i < y.size(); ++i) {
      const double d = y.data[i] - targets.data[i];
      value += d * d * scale;
      g.data[i] = 2.0 * d * scale;
    }
  }
  if (!std::isfinite(value)) throw RuntimeFailure("loss: non-finite value");
  if (grads) {
    Tensor gin;
    for (size_t i = start; i-- > 0;) {
      net.layer(i).backward(acts[i], acts[i + 1], g, i > 0 ? &gin : nullptr, (*grads)[i], mode);
      if (i > 0) std::swap(g, gin);
    }
  }
  if (trace) *trace = std::move(acts);
  return value;
}

double train_step(Network& net, const Tensor& inputs, const Tensor& targets, const TrainConfig& cfg,
                  SgdState& state, Loss loss) {
  if (inputs.dim(0) == 0) throw ValidationError("train_step: empty batch");
  Gradients grads = zero_gradients(net);
  std::vector<Tensor> trace;
  double objective = loss_and_gradients(net, inputs, targets, loss, &grads, Mode::train, &trace);
  if (state.velocity.empty()) state.velocity = zero_gradients(net);
  double penalty = 0;
  for (size_t i = 0; i < net.num_layers(); ++i)
    for (const auto& p : net.layer(i).params())
      if (p.trainable && p.decay)
        for (double w : p.value.data) penalty += w * w;
  objective += 0.5 * cfg.l2 * penalty;
  if (!std::isfinite(objective))
    throw RuntimeFailure("train_step: non-finite loss (learning rate " +
                         std::to_string(cfg.learning_rate) + " may be too high)");

  for (size_t i = 0; i < net.num_layers(); ++i) {
    Layer& layer = net.layer(i);
    layer.observe_batch(trace[i]);
    auto& params = layer.params();
    for (size_t j = 0; j < params.size(); ++j) {
      if (!params[j].trainable) continue;
      auto& w = params[j].value.data;
      auto& v = state.velocity[i][j].data;
      const auto& g = grads[i][j].data;
      const double decay = params[j].decay ? cfg.l2 : 0.0;
      for (size_t k = 0; k < w.size(); ++k) {
        v[k] = cfg.momentum * v[k] - cfg.learning_rate * (g[k] + decay * w[k]);
        w[k] += v[k];
      }
    }
  }
  return objective;
}

void fit(Network& net, const Tensor& inputs, const Tensor& targets, Loss loss,
         const TrainConfig& cfg) {
  cfg.validate();
  const size_t n = static_cast<size_t>(inputs.dim(0));
  if (n == 0) throw ValidationError("fit: no training samples");
  keep_large_allocations();
  Rng rng(cfg.seed);
  SgdState state;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t bs = static_cast<size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t b = 0; b < n; b += bs) {
      std::span<const size_t> idx(order.data() + b, std::min(bs, n - b));
      train_step(net, gather_rows(inputs, idx), gather_rows(targets, idx), cfg, state, loss);
    }
  }
}

Network train_supervised(Network net, const Tensor& inputs, std::span<const int> labels,
                         const TrainConfig& cfg) {
  cfg.validate();
  net.validate();
  if (labels.size() != static_cast<size_t>(inputs.dim(0)))
    throw ValidationError("train_supervised: label count differs from sample count");
  for (int c = 0; c < net.n_classes(); ++c)
    if (std::find(labels.begin(), labels.end(), c) == labels.end())
      throw ValidationError("train_supervised: class " + std::to_string(c) + " has no samples");
  fit(net, inputs, one_hot(labels, net.n_classes()), Loss::cross_entropy, cfg);
  finalize_batchnorm(net, inputs, cfg.batch_size);
  return net;
}

void finalize_batchnorm(Network& net, const Tensor& inputs, int batch_size) {
  std::vector<size_t> bn;
  for (size_t i = 0; i < net.num_layers(); ++i)
    if (net.layer(i).kind() == LayerKind::batchnorm) bn.push_back(i);
  if (bn.empty()) return;
  const size_t n = static_cast<size_t>(inputs.dim(0));
  std::vector<std::vector<double>> sum_mean(bn.size()), sum_sq(bn.size());
  std::vector<size_t> idx;
  double total = 0;
  for (size_t b = 0; b < n; b += static_cast<size_t>(batch_size)) {
    const size_t m = std::min(static_cast<size_t>(batch_size), n - b);
    idx.resize(m);
    std::iota(idx.begin(), idx.end(), b);
    auto trace = net.forward_trace(gather_rows(inputs, idx), Mode::train);
    for (size_t k = 0; k < bn.size(); ++k) {
      const auto& layer = static_cast<const BatchNorm&>(net.layer(bn[k]));
      std::vector<double> mean, var;
      layer.batch_statistics(trace[bn[k]], &mean, &var);
      if (sum_mean[k].empty()) {
        sum_mean[k].assign(mean.size(), 0.0);
        sum_sq[k].assign(mean.size(), 0.0);
      }
      for (size_t c = 0; c < mean.size(); ++c) {
        sum_mean[k][c] += static_cast<double>(m) * mean[c];
        sum_sq[k][c] += static_cast<double>(m) * (var[c] + mean[c] * mean[c]);
      }
    }
    total += static_cast<double>(m);
  }
  for (size_t k = 0; k < bn.size(); ++k) {
    std::vector<double> mean(sum_mean[k].size()), var(sum_mean[k].size());
    for (size_t c = 0; c < mean.size(); ++c) {
      mean[c] = sum_mean[k][c] / total;
      var[c] = std::max(0.0, sum_sq[k][c] / total - mean[c] * mean[c]);
    }
    static_cast<BatchNorm&>(net.layer(bn[k])).set_running(mean, var);
  }
}

Tensor predict(const Network& net, const Tensor& inputs, int chunk) {
  keep_large_allocations();
  const size_t n = static_cast<size_t>(inputs.dim(0));
  Shape out_shape{static_cast<int>(n)};
  for (int d : net.output_shape()) out_shape.push_back(d);
  Tensor out(out_shape);
  const size_t stride = out.stride0();
  std::vector<size_t> idx;
  for (size_t b = 0; b < n; b += static_cast<size_t>(chunk)) {
    const size_t m = std::min(static_cast<size_t>(chunk), n - b);
    idx.resize(m);
    std::iota(idx.begin(), idx.end(), b);
    Tensor y = net.forward_batch(gather_rows(inputs, idx), Mode::infer);
    std::copy(y.data.begin(), y.data.end(), out.data.begin() + b * stride);
  }
  return out;
}

double accuracy(const Network& net, const Tensor& inputs, std::span<const int> labels) {
  Tensor p = predict(net, inputs);
  size_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    auto row = p.row(i);
    int arg = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (arg == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double finite_difference_check(const Network& net, const Tensor& inputs, const Tensor& targets,
                               double epsilon, Loss loss, Mode mode) {
  if (!(epsilon > 0)) throw ValidationError("finite_difference_check: epsilon must be > 0");
  Network probe = net;
  Gradients grads = zero_gradients(probe);
  loss_and_gradients(probe, inputs, targets, loss, &grads, mode);
  double worst = 0;
  for (size_t i = 0; i < probe.num_layers(); ++i) {
    auto& params = probe.layer(i).params();
    for (size_t j = 0; j < params.size(); ++j) {
      if (!params[j].trainable) continue;
      auto& w = params[j].value.data;
      for (size_t k = 0; k < w.size(); ++k) {
        const double saved = w[k];
        w[k] = saved + epsilon;
        const double up = loss_and_gradients(probe, inputs, targets, loss, nullptr, mode);
        w[k] = saved - epsilon;
        const double down = loss_and_gradients(probe, inputs, targets, loss, nullptr, mode);
        w[k] = saved;
        const double numeric = (up - down) / (2 * epsilon);
        const double analytic = grads[i][j].data[k];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
      }
    }
  }
  return worst;
}

}  // namespace upcall::nn
