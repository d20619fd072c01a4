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

#include "upcall/nn/network.h"

#include <algorithm>
#include <cmath>

namespace upcall::nn {

int Prediction::argmax() const {
  return static_cast<int>(std::max_element(posterior.begin(), posterior.end()) - posterior.begin());
}

Network::Network(Shape input_shape, int n_classes)
    : input_shape_(std::move(input_shape)), n_classes_(n_classes) {}

Network::Network(const Network& other)
    : input_shape_(other.input_shape_), n_classes_(other.n_classes_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void Network::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

std::vector<Shape> Network::shape_chain() const {
  std::vector<Shape> chain{input_shape_};
  for (const auto& l : layers_) chain.push_back(l->output_shape(chain.back()));
  return chain;
}

Shape Network::output_shape() const { return shape_chain().back(); }

bool Network::ends_in_softmax() const {
  return !layers_.empty() && layers_.back()->kind() == LayerKind::softmax;
}

void Network::validate() const {
  if (input_shape_.empty()) throw ValidationError("network: missing input shape");
  Shape out = output_shape();
  if (n_classes_ > 0) {
    if (!ends_in_softmax()) throw ValidationError("network: final layer must be softmax");
    if (out != Shape{n_classes_})
      throw ValidationError("network: output shape " + shape_str(out) + " != [n_classes]");
  }
}

void Network::check_input(const Tensor& in) const {
  if (in.shape.size() != input_shape_.size() + 1 ||
      !std::equal(input_shape_.begin(), input_shape_.end(), in.shape.begin() + 1))
    throw ValidationError("network: input shape " + shape_str(in.shape) + " does not match [N]+" +
                          shape_str(input_shape_));
}

Tensor Network::forward_batch(const Tensor& in, Mode mode) const {
  check_input(in);
  Tensor cur = in, next;
  for (const auto& l : layers_) {
    l->forward(cur, next, mode);
    std::swap(cur, next);
  }
  if (!cur.all_finite()) throw RuntimeFailure("network: non-finite activation in forward pass");
  return cur;
}

std::vector<Tensor> Network::forward_trace(const Tensor& in, Mode mode) const {
  check_input(in);
  std::vector<Tensor> acts;
  acts.reserve(layers_.size() + 1);
  acts.push_back(in);
  for (const auto& l : layers_) {
    Tensor out;
    l->forward(acts.back(), out, mode);
    acts.push_back(std::move(out));
  }
  if (!acts.back().all_finite())
    throw RuntimeFailure("network: non-finite activation in forward pass");
  return acts;
}

Prediction Network::forward(const Tensor& sample) const {
  Tensor batch = sample;
  if (sample.shape == input_shape_) batch.shape.insert(batch.shape.begin(), 1);
  if (batch.dim(0) != 1) throw ValidationError("network: forward expects a single sample");
  auto acts = forward_trace(batch, Mode::infer);
  Prediction p;
  p.posterior = acts.back().data;
  p.logits = ends_in_softmax() ? acts[acts.size() - 2].data : acts.back().data;
  return p;
}

size_t Network::num_trainable() const {
  size_t n = 0;
  for (const auto& l : layers_)
    for (const auto& p : l->params())
      if (p.trainable) n += p.value.size();
  return n;
}

Vector Network::flat_params() const {
  Vector v(static_cast<Eigen::Index>(num_trainable()));
  Eigen::Index k = 0;
  for (const auto& l : layers_)
    for (const auto& p : l->params())
      if (p.trainable)
        for (double x : p.value.data) v[k++] = x;
  return v;
}

void Network::set_flat_params(const Vector& v) {
  if (static_cast<size_t>(v.size()) != num_trainable())
    throw ValidationError("network: flat parameter size mismatch");
  Eigen::Index k = 0;
  for (auto& l : layers_)
    for (auto& p : l->params())
      if (p.trainable)
        for (double& x : p.value.data) x = v[k++];
}

void Network::initialize(Rng& rng) {
  for (size_t i = 0; i < layers_.size(); ++i) {
    Layer& l = *layers_[i];
    int fan_in = 0, fan_out = 0;
    if (l.kind() == LayerKind::conv2d) {
      auto& c = static_cast<Conv2d&>(l);
      fan_in = c.in_channels() * 9;
      fan_out = c.out_channels() * 9;
    } else if (l.kind() == LayerKind::dense) {
      auto& d = static_cast<Dense&>(l);
      fan_in = d.in_features();
      fan_out = d.out_features();
    } else {
      continue;
    }
    size_t j = i + 1;
    while (j < layers_.size() && layers_[j]->kind() == LayerKind::batchnorm) ++j;
    const bool feeds_relu = j < layers_.size() && layers_[j]->kind() == LayerKind::relu;
    const double bound = feeds_relu ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& p : l.params()) {
      if (p.name == "weight")
        for (double& x : p.value.data) x = rng.uniform(-bound, bound);
      else
        p.value.fill(0.0);
    }
  }
}

}  // namespace upcall::nn
