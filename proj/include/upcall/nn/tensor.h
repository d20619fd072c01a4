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

#ifndef UPCALL_NN_TENSOR_H_
#define UPCALL_NN_TENSOR_H_

#include <span>
#include <string>
#include <vector>

#include "upcall/common.h"

namespace upcall::nn {

using Shape = std::vector<int>;

size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major float64 array. Batched tensors carry the batch size as the
// leading dimension.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(shape_numel(shape), fill) {}

  size_t size() const { return data.size(); }
  int dim(size_t i) const { return shape.at(i); }
  int batch() const { return shape.empty() ? 0 : shape[0]; }
  // Elements per leading-dimension slice.
  size_t stride0() const { return shape.empty() || shape[0] == 0 ? 0 : data.size() / shape[0]; }
  std::span<double> row(size_t i) { return {data.data() + i * stride0(), stride0()}; }
  std::span<const double> row(size_t i) const { return {data.data() + i * stride0(), stride0()}; }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool all_finite() const;

  bool operator==(const Tensor& o) const { return shape == o.shape && data == o.data; }
};

// Batch of the rows `idx` (along the leading dimension).
Tensor gather_rows(const Tensor& t, std::span<const size_t> idx);

// Stacks per-sample tensors of identical shape into a batch.
Tensor stack(const std::vector<Tensor>& samples);

Tensor one_hot(std::span<const int> labels, int n_classes);

}  // namespace upcall::nn

#endif  // UPCALL_NN_TENSOR_H_
