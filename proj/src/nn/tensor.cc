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

#include "upcall/nn/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace upcall::nn {

size_t shape_numel(const Shape& s) {
  size_t n = 1;
  for (int d : s) {
    if (d < 0) throw ValidationError("negative tensor dimension");
    n *= static_cast<size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

Tensor gather_rows(const Tensor& t, std::span<const size_t> idx) {
  Shape s = t.shape;
  s[0] = static_cast<int>(idx.size());
  Tensor out(s);
  const size_t stride = t.stride0();
  for (size_t i = 0; i < idx.size(); ++i)
    std::memcpy(out.data.data() + i * stride, t.data.data() + idx[i] * stride,
                stride * sizeof(double));
  return out;
}

Tensor stack(const std::vector<Tensor>& samples) {
  if (samples.empty()) throw ValidationError("stack: no samples");
  Shape s{static_cast<int>(samples.size())};
  s.insert(s.end(), samples[0].shape.begin(), samples[0].shape.end());
  Tensor out(s);
  const size_t stride = samples[0].size();
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].shape != samples[0].shape) throw ValidationError("stack: shape mismatch");
    std::copy(samples[i].data.begin(), samples[i].data.end(), out.data.begin() + i * stride);
  }
  return out;
}

Tensor one_hot(std::span<const int> labels, int n_classes) {
  Tensor t({static_cast<int>(labels.size()), n_classes});
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw ValidationError("one_hot: label out of range");
    t.data[i * n_classes + labels[i]] = 1.0;
  }
  return t;
}

}  // namespace upcall::nn
