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

#ifndef UPCALL_TESTS_NN_FIXTURES_H_
#define UPCALL_TESTS_NN_FIXTURES_H_

#include <algorithm>
#include <limits>
#include <string>

#include "upcall/nn/layers.h"
#include "upcall/nn/network.h"

namespace upcall::testing {

// Small random networks covering every layer kind. Variant picks the layer
// path; rng picks widths, spatial size and initial weights. Batchnorm never
// directly follows a biased layer: in train mode that bias has an exactly
// zero gradient, which a relative-error check cannot resolve. Nor does it
// follow a relu on a dense path, where a unit active on a single sample makes
// the layer nearly scale-invariant and its gradients vanishingly small.
inline nn::Network random_network(int variant, Rng& rng, std::string* description = nullptr) {
  using namespace nn;
  const int hw = 2 * static_cast<int>(rng.uniform_int(3, 5));
  const int c1 = static_cast<int>(rng.uniform_int(2, 4)), c2 = static_cast<int>(rng.uniform_int(1, 3));
  const int width = static_cast<int>(rng.uniform_int(3, 7));
  Network net;
  std::string d;
  switch (variant % 6) {
    case 0: {  // one conv block
      net = Network({1, hw, hw}, 2);
      net.emplace<Conv2d>(1, c1, false);
      net.emplace<BatchNorm>(c1);
      net.emplace<Activation>(LayerKind::relu);
      net.emplace<MaxPool>();
      net.emplace<Flatten>();
      net.emplace<Dense>(c1 * (hw / 2) * (hw / 2), 2);
      d = "conv-bn-relu-pool-dense";
      break;
    }
    case 1: {  // two conv blocks on 8x8
      net = Network({1, 8, 8}, 2);
      net.emplace<Conv2d>(1, c1, false);
      net.emplace<BatchNorm>(c1);
      net.emplace<Activation>(LayerKind::relu);
      net.emplace<MaxPool>();
      net.emplace<Conv2d>(c1, c2, false);
      net.emplace<BatchNorm>(c2);
      net.emplace<Activation>(LayerKind::relu);
      net.emplace<MaxPool>();
      net.emplace<Flatten>();
      net.emplace<Dense>(c2 * 4, 2);
      d = "2x(conv-bn-relu-pool)-dense";
      break;
    }
    case 2: {  // autoencoder-style stack
      const int in = static_cast<int>(rng.uniform_int(6, 12));
      net = Network({in}, 2);
      net.emplace<Dense>(in, width);
      net.emplace<Activation>(LayerKind::sigmoid);
      net.emplace<Dense>(width, 3);
      net.emplace<Activation>(LayerKind::sigmoid);
      net.emplace<Dense>(3, 2);
      d = "dense-sigmoid-dense-sigmoid-dense";
      break;
    }
    case 3: {  // fusion-style
      const int in = static_cast<int>(rng.uniform_int(4, 10));
      net = Network({in}, 2);
      net.emplace<Dense>(in, width);
      net.emplace<Activation>(LayerKind::tanh);
      net.emplace<Dense>(width, 2);
      d = "dense-tanh-dense";
      break;
    }
    case 4: {  // conv with bias, tanh, dense batchnorm
      net = Network({2, hw, hw}, 2);
      net.emplace<Conv2d>(2, c1, true);
      net.emplace<Activation>(LayerKind::tanh);
      net.emplace<MaxPool>();
      net.emplace<Flatten>();
      net.emplace<Dense>(c1 * (hw / 2) * (hw / 2), width);
      net.emplace<Activation>(LayerKind::sigmoid);
      net.emplace<BatchNorm>(width);
      net.emplace<Dense>(width, 2);
      d = "conv(bias)-tanh-pool-dense-sigmoid-bn-dense";
      break;
    }
    default: {  // dense relu path
      const int in = static_cast<int>(rng.uniform_int(5, 9));
      net = Network({in}, 2);
      net.emplace<Dense>(in, width);
      net.emplace<Activation>(LayerKind::tanh);
      net.emplace<BatchNorm>(width);
      net.emplace<Activation>(LayerKind::relu);
      net.emplace<Dense>(width, 2);
      d = "dense-tanh-bn-relu-dense";
      break;
    }
  }
  net.emplace<Activation>(LayerKind::softmax);
  net.initialize(rng);
  // Non-trivial batchnorm affine parameters.
  for (size_t i = 0; i < net.num_layers(); ++i)
    if (net.layer(i).kind() == LayerKind::batchnorm)
      for (auto& p : net.layer(i).params())
        if (p.trainable)
          for (double& v : p.value.data) v = rng.uniform(0.5, 1.5) * (p.name == "gamma" ? 1.0 : 0.3);
  if (description) *description = d;
  return net;
}

// Smallest distance of any relu input from 0 and of any max-pool window
// maximum from its runner-up, over both train and infer passes.
inline double kink_margin(const nn::Network& net, const nn::Tensor& x) {
  double margin = std::numeric_limits<double>::infinity();
  for (nn::Mode mode : {nn::Mode::train, nn::Mode::infer}) {
    auto acts = net.forward_trace(x, mode);
    for (size_t i = 0; i < net.num_layers(); ++i) {
      const nn::Tensor& in = acts[i];
      if (net.layer(i).kind() == nn::LayerKind::relu) {
        for (double v : in.data) margin = std::min(margin, std::abs(v));
      } else if (net.layer(i).kind() == nn::LayerKind::maxpool) {
        const int planes = in.dim(0) * in.dim(1), H = in.dim(2), W = in.dim(3);
        for (int p = 0; p < planes; ++p)
          for (int y = 0; y + 1 < H; y += 2)
            for (int xx = 0; xx + 1 < W; xx += 2) {
              const double* r0 = in.data.data() + (static_cast<size_t>(p) * H + y) * W + xx;
              double v[4] = {r0[0], r0[1], r0[W], r0[W + 1]};
              std::sort(v, v + 4);
              // Ties among relu zeros carry no gradient and are not kinks.
              if (v[3] != 0.0) margin = std::min(margin, v[3] - v[2]);
            }
      }
    }
  }
  return margin;
}

// Continuous random inputs and one-hot targets for a network. Inputs are
// redrawn until no relu or max-pool kink lies within `margin`, so central
// differences never straddle a non-differentiable point.
inline std::pair<nn::Tensor, nn::Tensor> random_batch(const nn::Network& net, int n, Rng& rng,
                                                      double margin = 0.0) {
  nn::Shape s{n};
  for (int d : net.input_shape()) s.push_back(d);
  nn::Tensor x(s);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (double& v : x.data) v = rng.normal();
    if (margin <= 0 || kink_margin(net, x) > margin) break;
  }
  nn::Tensor t({n, 2});
  for (int i = 0; i < n; ++i) t.data[static_cast<size_t>(i) * 2 + static_cast<size_t>(i % 2)] = 1.0;
  return {x, t};
}

}  // namespace upcall::testing

#endif  // UPCALL_TESTS_NN_FIXTURES_H_
