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

#include "upcall/fft.h"

#include <algorithm>

#include <unsupported/Eigen/FFT>

namespace upcall {

namespace {

// Eigen's FFT object caches twiddle tables per size; one per thread.
Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

}  // namespace

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<Complex> fft_real(std::span<const double> x, size_t n) {
  std::vector<Complex> in(n, Complex(0.0, 0.0));
  const size_t m = std::min(n, x.size());
  for (size_t i = 0; i < m; ++i) in[i] = Complex(x[i], 0.0);
  return fft(in);
}

std::vector<Complex> fft(const std::vector<Complex>& x) {
  if (x.size() <= 1) return x;
  std::vector<Complex> out;
  engine().fwd(out, x);
  return out;
}

std::vector<Complex> ifft(const std::vector<Complex>& x) {
  if (x.size() <= 1) return x;
  std::vector<Complex> out;
  engine().inv(out, x);  // Eigen scales the inverse by 1/n by default
  return out;
}

}  // namespace upcall
