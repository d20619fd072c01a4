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

#ifndef UPCALL_DWT_H_
#define UPCALL_DWT_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "upcall/common.h"

namespace upcall {

enum class WaveletFamily { db, sym, coif };

// Orthogonal two-channel filter bank. `lowpass` is the scaling filter h with
// sum(h) = sqrt(2) and sum(h^2) = 1; `highpass` is its quadrature mirror
// g[j] = (-1)^j h[L-1-j].
struct WaveletSpec {
  WaveletFamily family = WaveletFamily::db;
  int order = 1;
  std::vector<double> lowpass;
  std::vector<double> highpass;

  std::string name() const;
  size_t length() const { return lowpass.size(); }
};

// Looks up "db1".."db7", "sym2".."sym5", "coif1".."coif5".
WaveletSpec wavelet_by_name(std::string_view name);
std::vector<std::string> available_wavelets();

struct DwtPyramid {
  std::vector<std::vector<double>> approximations;  // stage 1..stages
  std::vector<std::vector<double>> details;
  int stages = 0;
};

// One analysis stage with periodic extension:
//   a[k] = sum_j h[j] x[(2k + j) mod n],  d[k] = sum_j g[j] x[(2k + j) mod n].
// Odd-length input is extended by repeating its last sample.
void dwt_step(std::span<const double> x, const WaveletSpec& w, std::vector<double>* approx,
              std::vector<double>* detail);

// Synthesis stage inverting dwt_step for even-length inputs.
std::vector<double> idwt_step(std::span<const double> approx, std::span<const double> detail,
                              const WaveletSpec& w);

DwtPyramid dwt_decompose(std::span<const double> signal, const WaveletSpec& w, int stages);

}  // namespace upcall

#endif  // UPCALL_DWT_H_
