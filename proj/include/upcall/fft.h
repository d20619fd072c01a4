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

#ifndef UPCALL_FFT_H_
#define UPCALL_FFT_H_

#include <complex>
#include <span>
#include <vector>

namespace upcall {

using Complex = std::complex<double>;

// Smallest power of two >= n.
size_t next_pow2(size_t n);

// Forward DFT of a real sequence zero-padded (or truncated) to n points.
// Returns all n bins.
std::vector<Complex> fft_real(std::span<const double> x, size_t n);

// In-place complex transforms; inverse is scaled by 1/n.
std::vector<Complex> fft(const std::vector<Complex>& x);
std::vector<Complex> ifft(const std::vector<Complex>& x);

}  // namespace upcall

#endif  // UPCALL_FFT_H_
