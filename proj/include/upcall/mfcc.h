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

#ifndef UPCALL_MFCC_H_
#define UPCALL_MFCC_H_

#include <span>
#include <vector>

#include "upcall/audio.h"
#include "upcall/dwt.h"

namespace upcall {

using FeatureVector = std::vector<double>;

struct MfccConfig {
  int n_mels = 20;
  int n_coeffs = 12;
  int window_len = 256;
  int hop = 128;
  double f_min_hz = 20.0;
  double f_max_hz = 1000.0;
  double log_floor = 1e-10;

  void validate(int sample_rate_hz) const;
  int fft_len() const;
  // Pooled vector length: per-coefficient mean and standard deviation.
  int dimension() const { return 2 * n_coeffs; }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters on the mel scale: n_mels x (fft_len/2 + 1).
Matrix mel_filterbank(int n_mels, int fft_len, int sample_rate_hz, double f_min_hz,
                      double f_max_hz);

// ln(max(filterbank energy, floor)) per frame: frames x n_mels.
Matrix log_mel_frames(std::span<const double> samples, int sample_rate_hz, const MfccConfig& cfg);

// Orthonormal DCT-II of each log-mel row, first n_coeffs kept.
Matrix mfcc_frames(std::span<const double> samples, int sample_rate_hz, const MfccConfig& cfg);

// Mean then population standard deviation of each coefficient over frames.
FeatureVector pool_mean_std(const Matrix& frames);

FeatureVector mfcc(const Clip& clip, const MfccConfig& cfg);

// MFCC config adapted to the stage-`stages` approximation band: rate and
// window/hop divided by 2^stages, band clipped to the new Nyquist.
MfccConfig scaled_mfcc_config(const MfccConfig& cfg, int sample_rate_hz, int stages);

// MFCC of the final DWT approximation, treated as a signal sampled at
// sample_rate / 2^stages.
FeatureVector dwt_mfcc_features(const Clip& clip, const WaveletSpec& wavelet, int stages,
                                const MfccConfig& cfg);

}  // namespace upcall

#endif  // UPCALL_MFCC_H_
