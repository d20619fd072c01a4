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

#ifndef UPCALL_SPECTRAL_H_
#define UPCALL_SPECTRAL_H_

#include <span>
#include <vector>

#include "upcall/audio.h"
#include "upcall/fft.h"
#include "upcall/image.h"

namespace upcall {

struct SpectrogramConfig {
  int window_len = 256;
  int hop = 64;
  int fft_len = 256;
  double log_floor = 1e-10;

  void validate() const;
};

struct ScalogramConfig {
  double omega0 = 6.0;
  int n_scales = 100;
  double f_min_hz = 30.0;
  double f_max_hz = 500.0;
  double log_floor = 1e-10;

  void validate(int sample_rate_hz) const;
};

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

// Number of full frames of length `window` at stride `hop` in n samples.
int frame_count(size_t n, int window, int hop);

// |DFT| of each Hann-windowed frame: frames x (fft_len/2 + 1).
Matrix stft_magnitudes(std::span<const double> samples, const SpectrogramConfig& cfg);

// Log-magnitude STFT resized to 100x100, low frequencies at the bottom.
Image stft_spectrogram(const Clip& clip, const SpectrogramConfig& cfg);

// Pseudo-frequencies (ascending) of the analysis scales.
std::vector<double> scalogram_frequencies(const ScalogramConfig& cfg);

// Morlet scale (seconds) whose pseudo-frequency omega0 / (2 pi s) equals f.
double morlet_scale(double omega0, double freq_hz);

// Half-width, in samples, of the truncated Morlet kernel at scale s.
int morlet_half_width(double scale_s, int sample_rate_hz);

// Complex Morlet wavelet psi(t) = pi^(-1/4) exp(i omega0 t) exp(-t^2 / 2).
Complex morlet(double t, double omega0);

// Precomputed kernel spectra for a fixed (config, rate, length). Reusable and
// read-only after construction.
class CwtPlan {
 public:
  CwtPlan(const ScalogramConfig& cfg, int sample_rate_hz, size_t length);

  // |W(scale, t)|: n_scales x length, row j at frequencies()[j].
  Matrix magnitudes(std::span<const double> samples) const;
  // Same values by direct summation, only at the listed time indices; other
  // columns are left at zero.
  Matrix magnitudes_at(std::span<const double> samples, std::span<const size_t> columns) const;
  const std::vector<double>& frequencies() const { return freqs_; }
  size_t length() const { return length_; }
  int sample_rate_hz() const { return rate_; }

 private:
  ScalogramConfig cfg_;
  int rate_;
  size_t length_;
  size_t fft_len_;
  std::vector<double> freqs_;
  std::vector<std::vector<Complex>> kernel_spectra_;
  std::vector<std::vector<Complex>> kernels_;  // taps for m = -half..half
};

Matrix cwt_magnitudes(const Clip& clip, const ScalogramConfig& cfg);

// Log-magnitude CWT resized to 100x100, low frequencies at the bottom.
Image cwt_scalogram(const Clip& clip, const ScalogramConfig& cfg);
Image cwt_scalogram(const Clip& clip, const CwtPlan& plan, double log_floor);

}  // namespace upcall

#endif  // UPCALL_SPECTRAL_H_
