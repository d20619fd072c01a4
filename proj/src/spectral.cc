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

#include "upcall/spectral.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace upcall {

namespace {

// Rows of `m` are in ascending frequency; images put high frequency on top.
Image log_image_flipped(const Matrix& freq_by_time, double log_floor) {
  Matrix logm = freq_by_time.unaryExpr(
      [log_floor](double v) { return std::log10(std::max(v, log_floor)); });
  return to_image(logm.colwise().reverse());
}

}  // namespace

void SpectrogramConfig::validate() const {
  if (hop <= 0 || hop > window_len || window_len > fft_len)
    throw ValidationError("spectrogram: require 0 < hop <= window_len <= fft_len");
  if (!(log_floor > 0)) throw ValidationError("spectrogram: log_floor must be positive");
}

void ScalogramConfig::validate(int sample_rate_hz) const {
  if (n_scales < 2) throw ValidationError("scalogram: n_scales must be >= 2");
  if (!(f_min_hz > 0) || !(f_min_hz < f_max_hz) || !(f_max_hz < sample_rate_hz / 2.0))
    throw ValidationError("scalogram: require 0 < f_min < f_max < Nyquist");
  if (!(omega0 > 0)) throw ValidationError("scalogram: omega0 must be positive");
  if (!(log_floor > 0)) throw ValidationError("scalogram: log_floor must be positive");
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

int frame_count(size_t n, int window, int hop) {
  if (n < static_cast<size_t>(window)) return 0;
  return 1 + static_cast<int>((n - window) / hop);
}

Matrix stft_magnitudes(std::span<const double> samples, const SpectrogramConfig& cfg) {
  cfg.validate();
  const int frames = frame_count(samples.size(), cfg.window_len, cfg.hop);
  if (frames == 0) throw ValidationError("spectrogram: clip shorter than one window");
  const auto win = hann_window(cfg.window_len);
  const int bins = cfg.fft_len / 2 + 1;
  Matrix mags(frames, bins);
  std::vector<double> frame(static_cast<size_t>(cfg.window_len));
  for (int f = 0; f < frames; ++f) {
    const size_t off = static_cast<size_t>(f) * cfg.hop;
    for (int i = 0; i < cfg.window_len; ++i) frame[i] = samples[off + i] * win[i];
    auto spec = fft_real(frame, static_cast<size_t>(cfg.fft_len));
    for (int k = 0; k < bins; ++k) mags(f, k) = std::abs(spec[k]);
  }
  return mags;
}

Image stft_spectrogram(const Clip& clip, const SpectrogramConfig& cfg) {
  Matrix mags = stft_magnitudes(clip.samples, cfg);
  return log_image_flipped(mags.transpose(), cfg.log_floor);
}

std::vector<double> scalogram_frequencies(const ScalogramConfig& cfg) {
  std::vector<double> f(static_cast<size_t>(cfg.n_scales));
  const double ratio = cfg.f_max_hz / cfg.f_min_hz;
  for (int j = 0; j < cfg.n_scales; ++j)
    f[j] = cfg.f_min_hz * std::pow(ratio, static_cast<double>(j) / (cfg.n_scales - 1));
  f.back() = cfg.f_max_hz;
  return f;
}

double morlet_scale(double omega0, double freq_hz) {
  return omega0 / (2.0 * std::numbers::pi * freq_hz);
}

int morlet_half_width(double scale_s, int sample_rate_hz) {
  return static_cast<int>(std::ceil(4.0 * scale_s * sample_rate_hz));
}

Complex morlet(double t, double omega0) {
  static const double norm = std::pow(std::numbers::pi, -0.25);
  return norm * std::exp(-0.5 * t * t) * Complex(std::cos(omega0 * t), std::sin(omega0 * t));
}

CwtPlan::CwtPlan(const ScalogramConfig& cfg, int sample_rate_hz, size_t length)
    : cfg_(cfg), rate_(sample_rate_hz), length_(length) {
  cfg_.validate(sample_rate_hz);
  if (length == 0) throw ValidationError("scalogram: empty clip");
  freqs_ = scalogram_frequencies(cfg_);
  const double dt = 1.0 / sample_rate_hz;
  const int max_half = morlet_half_width(morlet_scale(cfg_.omega0, freqs_.front()), rate_);
  fft_len_ = next_pow2(length + static_cast<size_t>(max_half) + 1);
  kernel_spectra_.reserve(freqs_.size());
  for (double f : freqs_) {
    const double s = morlet_scale(cfg_.omega0, f);
    const int half = morlet_half_width(s, rate_);
    // W(b) = sum_n x[n] conj(psi_s(t_n - t_b)) dt with psi_s(t) = psi(t/s)/s,
    // written as a convolution with k[m] = conj(psi_s(-m dt)) dt.
    std::vector<Complex> kernel(fft_len_, Complex(0.0, 0.0));
    std::vector<Complex> taps;
    for (int m = -half; m <= half; ++m) {
      Complex v = std::conj(morlet(-m * dt / s, cfg_.omega0)) * (dt / s);
      kernel[static_cast<size_t>((m + static_cast<long>(fft_len_)) % static_cast<long>(fft_len_))] =
          v;
      taps.push_back(v);
    }
    kernel_spectra_.push_back(fft(kernel));
    kernels_.push_back(std::move(taps));
  }
}

Matrix CwtPlan::magnitudes(std::span<const double> samples) const {
  if (samples.size() != length_) throw ValidationError("scalogram: clip length differs from plan");
  auto xs = fft_real(samples, fft_len_);
  Matrix out(static_cast<Eigen::Index>(freqs_.size()), static_cast<Eigen::Index>(length_));
  std::vector<Complex> prod(fft_len_);
  for (size_t j = 0; j < freqs_.size(); ++j) {
    const auto& ks = kernel_spectra_[j];
    for (size_t i = 0; i < fft_len_; ++i) prod[i] = xs[i] * ks[i];
    auto w = ifft(prod);
    for (size_t b = 0; b < length_; ++b) out(static_cast<Eigen::Index>(j), b) = std::abs(w[b]);
  }
  return out;
}

Matrix CwtPlan::magnitudes_at(std::span<const double> samples, std::span<const size_t> columns) const {
  if (samples.size() != length_) throw ValidationError("scalogram: clip length differs from plan");
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(freqs_.size()), static_cast<Eigen::Index>(length_));
  const long n = static_cast<long>(length_);
  for (size_t j = 0; j < freqs_.size(); ++j) {
    const auto& taps = kernels_[j];
    const long half = static_cast<long>(taps.size() / 2);
    for (size_t b : columns) {
      if (b >= length_) throw ValidationError("scalogram: column out of range");
      // w[b] = sum_m k[m] x[b - m]
      const long lo = std::max(-half, static_cast<long>(b) - n + 1);
      const long hi = std::min(half, static_cast<long>(b));
      Complex acc(0.0, 0.0);
      for (long m = lo; m <= hi; ++m) acc += taps[static_cast<size_t>(m + half)] * samples[b - m];
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) = std::abs(acc);
    }
  }
  return out;
}

Matrix cwt_magnitudes(const Clip& clip, const ScalogramConfig& cfg) {
  CwtPlan plan(cfg, clip.sample_rate_hz, clip.samples.size());
  return plan.magnitudes(clip.samples);
}

Image cwt_scalogram(const Clip& clip, const CwtPlan& plan, double log_floor) {
  // The resize reads only the two source columns around each output column.
  std::vector<size_t> cols;
  const size_t w = plan.length();
  if (w >= 2) {
    for (int j = 0; j < kImageSize; ++j) {
      const double x = static_cast<double>(j) * static_cast<double>(w - 1) / (kImageSize - 1);
      const size_t x0 = std::min(static_cast<size_t>(x), w - 2);
      cols.push_back(x0);
      cols.push_back(x0 + 1);
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  }
  return log_image_flipped(plan.magnitudes_at(clip.samples, cols), log_floor);
}

Image cwt_scalogram(const Clip& clip, const ScalogramConfig& cfg) {
  CwtPlan plan(cfg, clip.sample_rate_hz, clip.samples.size());
  return cwt_scalogram(clip, plan, cfg.log_floor);
}

}  // namespace upcall
