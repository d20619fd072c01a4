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

#include "upcall/mfcc.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "upcall/fft.h"
#include "upcall/spectral.h"

namespace upcall {

void MfccConfig::validate(int sample_rate_hz) const {
  if (n_mels < 1 || n_coeffs < 1 || n_coeffs > n_mels)
    throw ValidationError("mfcc: require 1 <= n_coeffs <= n_mels");
  if (window_len < 2 || hop < 1) throw ValidationError("mfcc: window_len >= 2 and hop >= 1");
  if (!(f_min_hz >= 0) || !(f_min_hz < f_max_hz) || f_max_hz > sample_rate_hz / 2.0)
    throw ValidationError("mfcc: band must satisfy 0 <= f_min < f_max <= Nyquist");
  if (!(log_floor > 0)) throw ValidationError("mfcc: log_floor must be positive");
}

int MfccConfig::fft_len() const { return static_cast<int>(next_pow2(static_cast<size_t>(window_len))); }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix mel_filterbank(int n_mels, int fft_len, int sample_rate_hz, double f_min_hz,
                      double f_max_hz) {
  const int bins = fft_len / 2 + 1;
  const double mlo = hz_to_mel(f_min_hz), mhi = hz_to_mel(f_max_hz);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / (n_mels + 1));
  Matrix fb = Matrix::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / fft_len;
      if (f > left && f <= center)
        fb(m, k) = (f - left) / (center - left);
      else if (f > center && f < right)
        fb(m, k) = (right - f) / (right - center);
    }
  }
  return fb;
}

Matrix log_mel_frames(std::span<const double> samples, int sample_rate_hz, const MfccConfig& cfg) {
  cfg.validate(sample_rate_hz);
  const int frames = frame_count(samples.size(), cfg.window_len, cfg.hop);
  if (frames == 0) throw ValidationError("mfcc: signal shorter than one window");
  const int nfft = cfg.fft_len();
  const int bins = nfft / 2 + 1;
  const Matrix fb = mel_filterbank(cfg.n_mels, nfft, sample_rate_hz, cfg.f_min_hz, cfg.f_max_hz);
  const auto win = hann_window(cfg.window_len);
  Matrix out(frames, cfg.n_mels);
  std::vector<double> frame(static_cast<size_t>(cfg.window_len));
  Vector power(bins);
  for (int f = 0; f < frames; ++f) {
    const size_t off = static_cast<size_t>(f) * cfg.hop;
    for (int i = 0; i < cfg.window_len; ++i) frame[i] = samples[off + i] * win[i];
    auto spec = fft_real(frame, static_cast<size_t>(nfft));
    for (int k = 0; k < bins; ++k) power[k] = std::norm(spec[k]);
    Vector energy = fb * power;
    for (int m = 0; m < cfg.n_mels; ++m) out(f, m) = std::log(std::max(energy[m], cfg.log_floor));
  }
  return out;
}

Matrix mfcc_frames(std::span<const double> samples, int sample_rate_hz, const MfccConfig& cfg) {
  Matrix logmel = log_mel_frames(samples, sample_rate_hz, cfg);
  const int M = cfg.n_mels;
  Matrix dct(cfg.n_coeffs, M);
  for (int k = 0; k < cfg.n_coeffs; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / M);
    for (int m = 0; m < M; ++m) dct(k, m) = scale * std::cos(std::numbers::pi * k * (m + 0.5) / M);
  }
  return logmel * dct.transpose();
}

FeatureVector pool_mean_std(const Matrix& frames) {
  const Eigen::Index n = frames.rows(), d = frames.cols();
  FeatureVector out(static_cast<size_t>(2 * d));
  for (Eigen::Index c = 0; c < d; ++c) {
    const double mean = frames.col(c).mean();
    const double var = (frames.col(c).array() - mean).square().sum() / static_cast<double>(n);
    out[c] = mean;
    out[d + c] = std::sqrt(var);
  }
  return out;
}

FeatureVector mfcc(const Clip& clip, const MfccConfig& cfg) {
  return pool_mean_std(mfcc_frames(clip.samples, clip.sample_rate_hz, cfg));
}

MfccConfig scaled_mfcc_config(const MfccConfig& cfg, int sample_rate_hz, int stages) {
  MfccConfig out = cfg;
  const int factor = 1 << stages;
  out.window_len = std::max(2, cfg.window_len / factor);
  out.hop = std::max(1, cfg.hop / factor);
  const double nyquist = sample_rate_hz / static_cast<double>(factor) / 2.0;
  out.f_max_hz = std::min(cfg.f_max_hz, nyquist);
  return out;
}

FeatureVector dwt_mfcc_features(const Clip& clip, const WaveletSpec& wavelet, int stages,
                                const MfccConfig& cfg) {
  if (stages < 1) throw ValidationError("dwt+mfcc: stages must be >= 1 (use mfcc for 0)");
  auto pyramid = dwt_decompose(clip.samples, wavelet, stages);
  const auto& approx = pyramid.approximations.back();
  const int rate = clip.sample_rate_hz >> stages;
  const MfccConfig scaled = scaled_mfcc_config(cfg, clip.sample_rate_hz, stages);
  if (approx.size() < static_cast<size_t>(scaled.window_len))
    throw ValidationError("dwt+mfcc: approximation shorter than one window");
  return pool_mean_std(mfcc_frames(approx, rate, scaled));
}

}  // namespace upcall
