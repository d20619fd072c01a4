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

#include "upcall/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "upcall/fft.h"

namespace upcall {

namespace {

constexpr double kTaperFraction = 0.05;

double rms(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

void scale_to_rms(std::vector<double>& x, double target) {
  const double r = rms(x);
  if (r > 0)
    for (double& v : x) v *= target / r;
}

std::vector<double> white(size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  return x;
}

std::vector<double> pink(size_t n, int sample_rate_hz, Rng& rng) {
  const size_t nfft = next_pow2(n);
  auto spec = fft_real(white(nfft, rng), nfft);
  spec[0] = 0.0;
  // Amplitude ~ 1/sqrt(f) gives a 1/f power spectrum; mirror bins keep the
  // result real.
  for (size_t k = 1; k < nfft; ++k) {
    size_t kk = k <= nfft / 2 ? k : nfft - k;
    double f = static_cast<double>(kk) * sample_rate_hz / static_cast<double>(nfft);
    spec[k] /= std::sqrt(f);
  }
  auto time = ifft(spec);
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = time[i].real();
  return x;
}

void add_clicks(std::vector<double>& x, int sample_rate_hz, double background_rms, Rng& rng) {
  const int clicks = static_cast<int>(rng.uniform_int(1, 3));
  const int len = std::max(4, sample_rate_hz / 100);  // ~10 ms bursts
  for (int c = 0; c < clicks; ++c) {
    const size_t at = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(x.size()) - 1));
    const double amp = background_rms * rng.uniform(5.0, 10.0);
    const double tau = len / 4.0;
    for (int i = 0; i < len && at + i < x.size(); ++i)
      x[at + i] += amp * std::exp(-i / tau) * rng.normal();
  }
}

std::vector<double> make_noise(const SynthConfig& cfg, size_t n, Rng& rng) {
  std::vector<double> x;
  switch (cfg.noise_kind) {
    case NoiseKind::white:
      x = white(n, rng);
      break;
    case NoiseKind::pink:
      x = pink(n, cfg.sample_rate_hz, rng);
      break;
    case NoiseKind::transient:
      x = white(n, rng);
      break;
  }
  scale_to_rms(x, cfg.noise_rms);
  if (cfg.noise_kind == NoiseKind::transient) add_clicks(x, cfg.sample_rate_hz, cfg.noise_rms, rng);
  return x;
}

double tukey(size_t i, size_t n) {
  const double taper = std::max(1.0, kTaperFraction * static_cast<double>(n));
  const double pos = static_cast<double>(i);
  const double from_end = static_cast<double>(n - 1 - i);
  const double d = std::min(pos, from_end);
  if (d >= taper) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * d / taper);
}

}  // namespace

std::string_view noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::white: return "white";
    case NoiseKind::pink: return "pink";
    case NoiseKind::transient: return "transient";
  }
  return "?";
}

NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "white") return NoiseKind::white;
  if (s == "pink") return NoiseKind::pink;
  if (s == "transient") return NoiseKind::transient;
  throw ValidationError("unknown noise kind '" + std::string(s) + "'");
}

void SynthConfig::validate() const {
  if (sample_rate_hz <= 0) throw ValidationError("synth: sample rate must be positive");
  const double nyquist = sample_rate_hz / 2.0;
  if (!(f_start_hz > 0) || !(f_start_hz < f_end_hz) || !(f_end_hz < nyquist))
    throw ValidationError("synth: require 0 < f_start < f_end < Nyquist");
  if (!std::isfinite(snr_db)) throw ValidationError("synth: snr_db must be finite");
  if (chirp_count < 1) throw ValidationError("synth: chirp_count must be >= 1");
  if (!(duration_s > 0)) throw ValidationError("synth: duration must be positive");
  if (!(noise_rms > 0)) throw ValidationError("synth: noise_rms must be positive");
}

SynthParts synth_upcall_parts(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  const size_t n = Clip::expected_length(cfg.duration_s, cfg.sample_rate_hz);
  const double dt = 1.0 / cfg.sample_rate_hz;
  std::vector<double> clean(n, 0.0);
  const size_t seg = n / static_cast<size_t>(cfg.chirp_count);
  if (seg < 4) throw ValidationError("synth: chirps too short for the clip length");
  for (int c = 0; c < cfg.chirp_count; ++c) {
    const size_t begin = static_cast<size_t>(c) * seg;
    const size_t len = c + 1 == cfg.chirp_count ? n - begin : seg;
    const double span_s = static_cast<double>(len) * dt;
    const double rate = (cfg.f_end_hz - cfg.f_start_hz) / span_s;
    const double phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) * dt;
      const double phase = phase0 + 2.0 * std::numbers::pi * (cfg.f_start_hz * t + 0.5 * rate * t * t);
      clean[begin + i] = tukey(i, len) * std::sin(phase);
    }
  }
  std::vector<double> noise = make_noise(cfg, n, rng);
  const double gain = std::pow(10.0, cfg.snr_db / 20.0) * rms(noise) / rms(clean);
  for (double& v : clean) v *= gain;

  double peak = 0;
  for (size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(clean[i] + noise[i]));
  if (peak > 0.99) {
    const double s = 0.99 / peak;
    for (double& v : clean) v *= s;
    for (double& v : noise) v *= s;
  }
  SynthParts parts;
  parts.mixture.sample_rate_hz = cfg.sample_rate_hz;
  parts.mixture.duration_s = cfg.duration_s;
  parts.mixture.samples.resize(n);
  for (size_t i = 0; i < n; ++i) parts.mixture.samples[i] = clean[i] + noise[i];
  parts.clean = std::move(clean);
  parts.noise = std::move(noise);
  return parts;
}

Clip synth_upcall(const SynthConfig& cfg, Rng& rng) { return synth_upcall_parts(cfg, rng).mixture; }

Clip synth_noise(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  Clip clip;
  clip.sample_rate_hz = cfg.sample_rate_hz;
  clip.duration_s = cfg.duration_s;
  clip.samples = make_noise(cfg, Clip::expected_length(cfg.duration_s, cfg.sample_rate_hz), rng);
  double peak = 0;
  for (double v : clip.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.99)
    for (double& v : clip.samples) v *= 0.99 / peak;
  return clip;
}

void SynthDatasetConfig::validate() const {
  if (n_upcall < 0 || n_noise < 0) throw ValidationError("synth: negative quota");
  if (!(snr_min_db <= snr_max_db)) throw ValidationError("synth: snr_min must be <= snr_max");
  if (max_chirps < 1) throw ValidationError("synth: max_chirps must be >= 1");
  SynthConfig probe;
  probe.f_start_hz = f_start_hz;
  probe.f_end_hz = f_end_hz;
  probe.duration_s = duration_s;
  probe.sample_rate_hz = sample_rate_hz;
  probe.snr_db = snr_min_db;
  probe.validate();
  probe.snr_db = snr_max_db;
  probe.validate();
}

std::vector<LabeledClip> synth_dataset(const SynthDatasetConfig& cfg) {
  cfg.validate();
  std::vector<LabeledClip> out;
  out.reserve(static_cast<size_t>(cfg.n_upcall + cfg.n_noise));
  SynthConfig base;
  base.f_start_hz = cfg.f_start_hz;
  base.f_end_hz = cfg.f_end_hz;
  base.duration_s = cfg.duration_s;
  base.sample_rate_hz = cfg.sample_rate_hz;
  for (int i = 0; i < cfg.n_upcall; ++i) {
    Rng rng(derive_seed(cfg.seed, "synth/upcall", static_cast<uint64_t>(i)));
    SynthConfig c = base;
    c.snr_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
    c.chirp_count = static_cast<int>(rng.uniform_int(1, cfg.max_chirps));
    c.noise_kind = static_cast<NoiseKind>(rng.uniform_int(0, 2));
    out.push_back({synth_upcall(c, rng), Label::upcall});
  }
  for (int i = 0; i < cfg.n_noise; ++i) {
    Rng rng(derive_seed(cfg.seed, "synth/noise", static_cast<uint64_t>(i)));
    SynthConfig c = base;
    c.noise_kind = static_cast<NoiseKind>(rng.uniform_int(0, 2));
    out.push_back({synth_noise(c, rng), Label::noise});
  }
  return out;
}

}  // namespace upcall
