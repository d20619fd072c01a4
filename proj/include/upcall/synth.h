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

#ifndef UPCALL_SYNTH_H_
#define UPCALL_SYNTH_H_

#include <string_view>
#include <vector>

#include "upcall/audio.h"

namespace upcall {

enum class NoiseKind { white, pink, transient };

std::string_view noise_kind_name(NoiseKind k);
NoiseKind parse_noise_kind(std::string_view s);

struct SynthConfig {
  double f_start_hz = 50.0;
  double f_end_hz = 250.0;
  double duration_s = kDefaultClipSeconds;
  double snr_db = 5.0;
  int chirp_count = 1;
  NoiseKind noise_kind = NoiseKind::white;
  int sample_rate_hz = kDefaultSampleRate;
  // RMS of the background noise before any click bursts are added.
  double noise_rms = 0.1;

  void validate() const;
};

// Clean chirp and noise components of a synthetic up-call clip, already
// scaled so that rms(clean) / rms(noise) == 10^(snr_db / 20) and the mixture
// peak stays below 1.
struct SynthParts {
  std::vector<double> clean;
  std::vector<double> noise;
  Clip mixture;
};

// chirp_count linear FM sweeps f_start -> f_end placed back to back across the
// clip (each with a random start phase and a short Tukey taper), embedded in
// noise of the configured kind.
SynthParts synth_upcall_parts(const SynthConfig& cfg, Rng& rng);
Clip synth_upcall(const SynthConfig& cfg, Rng& rng);

// Noise-only clip: white (flat Gaussian), pink (1/f power spectrum), or
// transient (white plus 1-3 broadband clicks).
Clip synth_noise(const SynthConfig& cfg, Rng& rng);

struct LabeledClip {
  Clip clip;
  Label label = Label::noise;
};

// Quota-driven synthetic corpus. Clip i of each class is a pure function of
// (config, seed, class, i).
struct SynthDatasetConfig {
  int n_upcall = 10;
  int n_noise = 10;
  double snr_min_db = 0.0;
  double snr_max_db = 10.0;
  double f_start_hz = 50.0;
  double f_end_hz = 250.0;
  int max_chirps = 2;
  double duration_s = kDefaultClipSeconds;
  int sample_rate_hz = kDefaultSampleRate;
  uint64_t seed = 1;

  void validate() const;
};

std::vector<LabeledClip> synth_dataset(const SynthDatasetConfig& cfg);

}  // namespace upcall

#endif  // UPCALL_SYNTH_H_
