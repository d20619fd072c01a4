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

#ifndef UPCALL_PIPELINE_H_
#define UPCALL_PIPELINE_H_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "upcall/audio.h"
#include "upcall/augment.h"
#include "upcall/fusion.h"
#include "upcall/spectral.h"

namespace upcall {

// How audio becomes the image pair; stored in every bundle so prediction
// reproduces training-time inputs.
struct FeatureConfig {
  int sample_rate_hz = kDefaultSampleRate;
  double clip_duration_s = kDefaultClipSeconds;
  SpectrogramConfig spectrogram;
  ScalogramConfig scalogram;

  void validate() const;
  nlohmann::json to_json() const;
  static FeatureConfig from_json(const nlohmann::json& j);
};

// Resamples to the configured rate and keeps the first clip_duration_s
// seconds (zero-padded).
Clip prepare_clip(const AudioSignal& signal, const FeatureConfig& cfg);
std::vector<Clip> load_clips(const Manifest& manifest, const FeatureConfig& cfg, int jobs);

struct ImageSet {
  std::vector<Image> spectrograms;
  std::vector<Image> scalograms;
  std::vector<Label> labels;

  size_t size() const { return labels.size(); }
  ImageSet subset(std::span<const size_t> idx) const;
};

ImageSet make_images(std::span<const Clip> clips, std::span<const Label> labels, const FeatureConfig& cfg,
                     int jobs);

std::vector<int> class_indices(std::span<const Label> labels);

struct MmdlConfig {
  EnsembleConfig ensemble;
  AugmentConfig augment;
  double fusion_holdout = 0.2;
  int k = 2;
  nn::ScgConfig scg;
  FeatureConfig features;

  void validate() const;
};

using Timings = std::vector<std::pair<std::string, double>>;

// Splits off a stratified fusion holdout, augments the remaining images,
// trains the members on them and the PatternNet on the holdout posteriors.
EnsembleBundle train_mmdl(const MmdlConfig& cfg, const ImageSet& train, Timings* timings = nullptr);

// Trains (or replaces) the bundle's PatternNet on member posteriors of
// `holdout`.
void attach_patternnet(EnsembleBundle& bundle, const ImageSet& holdout, int k, const nn::ScgConfig& scg,
                       uint64_t seed, int jobs);

// First n_cnn CNNs and n_sae SAEs of a bundle, without a fusion net.
EnsembleBundle subset_bundle(const EnsembleBundle& bundle, int n_cnn, int n_sae);

// Seeds used by train_mmdl, derived from the ensemble master seed.
uint64_t fusion_split_seed(uint64_t master);
uint64_t patternnet_seed(uint64_t master);

}  // namespace upcall

#endif  // UPCALL_PIPELINE_H_
