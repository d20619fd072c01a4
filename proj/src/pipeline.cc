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

#include "upcall/pipeline.h"

#include <algorithm>
#include <chrono>
#include <optional>

#include "upcall/eval.h"
#include "upcall/parallel.h"

namespace upcall {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void FeatureConfig::validate() const {
  if (sample_rate_hz <= 0) throw ValidationError("features: sample_rate_hz must be positive");
  if (!(clip_duration_s > 0)) throw ValidationError("features: clip_duration_s must be positive");
  spectrogram.validate();
  scalogram.validate(sample_rate_hz);
  if (Clip::expected_length(clip_duration_s, sample_rate_hz) < static_cast<size_t>(spectrogram.window_len))
    throw ValidationError("features: clip shorter than one spectrogram window");
}

nlohmann::json FeatureConfig::to_json() const {
  return {{"sample_rate_hz", sample_rate_hz},
          {"clip_duration_s", clip_duration_s},
          {"spectrogram",
           {{"window_len", spectrogram.window_len},
            {"hop", spectrogram.hop},
            {"fft_len", spectrogram.fft_len},
            {"log_floor", spectrogram.log_floor}}},
          {"scalogram",
           {{"omega0", scalogram.omega0},
            {"n_scales", scalogram.n_scales},
            {"f_min_hz", scalogram.f_min_hz},
            {"f_max_hz", scalogram.f_max_hz},
            {"log_floor", scalogram.log_floor}}}};
}

FeatureConfig FeatureConfig::from_json(const nlohmann::json& j) {
  FeatureConfig c;
  c.sample_rate_hz = j.at("sample_rate_hz");
  c.clip_duration_s = j.at("clip_duration_s");
  const auto& s = j.at("spectrogram");
  c.spectrogram.window_len = s.at("window_len");
  c.spectrogram.hop = s.at("hop");
  c.spectrogram.fft_len = s.at("fft_len");
  c.spectrogram.log_floor = s.at("log_floor");
  const auto& w = j.at("scalogram");
  c.scalogram.omega0 = w.at("omega0");
  c.scalogram.n_scales = w.at("n_scales");
  c.scalogram.f_min_hz = w.at("f_min_hz");
  c.scalogram.f_max_hz = w.at("f_max_hz");
  c.scalogram.log_floor = w.at("log_floor");
  return c;
}

Clip prepare_clip(const AudioSignal& signal, const FeatureConfig& cfg) {
  return segment_clip(resample_linear(signal, cfg.sample_rate_hz), 0.0, cfg.clip_duration_s);
}

std::vector<Clip> load_clips(const Manifest& manifest, const FeatureConfig& cfg, int jobs) {
  std::vector<Clip> clips(manifest.entries.size());
  parallel_for(clips.size(), jobs, [&](size_t i) {
    const auto& path = manifest.entries[i].path;
    try {
      clips[i] = prepare_clip(read_wav(path), cfg);
    } catch (const ValidationError& e) {
      throw RuntimeFailure(path.string() + ": " + e.what());
    }
  });
  return clips;
}

ImageSet ImageSet::subset(std::span<const size_t> idx) const {
  ImageSet s;
  for (size_t i : idx) {
    s.spectrograms.push_back(spectrograms.at(i));
    s.scalograms.push_back(scalograms.at(i));
    s.labels.push_back(labels.at(i));
  }
  return s;
}

ImageSet make_images(std::span<const Clip> clips, std::span<const Label> labels, const FeatureConfig& cfg,
                     int jobs) {
  cfg.validate();
  if (clips.size() != labels.size()) throw ValidationError("images: clip/label count mismatch");
  const size_t len = Clip::expected_length(cfg.clip_duration_s, cfg.sample_rate_hz);
  for (const auto& c : clips)
    if (c.sample_rate_hz != cfg.sample_rate_hz || c.samples.size() != len)
      throw ValidationError("images: clip does not match the configured rate and duration");
  CwtPlan plan(cfg.scalogram, cfg.sample_rate_hz, len);
  ImageSet set;
  set.labels.assign(labels.begin(), labels.end());
  std::vector<std::optional<Image>> spec(clips.size()), scal(clips.size());
  parallel_for(clips.size(), jobs, [&](size_t i) {
    spec[i] = stft_spectrogram(clips[i], cfg.spectrogram);
    scal[i] = cwt_scalogram(clips[i], plan, cfg.scalogram.log_floor);
  });
  for (size_t i = 0; i < clips.size(); ++i) {
    set.spectrograms.push_back(std::move(*spec[i]));
    set.scalograms.push_back(std::move(*scal[i]));
  }
  return set;
}

std::vector<int> class_indices(std::span<const Label> labels) {
  std::vector<int> y(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) y[i] = class_index(labels[i]);
  return y;
}

void MmdlConfig::validate() const {
  ensemble.validate();
  augment.validate();
  scg.validate();
  features.validate();
  if (!(fusion_holdout > 0 && fusion_holdout < 1))
    throw ValidationError("fusion_holdout must lie in (0, 1)");
  if (k < 1) throw ValidationError("patternnet k must be >= 1");
}

uint64_t fusion_split_seed(uint64_t master) { return derive_seed(master, "fusion-split", 0); }
uint64_t patternnet_seed(uint64_t master) { return derive_seed(master, "patternnet", 0); }

void attach_patternnet(EnsembleBundle& bundle, const ImageSet& holdout, int k, const nn::ScgConfig& scg,
                       uint64_t seed, int jobs) {
  auto labels = class_indices(holdout.labels);
  auto fm = build_fusion_training_matrix(bundle, cnn_batch(holdout.spectrograms),
                                         sae_batch(holdout.scalograms), labels, jobs);
  bundle.fusion = train_patternnet(fm.inputs, fm.targets, k, bundle.n_models(), scg, seed);
}

EnsembleBundle train_mmdl(const MmdlConfig& cfg, const ImageSet& train, Timings* timings) {
  cfg.validate();
  for (Label l : {Label::upcall, Label::noise})
    if (std::count(train.labels.begin(), train.labels.end(), l) < 2)
      throw ValidationError("training set needs at least 2 clips of class " + std::string(label_name(l)));
  const uint64_t seed = cfg.ensemble.seed;
  auto t0 = Clock::now();
  auto [member_idx, fusion_idx] = stratified_split(train.labels, cfg.fusion_holdout, fusion_split_seed(seed));
  ImageSet members = train.subset(member_idx);
  ImageSet holdout = train.subset(fusion_idx);

  std::vector<size_t> src_spec, src_scal;
  Rng rng_spec(derive_seed(seed, "augment", 0)), rng_scal(derive_seed(seed, "augment", 1));
  auto aug_spec = augment_set(members.spectrograms, cfg.augment, rng_spec, &src_spec);
  auto aug_scal = augment_set(members.scalograms, cfg.augment, rng_scal, &src_scal);
  std::vector<int> y(src_spec.size());
  for (size_t i = 0; i < src_spec.size(); ++i) y[i] = class_index(members.labels[src_spec[i]]);
  nn::Tensor spec = cnn_batch(aug_spec);
  nn::Tensor scal = sae_batch(aug_scal);
  aug_spec.clear();
  aug_scal.clear();
  if (timings) timings->push_back({"augment", seconds_since(t0)});

  t0 = Clock::now();
  EnsembleBundle bundle = train_ensemble(cfg.ensemble, spec, y, scal, y);
  spec = {};
  scal = {};
  if (timings) timings->push_back({"members", seconds_since(t0)});

  t0 = Clock::now();
  attach_patternnet(bundle, holdout, cfg.k, cfg.scg, patternnet_seed(seed), cfg.ensemble.jobs);
  if (timings) timings->push_back({"fusion", seconds_since(t0)});
  bundle.features = cfg.features.to_json();
  return bundle;
}

EnsembleBundle subset_bundle(const EnsembleBundle& bundle, int n_cnn, int n_sae) {
  if (n_cnn < 1 || n_sae < 1 || n_cnn > static_cast<int>(bundle.cnns.size()) ||
      n_sae > static_cast<int>(bundle.saes.size()))
    throw ValidationError("subset_bundle: requested member counts out of range");
  EnsembleBundle b;
  b.master_seed = bundle.master_seed;
  b.cnn_range = bundle.cnn_range;
  b.sae_range = bundle.sae_range;
  b.features = bundle.features;
  b.cnns.assign(bundle.cnns.begin(), bundle.cnns.begin() + n_cnn);
  b.saes.assign(bundle.saes.begin(), bundle.saes.begin() + n_sae);
  return b;
}

}  // namespace upcall
