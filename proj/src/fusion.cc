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

#include "upcall/fusion.h"

#include <string>

#include "upcall/nn/train.h"
#include "upcall/parallel.h"

namespace upcall {

using nn::Shape;
using nn::Tensor;

std::string_view fusion_kind_name(FusionKind k) {
  switch (k) {
    case FusionKind::majority_vote: return "vote";
    case FusionKind::unweighted_average: return "average";
    case FusionKind::patternnet: return "patternnet";
  }
  return "?";
}

FusionKind parse_fusion_kind(std::string_view s) {
  if (s == "vote" || s == "majority_vote") return FusionKind::majority_vote;
  if (s == "average" || s == "unweighted_average") return FusionKind::unweighted_average;
  if (s == "patternnet") return FusionKind::patternnet;
  throw ValidationError("unknown fusion strategy '" + std::string(s) +
                        "' (expected vote, average or patternnet)");
}

void FusionStrategy::validate() const {
  if (kind == FusionKind::patternnet && k < 1) throw ValidationError("patternnet: k must be >= 1");
}

ModelOutput model_output(std::span<const double> posterior, int model_id) {
  if (posterior.size() != 2) throw ValidationError("model output: posterior must have 2 entries");
  ModelOutput o;
  o.posterior = {posterior[0], posterior[1]};
  o.label = posterior[0] > posterior[1] ? Label::upcall : Label::noise;
  o.model_id = model_id;
  return o;
}

Decision majority_vote(std::span<const ModelOutput> outputs) {
  if (outputs.empty()) throw ValidationError("majority_vote: no model outputs");
  int up_votes = 0;
  double up_sum = 0, noise_sum = 0;
  for (const auto& o : outputs) {
    if (o.label == Label::upcall) ++up_votes;
    up_sum += o.posterior[0];
    noise_sum += o.posterior[1];
  }
  const int n = static_cast<int>(outputs.size());
  const int noise_votes = n - up_votes;
  Decision d;
  d.strategy = {FusionKind::majority_vote, 0};
  if (up_votes != noise_votes)
    d.label = up_votes > noise_votes ? Label::upcall : Label::noise;
  else
    d.label = up_sum > noise_sum ? Label::upcall : Label::noise;
  d.score = static_cast<double>(d.label == Label::upcall ? up_votes : noise_votes) / n;
  d.upcall_score = static_cast<double>(up_votes) / n;
  return d;
}

Decision unweighted_average(std::span<const ModelOutput> outputs) {
  if (outputs.empty()) throw ValidationError("unweighted_average: no model outputs");
  double up = 0, noise = 0;
  for (const auto& o : outputs) {
    up += o.posterior[0];
    noise += o.posterior[1];
  }
  up /= static_cast<double>(outputs.size());
  noise /= static_cast<double>(outputs.size());
  Decision d;
  d.strategy = {FusionKind::unweighted_average, 0};
  d.label = up > noise ? Label::upcall : Label::noise;
  d.score = up;
  d.upcall_score = up;
  return d;
}

int patternnet_hidden_width(int k, int n_models) {
  if (k < 1 || n_models < 1) throw ValidationError("patternnet: k and n_models must be >= 1");
  return k * kNumClasses * n_models;
}

nn::Network build_patternnet(int k, int n_models) {
  const int in = kNumClasses * n_models;
  const int hidden = patternnet_hidden_width(k, n_models);
  nn::Network net({in}, kNumClasses);
  net.emplace<nn::Dense>(in, hidden);
  net.emplace<nn::Activation>(nn::LayerKind::tanh);
  net.emplace<nn::Dense>(hidden, kNumClasses);
  net.emplace<nn::Activation>(nn::LayerKind::softmax);
  return net;
}

FusionModel train_patternnet(const Tensor& inputs, const Tensor& targets, int k, int n_models,
                             const nn::ScgConfig& cfg, uint64_t seed) {
  if (inputs.shape.size() != 2 || inputs.dim(1) != kNumClasses * n_models)
    throw ValidationError("patternnet: input width must be 2 * n_models");
  if (inputs.dim(0) < 2) throw ValidationError("patternnet: need at least 2 training rows");
  if (targets.shape != Shape{inputs.dim(0), kNumClasses})
    throw ValidationError("patternnet: targets must be one-hot [rows, 2]");
  bool seen[kNumClasses] = {false, false};
  for (int i = 0; i < targets.dim(0); ++i)
    for (int c = 0; c < kNumClasses; ++c)
      if (targets.row(i)[c] > 0.5) seen[c] = true;
  if (!seen[0] || !seen[1]) throw ValidationError("patternnet: training rows contain a single class");
  FusionModel model{k, build_patternnet(k, n_models)};
  Rng rng(seed);
  model.net.initialize(rng);
  nn::scg_train(model.net, inputs, targets, cfg);
  return model;
}

Decision patternnet_decide(const FusionModel& fusion, std::span<const double> member_row) {
  Tensor x({1, static_cast<int>(member_row.size())});
  std::copy(member_row.begin(), member_row.end(), x.data.begin());
  auto p = fusion.net.forward(x);
  Decision d;
  d.strategy = {FusionKind::patternnet, fusion.k};
  d.label = p.posterior[0] > p.posterior[1] ? Label::upcall : Label::noise;
  d.score = p.posterior[0];
  d.upcall_score = p.posterior[0];
  return d;
}

Tensor member_posteriors(const EnsembleBundle& bundle, const Tensor& spectrograms,
                         const Tensor& scalograms, int jobs) {
  const int n = spectrograms.batch();
  if (scalograms.batch() != n)
    throw ValidationError("fusion: spectrogram and scalogram sets differ in size");
  const int m = bundle.n_models();
  Tensor out({n, kNumClasses * m});
  std::vector<Tensor> per(static_cast<size_t>(m));
  parallel_for(static_cast<size_t>(m), jobs, [&](size_t j) {
    if (j < bundle.cnns.size())
      per[j] = nn::predict(bundle.cnns[j].net, spectrograms);
    else
      per[j] = nn::predict(bundle.saes[j - bundle.cnns.size()].net, scalograms);
  });
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < kNumClasses; ++c)
        out.row(i)[kNumClasses * j + c] = per[j].row(i)[c];
  return out;
}

FusionTrainingSet build_fusion_training_matrix(const EnsembleBundle& bundle, const Tensor& spectrograms,
                                               const Tensor& scalograms, std::span<const int> labels,
                                               int jobs) {
  if (labels.size() != static_cast<size_t>(spectrograms.batch()))
    throw ValidationError("fusion: label count differs from image count");
  return {member_posteriors(bundle, spectrograms, scalograms, jobs), nn::one_hot(labels, kNumClasses)};
}

Decision decide(const EnsembleBundle& bundle, std::span<const double> row,
                const FusionStrategy& strategy) {
  strategy.validate();
  const int m = bundle.n_models();
  if (row.size() != static_cast<size_t>(kNumClasses * m))
    throw ValidationError("fusion: member row width does not match the ensemble");
  if (strategy.kind == FusionKind::patternnet) {
    if (!bundle.fusion) throw ValidationError("fusion: bundle has no trained PatternNet");
    return patternnet_decide(*bundle.fusion, row);
  }
  std::vector<ModelOutput> outs;
  outs.reserve(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) outs.push_back(model_output(row.subspan(2 * j, 2), j));
  Decision d = strategy.kind == FusionKind::majority_vote ? majority_vote(outs) : unweighted_average(outs);
  d.strategy = strategy;
  return d;
}

Decision fuse(const EnsembleBundle& bundle, const Image& spectrogram, const Image& scalogram,
              const FusionStrategy& strategy) {
  Tensor row = member_posteriors(bundle, cnn_batch(std::span(&spectrogram, 1)),
                                 sae_batch(std::span(&scalogram, 1)));
  return decide(bundle, row.row(0), strategy);
}

}  // namespace upcall
