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

#ifndef UPCALL_FUSION_H_
#define UPCALL_FUSION_H_

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "upcall/image.h"
#include "upcall/model_zoo.h"
#include "upcall/nn/scg.h"

namespace upcall {

enum class FusionKind { majority_vote, unweighted_average, patternnet };

// Short names "vote", "average", "patternnet"; the long forms parse too.
std::string_view fusion_kind_name(FusionKind k);
FusionKind parse_fusion_kind(std::string_view s);

struct FusionStrategy {
  FusionKind kind = FusionKind::patternnet;
  int k = 2;  // PatternNet width multiplier
  void validate() const;
};

struct ModelOutput {
  Label label = Label::noise;
  std::array<double, 2> posterior{0.0, 1.0};  // [upcall, noise]
  int model_id = 0;
};

// Label is the argmax of the posterior; equal components resolve to noise.
ModelOutput model_output(std::span<const double> posterior, int model_id);

struct Decision {
  Label label = Label::noise;
  // Strategy-specific confidence: winning vote fraction for majority vote,
  // upcall posterior for the score-level strategies.
  double score = 0.0;
  // Upcall evidence in [0,1] suitable for threshold sweeps: upcall vote
  // fraction for majority vote, upcall posterior otherwise.
  double upcall_score = 0.0;
  FusionStrategy strategy;
};

// Most votes wins; equal votes go to the label with the larger summed
// posterior, and an exact tie there goes to noise.
Decision majority_vote(std::span<const ModelOutput> outputs);
// Mean posterior; argmax ties go to noise.
Decision unweighted_average(std::span<const ModelOutput> outputs);

// Hidden width k * n_classes * n_models.
int patternnet_hidden_width(int k, int n_models);
// dense(2 n_models -> hidden) -> tanh -> dense(hidden -> 2) -> softmax,
// uninitialized.
nn::Network build_patternnet(int k, int n_models);

// Xavier initialization from `seed`, then scaled conjugate gradient on the
// total cross-entropy. Inputs are [rows, 2 n_models] posterior vectors.
FusionModel train_patternnet(const nn::Tensor& inputs, const nn::Tensor& targets, int k, int n_models,
                             const nn::ScgConfig& cfg, uint64_t seed);

Decision patternnet_decide(const FusionModel& fusion, std::span<const double> member_posteriors);

// Row i: posteriors of every CNN on spectrograms[i], then of every SAE on
// scalograms[i], in member order; 2 * n_models columns.
nn::Tensor member_posteriors(const EnsembleBundle& bundle, const nn::Tensor& spectrograms,
                             const nn::Tensor& scalograms, int jobs = 1);

struct FusionTrainingSet {
  nn::Tensor inputs;   // [N, 2 n_models]
  nn::Tensor targets;  // one-hot [N, 2]
};

FusionTrainingSet build_fusion_training_matrix(const EnsembleBundle& bundle,
                                               const nn::Tensor& spectrograms,
                                               const nn::Tensor& scalograms,
                                               std::span<const int> labels, int jobs = 1);

// Applies a strategy to one row of member_posteriors().
Decision decide(const EnsembleBundle& bundle, std::span<const double> member_row,
                const FusionStrategy& strategy);

Decision fuse(const EnsembleBundle& bundle, const Image& spectrogram, const Image& scalogram,
              const FusionStrategy& strategy);

}  // namespace upcall

#endif  // UPCALL_FUSION_H_
