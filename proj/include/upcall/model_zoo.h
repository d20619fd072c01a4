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

#ifndef UPCALL_MODEL_ZOO_H_
#define UPCALL_MODEL_ZOO_H_

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "upcall/image.h"
#include "upcall/nn/network.h"
#include "upcall/nn/train.h"

namespace upcall {

struct IntRange {
  int min = 1;
  int max = 1;
};

// Spatial size halves per block, so at most 5 blocks keep a >= 2x2 map.
inline constexpr int kMaxCnnBlocks = 5;
inline constexpr int kSaeInputDim = kImagePixels;

struct CnnArchRange {
  IntRange alpha{2, 4};
  IntRange filters{8, 64};
  void validate() const;
};

struct SaeArchRange {
  IntRange depth{2, 3};
  IntRange hidden{400, 2500};
  void validate() const;
};

struct CnnArch {
  std::vector<int> block_filters;  // non-increasing
};

struct SaeArch {
  std::vector<int> hidden_sizes;  // non-increasing
};

// Sort raw draws into the descending layer order.
CnnArch make_cnn_arch(std::vector<int> raw_filters);
SaeArch make_sae_arch(std::vector<int> raw_hidden);

// Block count is clamped to kMaxCnnBlocks after drawing.
CnnArch sample_cnn_arch(const CnnArchRange& range, Rng& rng);
SaeArch sample_sae_arch(const SaeArchRange& range, Rng& rng);

// [conv(no bias) -> batchnorm -> relu -> maxpool] per block, then
// flatten -> dense(2) -> softmax, on [1, 100, 100] inputs. Parameters are
// left at construction values; call Network::initialize.
nn::Network build_cnn(const CnnArch& arch);

// Greedy layer-wise autoencoders (sigmoid hidden, linear reconstruction, MSE)
// on flattened [N, 10000] images. Returns the stacked encoders
// (dense -> sigmoid per layer) with no classification head.
nn::Network pretrain_sae(const SaeArch& arch, const nn::Tensor& images, const nn::TrainConfig& cfg);

// Appends a Xavier-initialized dense(2) + softmax head (drawn from rng) and
// trains the whole stack with train_supervised.
nn::Network finetune_sae(const nn::Network& stack, const nn::Tensor& images,
                         std::span<const int> labels, const nn::TrainConfig& cfg, Rng& rng);

// Image batches: [N, 1, 100, 100] for CNNs and [N, 10000] (row-major
// flattening) for SAEs.
nn::Tensor cnn_batch(std::span<const Image> images);
nn::Tensor sae_batch(std::span<const Image> images);

struct EnsembleConfig {
  int n_cnn = 5;
  int n_sae = 5;
  CnnArchRange cnn_range;
  SaeArchRange sae_range;
  nn::TrainConfig cnn_train;
  nn::TrainConfig sae_pretrain;
  nn::TrainConfig sae_finetune;
  uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

struct CnnMember {
  CnnArch arch;
  uint64_t seed = 0;
  nn::Network net;
};

struct SaeMember {
  SaeArch arch;
  uint64_t seed = 0;
  nn::Network net;
};

struct FusionModel {
  int k = 2;
  nn::Network net;
};

struct EnsembleBundle {
  uint64_t master_seed = 0;
  CnnArchRange cnn_range;
  SaeArchRange sae_range;
  std::vector<CnnMember> cnns;
  std::vector<SaeMember> saes;
  std::optional<FusionModel> fusion;
  // Free-form record of how inputs were produced (feature configs etc.).
  nlohmann::json features = nlohmann::json::object();

  int n_models() const { return static_cast<int>(cnns.size() + saes.size()); }
};

// Member seed: derive_seed(master, "cnn" | "sae", i).
uint64_t member_seed(uint64_t master, bool cnn, int index);

// Trains cfg.n_cnn CNNs on `spectrograms` and cfg.n_sae SAEs on `scalograms`.
// Both sets must list the same clips in the same order (labels compared).
// Member i depends only on (master seed, kind, i), so a larger ensemble
// extends a smaller one with the same seed.
EnsembleBundle train_ensemble(const EnsembleConfig& cfg, const nn::Tensor& spectrograms,
                              std::span<const int> spec_labels, const nn::Tensor& scalograms,
                              std::span<const int> scal_labels);

inline constexpr int kBundleFormatVersion = 1;

// Layout: meta.json, cnn_<i>/, sae_<i>/, fusion/ when present.
void save_bundle(const EnsembleBundle& bundle, const std::filesystem::path& dir);
EnsembleBundle load_bundle(const std::filesystem::path& dir);

}  // namespace upcall

#endif  // UPCALL_MODEL_ZOO_H_
