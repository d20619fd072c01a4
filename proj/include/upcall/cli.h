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

#ifndef UPCALL_CLI_H_
#define UPCALL_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "upcall/baselines.h"
#include "upcall/eval.h"
#include "upcall/pipeline.h"
#include "upcall/synth.h"

namespace upcall {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr const char* kOutRootEnv = "UPCALL_OUT_ROOT";

// Every tunable of every command. Config files use `key = value` lines with
// `#` comments; keys are listed in configs/example.conf.
struct RunConfig {
  uint64_t seed = 1;
  std::string out;
  int jobs = 1;
  FusionStrategy strategy;
  int n_cnn = 5;
  int n_sae = 5;

  std::string manifest;
  std::string test_manifest;
  std::string bundle;
  std::string baseline_model;
  double test_fraction = 0.2;
  int k_folds = 0;

  SynthDatasetConfig synth;
  FeatureConfig features;
  AugmentConfig augment;
  CnnArchRange cnn_range;
  SaeArchRange sae_range;
  nn::TrainConfig cnn_train;
  nn::TrainConfig sae_pretrain;
  nn::TrainConfig sae_finetune;
  nn::ScgConfig scg;
  double fusion_holdout = 0.2;

  std::string baseline_recipe = "dwt:db4:2+mfcc";
  ClassifierKind baseline_classifier = ClassifierKind::svm;
  MfccConfig mfcc;
  double svm_lambda = 1e-4;
  int svm_epochs = 50;
  int knn_k = 5;

  // Validates everything every command depends on.
  void validate() const;
  nlohmann::json to_json() const;
  MmdlConfig mmdl() const;
  BaselineConfig baseline() const;
};

std::vector<std::string> config_keys();
// ValidationError on unknown keys or unparsable values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);
void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin = "config");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

// --out when given, else $UPCALL_OUT_ROOT/<command>, else ./upcall_out/<command>.
std::filesystem::path resolve_out_dir(const RunConfig& cfg, std::string_view command);

struct SynthResult {
  std::filesystem::path manifest;
  size_t n_upcall = 0, n_noise = 0;
};
SynthResult cmd_synth(const RunConfig& cfg, const std::filesystem::path& out);

struct TrainResult {
  std::filesystem::path bundle_dir;
  std::filesystem::path record;
};
// Writes <out>/bundle and <out>/run_record.json. On failure nothing is left
// behind under <out>/bundle.
TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& out);

struct PredictLine {
  std::string path;
  Decision decision;
};
std::vector<PredictLine> cmd_predict(const RunConfig& cfg, const std::vector<std::string>& audio,
                                     std::ostream& os);

struct EvaluateResult {
  Report report;
  std::filesystem::path report_csv;
};
// Evaluates --bundle (or a baseline model) on --manifest, or with k_folds > 0
// runs stratified cross-validation with retraining per fold.
EvaluateResult cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& out);

EvaluateResult cmd_baseline(const RunConfig& cfg, const std::filesystem::path& out);

// Exit status of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3 };

}  // namespace upcall

#endif  // UPCALL_CLI_H_
