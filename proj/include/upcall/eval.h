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

#ifndef UPCALL_EVAL_H_
#define UPCALL_EVAL_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "upcall/fusion.h"

namespace upcall {

// Upcall is the positive class.
struct ConfusionCounts {
  int64_t tp = 0, tn = 0, fp = 0, fn = 0;

  int64_t positives() const { return tp + fn; }
  int64_t negatives() const { return tn + fp; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion_counts(std::span<const Label> predictions, std::span<const Label> truth);

struct Rates {
  double upcall_detection = 0;      // tp / (tp + fn)
  double non_upcall_detection = 0;  // tn / (tn + fp)
  double false_alarm = 0;           // fp / (tn + fp), computed as 1 - non_upcall_detection
  bool operator==(const Rates&) const = default;
};

// Requires at least one true upcall and one true non-upcall.
Rates rates(const ConfusionCounts& c);

struct FoldSpec {
  int k = 0;
  uint64_t seed = 0;
  std::vector<int> assignments;  // fold index per sample

  std::vector<size_t> test_indices(int fold) const;
  std::vector<size_t> train_indices(int fold) const;
};

// Each class is shuffled with its own derived stream, the classes are
// concatenated and dealt round-robin over the folds.
FoldSpec kfold_indices(std::span<const Label> labels, int k, uint64_t seed);

// Stratified holdout: shuffles each class and moves round(fraction * class
// size) samples of it to the second list. Both lists are sorted.
std::pair<std::vector<size_t>, std::vector<size_t>> stratified_split(std::span<const Label> labels,
                                                                     double fraction, uint64_t seed);

struct ReportRow {
  std::string scope;     // ensemble | cnn_<i> | sae_<i> | baseline_<name> | fold_<i>
  std::string strategy;  // vote | average | patternnet | member | svm | knn
  ConfusionCounts counts;
  Rates rates;
};

ReportRow make_row(std::string scope, std::string strategy, const ConfusionCounts& counts);

struct Report {
  std::vector<ReportRow> rows;
  nlohmann::json config = nlohmann::json::object();
  double wall_clock_s = 0;
};

inline constexpr std::string_view kReportHeader =
    "scope,strategy,tp,tn,fp,fn,upcall_rate,non_upcall_rate,false_alarm";

// Rates are printed as percentages with two decimals.
std::string report_csv(std::span<const ReportRow> rows);
// Counts are read back and rates recomputed from them; printed percentages
// must match the recomputed ones, otherwise RuntimeFailure.
std::vector<ReportRow> parse_report_csv(std::string_view text);
std::string report_text(const Report& report);

struct SweepPoint {
  double threshold;
  double false_alarm;
  double upcall_detection;
};

// Predict upcall when score >= threshold, for every distinct score (highest
// first) plus +infinity at the start.
std::vector<SweepPoint> threshold_sweep(std::span<const double> scores, std::span<const Label> truth);
std::string sweep_csv(std::span<const SweepPoint> points);

struct EnsembleEvaluation {
  std::vector<ReportRow> rows;
  // Upcall scores per strategy name, for threshold sweeps.
  std::map<std::string, std::vector<double>> scores;
  // Labels per strategy name.
  std::map<std::string, std::vector<Label>> labels;
};

// One "ensemble" row per strategy, then one "member" row per CNN and SAE.
EnsembleEvaluation evaluate_ensemble(const EnsembleBundle& bundle, const nn::Tensor& spectrograms,
                                     const nn::Tensor& scalograms, std::span<const Label> truth,
                                     std::span<const FusionStrategy> strategies, int jobs = 1);

}  // namespace upcall

#endif  // UPCALL_EVAL_H_
