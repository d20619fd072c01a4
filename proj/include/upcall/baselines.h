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

#ifndef UPCALL_BASELINES_H_
#define UPCALL_BASELINES_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "upcall/mfcc.h"

namespace upcall {

// Classical labels: +1 upcall, -1 noise.
int sign_label(Label l);
Label label_from_sign(int s);

// Per-column affine map captured from training data. Zero-variance columns
// are stored as mean 0, scale 1 and pass through unchanged.
struct Standardizer {
  Vector mean;
  Vector scale;

  Matrix apply(const Matrix& x) const;
  std::vector<double> apply(std::span<const double> x) const;
};

// Population mean and standard deviation per column; requires >= 2 rows.
Standardizer fit_standardizer(const Matrix& train);

struct SvmModel {
  Vector weights;
  double bias = 0.0;
  double lambda = 1e-4;
};

struct SvmPrediction {
  Label label;
  double margin;
};

// lambda/2 (||w||^2 + b^2) + mean hinge loss over the rows.
double svm_objective(const SvmModel& m, const Matrix& x, std::span<const int> y);

// Pegasos: step 1/(lambda t) over shuffled epochs with projection onto the
// ball of radius 1/sqrt(lambda). The bias is learned as the weight of a
// constant feature. Returns the epoch-end iterate with the lowest objective,
// the zero model included, so training never increases the objective.
SvmModel train_linear_svm(const Matrix& x, std::span<const int> y, double lambda, int epochs,
                          uint64_t seed);

// Margin w.x + b; a margin of exactly 0 predicts noise.
SvmPrediction svm_predict(const SvmModel& m, std::span<const double> x);

struct KnnModel {
  Matrix points;
  std::vector<int> labels;  // +1 / -1
  int k = 5;
};

KnnModel make_knn(Matrix points, std::vector<int> labels, int k);

struct KnnPrediction {
  Label label;
  double upcall_fraction;  // share of upcall labels among the k neighbours
};

// Euclidean k nearest neighbours, equal distances ordered by sample index;
// majority label, ties to noise.
KnnPrediction knn_predict(const KnnModel& m, std::span<const double> x);

// "mfcc" or "dwt:<wavelet>:<stages>+mfcc".
struct FeatureRecipe {
  std::optional<std::string> wavelet;
  int stages = 0;
  MfccConfig mfcc;

  std::string name() const;
  int dimension() const { return mfcc.dimension(); }
  FeatureVector extract(const Clip& clip) const;
};

// Unknown wavelets and malformed recipes raise ValidationError.
FeatureRecipe parse_feature_recipe(std::string_view s);

enum class ClassifierKind { svm, knn };
std::string_view classifier_name(ClassifierKind k);
ClassifierKind parse_classifier(std::string_view s);

struct BaselineConfig {
  FeatureRecipe recipe;
  ClassifierKind classifier = ClassifierKind::svm;
  double lambda = 1e-4;
  int epochs = 50;
  int knn_k = 5;
  uint64_t seed = 0;
};

struct BaselineModel {
  BaselineConfig config;
  Standardizer standardizer;
  std::optional<SvmModel> svm;
  std::optional<KnnModel> knn;
};

struct BaselinePrediction {
  Label label;
  double score;  // SVM margin or KNN upcall fraction
};

// Features are rows of `x` (already extracted with config.recipe).
BaselineModel train_baseline(const BaselineConfig& cfg, const Matrix& x, std::span<const Label> labels);
BaselinePrediction baseline_predict(const BaselineModel& m, std::span<const double> features);

void save_baseline(const BaselineModel& m, const std::filesystem::path& dir);
BaselineModel load_baseline(const std::filesystem::path& dir);

}  // namespace upcall

#endif  // UPCALL_BASELINES_H_
