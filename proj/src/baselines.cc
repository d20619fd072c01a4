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

#include "upcall/baselines.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "upcall/io.h"

namespace upcall {

namespace fs = std::filesystem;

int sign_label(Label l) { return l == Label::upcall ? 1 : -1; }
Label label_from_sign(int s) { return s > 0 ? Label::upcall : Label::noise; }

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw ValidationError("standardize: feature dimension mismatch");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
  return out;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != mean.size())
    throw ValidationError("standardize: feature dimension mismatch");
  std::vector<double> out(x.size());
  for (size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
  return out;
}

Standardizer fit_standardizer(const Matrix& train) {
  if (train.rows() < 2) throw ValidationError("standardize: need at least 2 samples");
  const double n = static_cast<double>(train.rows());
  Standardizer s;
  s.mean = Vector::Zero(train.cols());
  s.scale = Vector::Ones(train.cols());
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    const double mu = train.col(j).sum() / n;
    const double var = (train.col(j).array() - mu).square().sum() / n;
    if (var > 0) {
      s.mean[j] = mu;
      s.scale[j] = std::sqrt(var);
    }
  }
  return s;
}

namespace {

void check_labels(std::span<const int> y, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(y.size()) != rows)
    throw ValidationError("label count differs from sample count");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1)
      pos = true;
    else if (v == -1)
      neg = true;
    else
      throw ValidationError("labels must be +1 or -1");
  }
  if (!pos || !neg) throw ValidationError("training data must contain both classes");
}

}  // namespace

double svm_objective(const SvmModel& m, const Matrix& x, std::span<const int> y) {
  double hinge = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    hinge += std::max(0.0, 1.0 - y[i] * (x.row(i).dot(m.weights) + m.bias));
  return 0.5 * m.lambda * (m.weights.squaredNorm() + m.bias * m.bias) +
         hinge / static_cast<double>(x.rows());
}

SvmModel train_linear_svm(const Matrix& x, std::span<const int> y, double lambda, int epochs,
                          uint64_t seed) {
  check_labels(y, x.rows());
  if (!(lambda > 0)) throw ValidationError("svm: lambda must be > 0");
  if (epochs < 0) throw ValidationError("svm: epochs must be >= 0");
  const Eigen::Index d = x.cols();
  SvmModel best{Vector::Zero(d), 0.0, lambda};
  double best_obj = svm_objective(best, x, y);
  Vector w = Vector::Zero(d);
  double b = 0;
  const double radius = 1.0 / std::sqrt(lambda);
  std::vector<Eigen::Index> order(static_cast<size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  double t = 0;
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (Eigen::Index i : order) {
      t += 1;
      const double eta = 1.0 / (lambda * t);
      const double margin = y[i] * (x.row(i).dot(w) + b);
      const double shrink = 1.0 - eta * lambda;
      w *= shrink;
      b *= shrink;
      if (margin < 1) {
        w += (eta * y[i]) * x.row(i).transpose();
        b += eta * y[i];
      }
      const double norm = std::sqrt(w.squaredNorm() + b * b);
      if (norm > radius) {
        w *= radius / norm;
        b *= radius / norm;
      }
    }
    SvmModel cand{w, b, lambda};
    const double obj = svm_objective(cand, x, y);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(cand);
    }
  }
  return best;
}

SvmPrediction svm_predict(const SvmModel& m, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != m.weights.size())
    throw ValidationError("svm: feature dimension mismatch");
  double s = m.bias;
  for (size_t j = 0; j < x.size(); ++j) s += m.weights[static_cast<Eigen::Index>(j)] * x[j];
  return {s > 0 ? Label::upcall : Label::noise, s};
}

KnnModel make_knn(Matrix points, std::vector<int> labels, int k) {
  check_labels(labels, points.rows());
  if (k < 1 || k % 2 == 0) throw ValidationError("knn: k must be an odd positive integer");
  if (k > points.rows()) throw ValidationError("knn: k exceeds the number of training points");
  return {std::move(points), std::move(labels), k};
}

KnnPrediction knn_predict(const KnnModel& m, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != m.points.cols())
    throw ValidationError("knn: feature dimension mismatch");
  Eigen::Map<const Eigen::RowVectorXd> q(x.data(), static_cast<Eigen::Index>(x.size()));
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<size_t>(m.points.rows()));
  for (Eigen::Index i = 0; i < m.points.rows(); ++i) dist[i] = {(m.points.row(i) - q).squaredNorm(), i};
  std::partial_sort(dist.begin(), dist.begin() + m.k, dist.end());
  int up = 0;
  for (int j = 0; j < m.k; ++j)
    if (m.labels[dist[j].second] > 0) ++up;
  const int noise = m.k - up;
  return {up > noise ? Label::upcall : Label::noise, static_cast<double>(up) / m.k};
}

std::string FeatureRecipe::name() const {
  if (!wavelet) return "mfcc";
  return "dwt:" + *wavelet + ":" + std::to_string(stages) + "+mfcc";
}

FeatureVector FeatureRecipe::extract(const Clip& clip) const {
  if (!wavelet) return upcall::mfcc(clip, mfcc);
  return dwt_mfcc_features(clip, wavelet_by_name(*wavelet), stages, mfcc);
}

FeatureRecipe parse_feature_recipe(std::string_view s) {
  FeatureRecipe r;
  if (s == "mfcc") return r;
  const std::string bad = "malformed feature recipe '" + std::string(s) +
                          "' (expected mfcc or dwt:<wavelet>:<stages>+mfcc)";
  if (!s.starts_with("dwt:") || !s.ends_with("+mfcc")) throw ValidationError(bad);
  std::string_view body = s.substr(4, s.size() - 4 - 5);
  const size_t colon = body.find(':');
  if (colon == std::string_view::npos) throw ValidationError(bad);
  std::string_view wname = body.substr(0, colon), sstages = body.substr(colon + 1);
  int stages = 0;
  auto [ptr, ec] = std::from_chars(sstages.data(), sstages.data() + sstages.size(), stages);
  if (ec != std::errc() || ptr != sstages.data() + sstages.size()) throw ValidationError(bad);
  if (stages < 1) throw ValidationError("feature recipe: DWT stages must be >= 1");
  wavelet_by_name(wname);
  r.wavelet = std::string(wname);
  r.stages = stages;
  return r;
}

std::string_view classifier_name(ClassifierKind k) { return k == ClassifierKind::svm ? "svm" : "knn"; }

ClassifierKind parse_classifier(std::string_view s) {
  if (s == "svm") return ClassifierKind::svm;
  if (s == "knn") return ClassifierKind::knn;
  throw ValidationError("unknown classifier '" + std::string(s) + "' (expected svm or knn)");
}

BaselineModel train_baseline(const BaselineConfig& cfg, const Matrix& x, std::span<const Label> labels) {
  std::vector<int> y(labels.size());
  std::transform(labels.begin(), labels.end(), y.begin(), sign_label);
  BaselineModel m;
  m.config = cfg;
  m.standardizer = fit_standardizer(x);
  Matrix xs = m.standardizer.apply(x);
  if (cfg.classifier == ClassifierKind::svm)
    m.svm = train_linear_svm(xs, y, cfg.lambda, cfg.epochs, cfg.seed);
  else
    m.knn = make_knn(std::move(xs), std::move(y), cfg.knn_k);
  return m;
}

BaselinePrediction baseline_predict(const BaselineModel& m, std::span<const double> features) {
  auto z = m.standardizer.apply(features);
  if (m.svm) {
    auto p = svm_predict(*m.svm, z);
    return {p.label, p.margin};
  }
  if (!m.knn) throw ValidationError("baseline model has no classifier");
  auto p = knn_predict(*m.knn, z);
  return {p.label, p.upcall_fraction};
}

namespace {

nlohmann::json mfcc_json(const MfccConfig& c) {
  return {{"n_mels", c.n_mels},       {"n_coeffs", c.n_coeffs}, {"window_len", c.window_len},
          {"hop", c.hop},             {"f_min_hz", c.f_min_hz}, {"f_max_hz", c.f_max_hz},
          {"log_floor", c.log_floor}};
}

MfccConfig mfcc_from_json(const nlohmann::json& j) {
  MfccConfig c;
  c.n_mels = j.at("n_mels");
  c.n_coeffs = j.at("n_coeffs");
  c.window_len = j.at("window_len");
  c.hop = j.at("hop");
  c.f_min_hz = j.at("f_min_hz");
  c.f_max_hz = j.at("f_max_hz");
  c.log_floor = j.at("log_floor");
  return c;
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<size_t>(v.size())}; }

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_baseline(const BaselineModel& m, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& c = m.config;
  nlohmann::json meta = {{"format_version", 1},
                         {"recipe", c.recipe.name()},
                         {"mfcc", mfcc_json(c.recipe.mfcc)},
                         {"classifier", std::string(classifier_name(c.classifier))},
                         {"lambda", c.lambda},
                         {"epochs", c.epochs},
                         {"knn_k", c.knn_k},
                         {"seed", c.seed},
                         {"dimension", m.standardizer.mean.size()}};
  write_f64_file(dir / "standardizer_mean.f64", as_span(m.standardizer.mean));
  write_f64_file(dir / "standardizer_scale.f64", as_span(m.standardizer.scale));
  if (m.svm) {
    meta["bias"] = m.svm->bias;
    write_f64_file(dir / "svm_weights.f64", as_span(m.svm->weights));
  }
  if (m.knn) {
    meta["knn_labels"] = m.knn->labels;
    write_f64_file(dir / "knn_points.f64",
                   std::span<const double>(m.knn->points.data(), static_cast<size_t>(m.knn->points.size())));
  }
  write_json_file(dir / "meta.json", meta);
}

BaselineModel load_baseline(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw RuntimeFailure("baseline model not found: " + dir.string());
  auto meta = read_json_file(dir / "meta.json");
  try {
    BaselineModel m;
    auto& c = m.config;
    c.recipe = parse_feature_recipe(meta.at("recipe").get<std::string>());
    c.recipe.mfcc = mfcc_from_json(meta.at("mfcc"));
    c.classifier = parse_classifier(meta.at("classifier").get<std::string>());
    c.lambda = meta.at("lambda");
    c.epochs = meta.at("epochs");
    c.knn_k = meta.at("knn_k");
    c.seed = meta.at("seed");
    const auto d = meta.at("dimension").get<Eigen::Index>();
    m.standardizer.mean = to_vector(read_f64_file(dir / "standardizer_mean.f64"));
    m.standardizer.scale = to_vector(read_f64_file(dir / "standardizer_scale.f64"));
    if (m.standardizer.mean.size() != d || m.standardizer.scale.size() != d)
      throw RuntimeFailure(dir.string() + ": standardizer size mismatch");
    if (c.classifier == ClassifierKind::svm) {
      Vector w = to_vector(read_f64_file(dir / "svm_weights.f64"));
      if (w.size() != d) throw RuntimeFailure(dir.string() + ": weight size mismatch");
      m.svm = SvmModel{std::move(w), meta.at("bias").get<double>(), c.lambda};
    } else {
      auto labels = meta.at("knn_labels").get<std::vector<int>>();
      auto pts = read_f64_file(dir / "knn_points.f64");
      const auto rows = static_cast<Eigen::Index>(labels.size());
      if (static_cast<Eigen::Index>(pts.size()) != rows * d)
        throw RuntimeFailure(dir.string() + ": knn point blob size mismatch");
      Matrix p = Eigen::Map<const Matrix>(pts.data(), rows, d);
      m.knn = make_knn(std::move(p), std::move(labels), c.knn_k);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure(dir.string() + ": malformed baseline metadata: " + e.what());
  } catch (const ValidationError& e) {
    throw RuntimeFailure(dir.string() + ": inconsistent baseline model: " + e.what());
  }
}

}  // namespace upcall
