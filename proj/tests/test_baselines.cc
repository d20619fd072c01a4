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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "test_util.h"
#include "upcall/baselines.h"

using namespace upcall;
using upcall::testing::TempDir;

namespace {

// Two 2-D blobs separated by a wide gap along x; labels +1 / -1.
void blobs(int n, double scale, uint64_t seed, Matrix* x, std::vector<int>* y) {
  Rng rng(seed);
  *x = Matrix(n, 2);
  y->clear();
  for (int i = 0; i < n; ++i) {
    const int s = i % 2 == 0 ? 1 : -1;
    (*x)(i, 0) = scale * (s * 2.0 + rng.uniform(-0.5, 0.5));
    (*x)(i, 1) = scale * rng.uniform(-1.0, 1.0);
    y->push_back(s);
  }
}

std::vector<double> row(const Matrix& m, Eigen::Index i) {
  return {m.row(i).data(), m.row(i).data() + m.cols()};
}

Clip tone_clip(double hz, double amp, uint64_t seed) {
  Clip c;
  c.samples.resize(Clip::expected_length(c.duration_s, c.sample_rate_hz));
  Rng rng(seed);
  for (size_t i = 0; i < c.samples.size(); ++i)
    c.samples[i] = amp * std::sin(2 * M_PI * hz * static_cast<double>(i) / c.sample_rate_hz) + 0.01 * rng.normal();
  return c;
}

}  // namespace

TEST_CASE("sign labels") {
  CHECK(sign_label(Label::upcall) == 1);
  CHECK(sign_label(Label::noise) == -1);
  CHECK(label_from_sign(1) == Label::upcall);
  CHECK(label_from_sign(-1) == Label::noise);
}

TEST_CASE("standardizer examples") {
  Matrix x(2, 2);
  x << 1, 5, 3, 5;
  Standardizer s = fit_standardizer(x);
  Matrix z = s.apply(x);
  CHECK(z(0, 0) == doctest::Approx(-1.0));
  CHECK(z(1, 0) == doctest::Approx(1.0));
  CHECK(z(0, 1) == 5.0);
  CHECK(z(1, 1) == 5.0);
  for (Eigen::Index i = 0; i < 2; ++i) {
    auto r = s.apply(row(x, i));
    for (Eigen::Index j = 0; j < 2; ++j) CHECK(r[static_cast<size_t>(j)] == z(i, j));
  }
  CHECK(s.apply(x) == z);
  CHECK_THROWS_AS(fit_standardizer(Matrix(1, 3)), ValidationError);

  Rng rng(1);
  Matrix big(50, 4);
  for (Eigen::Index i = 0; i < big.size(); ++i) big.data()[i] = rng.normal(3.0, 2.0);
  Matrix zb = fit_standardizer(big).apply(big);
  for (Eigen::Index j = 0; j < 4; ++j) {
    CHECK(std::abs(zb.col(j).mean()) < 1e-12);
    CHECK(std::sqrt(zb.col(j).array().square().mean()) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("svm predict examples and the zero model") {
  SvmModel m;
  m.weights = Vector::Zero(2);
  m.weights(0) = 1.0;
  auto p = svm_predict(m, std::vector<double>{2, 5});
  CHECK(p.label == Label::upcall);
  CHECK(p.margin == 2.0);
  p = svm_predict(m, std::vector<double>{0, 5});
  CHECK(p.label == Label::noise);
  CHECK(p.margin == 0.0);
  CHECK_THROWS_AS(svm_predict(m, std::vector<double>{1}), ValidationError);

  SvmModel zero;
  zero.weights = Vector::Zero(3);
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    auto q = svm_predict(zero, std::vector<double>{rng.normal(), rng.normal(), rng.normal()});
    CHECK(q.margin == 0.0);
    CHECK(q.label == Label::noise);
  }
}

TEST_CASE("pegasos separates blobs and never raises the objective") {
  Matrix x;
  std::vector<int> y;
  blobs(20, 1.0, 3, &x, &y);
  SvmModel m = train_linear_svm(x, y, 1e-4, 50, 7);
  for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(sign_label(svm_predict(m, row(x, i)).label) == y[i]);
  SvmModel zero;
  zero.weights = Vector::Zero(2);
  zero.lambda = 1e-4;
  CHECK(svm_objective(m, x, y) < svm_objective(zero, x, y));
  CHECK(std::isfinite(m.bias));
  CHECK(m.weights.allFinite());

  for (uint64_t seed = 0; seed < 20; ++seed) {
    Matrix xs;
    std::vector<int> ys;
    blobs(30, 1.0, 100 + seed, &xs, &ys);
    for (Eigen::Index i = 0; i < xs.rows(); i += 3) ys[i] = -ys[i];  // label noise
    SvmModel s = train_linear_svm(xs, ys, 1e-2, 5, seed);
    CHECK(svm_objective(s, xs, ys) <= svm_objective(zero, xs, ys));
  }

  std::vector<int> one(20, 1);
  CHECK_THROWS_AS(train_linear_svm(x, one, 1e-4, 5, 1), ValidationError);
  CHECK_THROWS_AS(train_linear_svm(x, std::vector<int>(3, 1), 1e-4, 5, 1), ValidationError);
}

TEST_CASE("doubling separable features leaves retrained predictions unchanged") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Matrix x;
    std::vector<int> y;
    blobs(20, 1.0, 10 + seed, &x, &y);
    Matrix x2 = 2.0 * x;
    SvmModel a = train_linear_svm(x, y, 1e-4, 50, seed);
    SvmModel b = train_linear_svm(x2, y, 1e-4, 50, seed);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      CHECK(svm_predict(a, row(x, i)).label == svm_predict(b, row(x2, i)).label);
  }
}

TEST_CASE("knn examples") {
  Matrix pts(3, 1);
  pts << 0, 1, 3;
  KnnModel m1 = make_knn(pts, {1, -1, -1}, 1);
  CHECK(knn_predict(m1, std::vector<double>{1}).label == Label::noise);
  CHECK(knn_predict(m1, std::vector<double>{0}).label == Label::upcall);
  // Query 0.5 is equidistant from points 0 and 1; the lower index wins.
  CHECK(knn_predict(m1, std::vector<double>{0.5}).label == Label::upcall);

  KnnModel m3 = make_knn(pts, {1, 1, -1}, 3);
  auto p = knn_predict(m3, std::vector<double>{10});
  CHECK(p.label == Label::upcall);
  CHECK(p.upcall_fraction == doctest::Approx(2.0 / 3.0));

  CHECK_THROWS_AS(make_knn(pts, {1, 1, -1}, 2), ValidationError);
  CHECK_THROWS_AS(make_knn(pts, {1, 1, -1}, 5), ValidationError);
  CHECK_THROWS_AS(knn_predict(m3, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("knn agrees with an exhaustive neighbour oracle") {
  Rng rng(4);
  Matrix pts(50, 3);
  std::vector<int> labels;
  for (Eigen::Index i = 0; i < 50; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) pts(i, j) = std::round(rng.uniform(0, 4));  // many ties
    labels.push_back(rng.bernoulli(0.5) ? 1 : -1);
  }
  for (int k : {1, 3, 5, 7}) {
    KnnModel m = make_knn(pts, labels, k);
    for (int q = 0; q < 100; ++q) {
      std::vector<double> x{std::round(rng.uniform(0, 4)), rng.uniform(0, 4), std::round(rng.uniform(0, 4))};
      // Oracle: stable sort of all indices by distance.
      std::vector<int> idx(50);
      for (int i = 0; i < 50; ++i) idx[i] = i;
      auto d = [&](int i) {
        double s = 0;
        for (int j = 0; j < 3; ++j) s += (pts(i, j) - x[j]) * (pts(i, j) - x[j]);
        return s;
      };
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return d(a) < d(b); });
      int up = 0;
      for (int j = 0; j < k; ++j) up += labels[idx[j]] > 0;
      auto p = knn_predict(m, x);
      CHECK(p.label == (2 * up > k ? Label::upcall : Label::noise));
      CHECK(p.upcall_fraction == doctest::Approx(static_cast<double>(up) / k));
    }
  }
  std::vector<int> lab(49, -1);
  for (int i = 0; i < 20; ++i) lab[i] = 1;
  KnnModel all = make_knn(pts.topRows(49), lab, 49);
  for (int q = 0; q < 20; ++q)
    CHECK(knn_predict(all, std::vector<double>{rng.normal(), rng.normal(), rng.normal()}).label == Label::noise);
}

TEST_CASE("feature recipes") {
  CHECK(parse_feature_recipe("mfcc").name() == "mfcc");
  FeatureRecipe r = parse_feature_recipe("dwt:db4:2+mfcc");
  CHECK(r.wavelet == "db4");
  CHECK(r.stages == 2);
  CHECK(r.name() == "dwt:db4:2+mfcc");
  CHECK(r.dimension() == parse_feature_recipe("mfcc").dimension());
  CHECK_THROWS_AS(parse_feature_recipe("dwt:db99:2+mfcc"), ValidationError);
  CHECK_THROWS_AS(parse_feature_recipe("dwt:db4:0+mfcc"), ValidationError);
  CHECK_THROWS_AS(parse_feature_recipe("dwt:db4+mfcc"), ValidationError);
  CHECK_THROWS_AS(parse_feature_recipe("spectrum"), ValidationError);
  CHECK(parse_classifier("svm") == ClassifierKind::svm);
  CHECK(parse_classifier("knn") == ClassifierKind::knn);
  CHECK_THROWS_AS(parse_classifier("lda"), ValidationError);

  Clip c = tone_clip(150, 0.5, 1);
  for (const char* s : {"mfcc", "dwt:db4:2+mfcc", "dwt:db1:1+mfcc"}) {
    FeatureRecipe fr = parse_feature_recipe(s);
    auto a = fr.extract(c), b = fr.extract(c);
    CHECK(a == b);
    CHECK(a.size() == static_cast<size_t>(fr.dimension()));
    CHECK(std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); }));
  }
}

TEST_CASE("baseline pipeline: standardized prediction, save and load") {
  for (auto kind : {ClassifierKind::svm, ClassifierKind::knn}) {
    BaselineConfig cfg;
    cfg.recipe = parse_feature_recipe("dwt:db4:2+mfcc");
    cfg.classifier = kind;
    cfg.knn_k = 3;
    cfg.seed = 5;
    std::vector<Label> labels;
    Matrix x(16, cfg.recipe.dimension());
    for (int i = 0; i < 16; ++i) {
      const bool up = i % 2 == 0;
      auto f = cfg.recipe.extract(tone_clip(up ? 120 : 400, 0.5, static_cast<uint64_t>(i)));
      for (size_t j = 0; j < f.size(); ++j) x(i, static_cast<Eigen::Index>(j)) = f[j];
      labels.push_back(up ? Label::upcall : Label::noise);
    }
    BaselineModel m = train_baseline(cfg, x, labels);
    CHECK(m.svm.has_value() == (kind == ClassifierKind::svm));
    CHECK(m.knn.has_value() == (kind == ClassifierKind::knn));
    for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(baseline_predict(m, row(x, i)).label == labels[i]);

    // The same decision as the classifier applied to manually standardized input.
    Matrix z = m.standardizer.apply(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double direct = m.svm ? svm_predict(*m.svm, row(z, i)).margin : knn_predict(*m.knn, row(z, i)).upcall_fraction;
      CHECK(baseline_predict(m, row(x, i)).score == direct);
    }

    TempDir dir("baseline");
    save_baseline(m, dir / "model");
    BaselineModel back = load_baseline(dir / "model");
    CHECK(back.config.recipe.name() == cfg.recipe.name());
    CHECK(back.config.classifier == kind);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      CHECK(baseline_predict(back, row(x, i)).score == baseline_predict(m, row(x, i)).score);
    CHECK_THROWS_AS(load_baseline(dir / "nothing"), RuntimeFailure);
  }
}
