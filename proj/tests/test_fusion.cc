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
#include <numeric>

#include "doctest.h"
#include "upcall/fusion.h"
#include "upcall/nn/train.h"

using namespace upcall;

namespace {

ModelOutput out(double p_up, int id = 0) {
  const double p[2] = {p_up, 1.0 - p_up};
  return model_output(p, id);
}

// Label from a random posterior on the required side of 1/2.
ModelOutput random_output(Label l, Rng& rng, int id) {
  const double margin = rng.uniform(0.01, 0.49);
  return out(l == Label::upcall ? 0.5 + margin : 0.5 - margin, id);
}

Label vote_oracle(const std::vector<ModelOutput>& v) {
  int up = 0;
  double su = 0, sn = 0;
  for (const auto& o : v) {
    up += o.label == Label::upcall;
    su += o.posterior[0];
    sn += o.posterior[1];
  }
  const int noise = static_cast<int>(v.size()) - up;
  if (up > noise) return Label::upcall;
  if (noise > up) return Label::noise;
  return su > sn ? Label::upcall : Label::noise;
}

// Dense-only members whose final bias forces the given label.
EnsembleBundle biased_bundle(int n_cnn, int n_sae, double bias_up) {
  EnsembleBundle b;
  Rng rng(11);
  for (int i = 0; i < n_cnn; ++i) {
    CnnMember m{make_cnn_arch({2}), static_cast<uint64_t>(i), build_cnn(make_cnn_arch({2}))};
    m.net.initialize(rng);
    auto& bias = m.net.layer(m.net.num_layers() - 2).params()[1].value.data;
    bias[0] = bias_up;
    bias[1] = -bias_up;
    b.cnns.push_back(std::move(m));
  }
  for (int i = 0; i < n_sae; ++i) {
    nn::Network net({kImageSize * kImageSize}, 2);
    net.emplace<nn::Dense>(kImageSize * kImageSize, 2);
    net.emplace<nn::Activation>(nn::LayerKind::softmax);
    net.initialize(rng);
    net.layer(0).params()[1].value.data = {bias_up, -bias_up};
    b.saes.push_back({make_sae_arch({4}), static_cast<uint64_t>(100 + i), std::move(net)});
  }
  return b;
}

Image random_image(Rng& rng) {
  Matrix m(kImageSize, kImageSize);
  for (int r = 0; r < kImageSize; ++r)
    for (int c = 0; c < kImageSize; ++c) m(r, c) = rng.uniform();
  return Image(m);
}

}  // namespace

TEST_CASE("strategy names parse") {
  CHECK(parse_fusion_kind("vote") == FusionKind::majority_vote);
  CHECK(parse_fusion_kind("majority_vote") == FusionKind::majority_vote);
  CHECK(parse_fusion_kind("average") == FusionKind::unweighted_average);
  CHECK(parse_fusion_kind("patternnet") == FusionKind::patternnet);
  CHECK_THROWS_AS(parse_fusion_kind("weighted"), ValidationError);
  for (auto k : {FusionKind::majority_vote, FusionKind::unweighted_average, FusionKind::patternnet})
    CHECK(parse_fusion_kind(fusion_kind_name(k)) == k);
  CHECK_THROWS_AS((FusionStrategy{FusionKind::patternnet, 0}.validate()), ValidationError);
}

TEST_CASE("model_output label is the posterior argmax, ties to noise") {
  CHECK(out(0.7).label == Label::upcall);
  CHECK(out(0.3).label == Label::noise);
  CHECK(out(0.5).label == Label::noise);
  CHECK_THROWS_AS(model_output(std::vector<double>{1.0}, 0), ValidationError);
}

TEST_CASE("majority vote examples") {
  std::vector<ModelOutput> v{out(0.8), out(0.7), out(0.2)};
  Decision d = majority_vote(v);
  CHECK(d.label == Label::upcall);
  CHECK(d.score == doctest::Approx(2.0 / 3.0));

  std::vector<ModelOutput> fifteen(15, out(0.1));
  d = majority_vote(fifteen);
  CHECK(d.label == Label::noise);
  CHECK(d.score == 1.0);
  CHECK(d.upcall_score == 0.0);

  std::vector<ModelOutput> tie{out(0.9), out(0.4)};
  CHECK(majority_vote(tie).label == Label::upcall);
  std::vector<ModelOutput> exact{out(0.8), out(0.2)};
  CHECK(majority_vote(exact).label == Label::noise);
  CHECK(majority_vote(exact).score == 0.5);
  CHECK_THROWS_AS(majority_vote(std::vector<ModelOutput>{}), ValidationError);
}

TEST_CASE("majority vote matches a brute-force count over all 2^5 and 2^4 patterns") {
  Rng rng(1);
  for (int n : {5, 4}) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<ModelOutput> v;
        for (int i = 0; i < n; ++i)
          v.push_back(random_output((mask >> i) & 1 ? Label::upcall : Label::noise, rng, i));
        Decision d = majority_vote(v);
        CHECK(d.label == vote_oracle(v));
        const int up = __builtin_popcount(static_cast<unsigned>(mask));
        CHECK(d.upcall_score == doctest::Approx(static_cast<double>(up) / n));
        CHECK((d.score >= 0 && d.score <= 1));
        rng.shuffle(v);
        CHECK(majority_vote(v).label == d.label);
      }
    }
  }
}

TEST_CASE("unweighted average examples") {
  std::vector<ModelOutput> tie{out(0.9), out(0.1)};
  Decision d = unweighted_average(tie);
  CHECK(d.label == Label::noise);
  CHECK(d.score == doctest::Approx(0.5));

  std::vector<ModelOutput> one{out(0.62)};
  CHECK(unweighted_average(one).label == Label::upcall);
  CHECK(unweighted_average(one).score == doctest::Approx(0.62));

  std::vector<ModelOutput> three{out(0.8), out(0.6), out(0.7)};
  d = unweighted_average(three);
  CHECK(d.label == Label::upcall);
  CHECK(d.score == doctest::Approx(0.7));
  CHECK_THROWS_AS(unweighted_average(std::vector<ModelOutput>{}), ValidationError);
}

TEST_CASE("average is permutation invariant; unanimity holds for both rules") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 9));
    std::vector<ModelOutput> v;
    for (int i = 0; i < n; ++i) v.push_back(out(rng.uniform(), i));
    Decision a = unweighted_average(v);
    rng.shuffle(v);
    Decision b = unweighted_average(v);
    CHECK(a.label == b.label);
    CHECK(a.score == doctest::Approx(b.score).epsilon(1e-12));
    CHECK((a.score >= 0 && a.score <= 1));

    const Label l = rng.uniform() < 0.5 ? Label::upcall : Label::noise;
    std::vector<ModelOutput> same;
    for (int i = 0; i < n; ++i) same.push_back(random_output(l, rng, i));
    CHECK(majority_vote(same).label == l);
    CHECK(unweighted_average(same).label == l);
  }
}

TEST_CASE("patternnet width and shape") {
  CHECK(patternnet_hidden_width(2, 15) == 60);
  CHECK(patternnet_hidden_width(1, 2) == 4);
  CHECK(patternnet_hidden_width(2, 30) == 120);
  CHECK_THROWS_AS(patternnet_hidden_width(0, 3), ValidationError);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const int k = 1 + static_cast<int>(rng.uniform_int(0, 3));
    const int n1 = 1 + static_cast<int>(rng.uniform_int(0, 14));
    const int n2 = 1 + static_cast<int>(rng.uniform_int(0, 14));
    nn::Network net = build_patternnet(k, n1 + n2);
    CHECK(net.input_shape() == nn::Shape{2 * (n1 + n2)});
    CHECK(static_cast<const nn::Dense&>(net.layer(0)).out_features() == k * 2 * (n1 + n2));
    CHECK(net.layer(1).kind() == nn::LayerKind::tanh);
    CHECK(net.output_shape() == nn::Shape{2});
    CHECK(net.ends_in_softmax());
  }
}

TEST_CASE("patternnet learns to trust the reliable member") {
  Rng rng(4);
  const int rows = 200;
  nn::Tensor x({rows, 4});
  std::vector<int> labels;
  int random_right = 0;
  for (int i = 0; i < rows; ++i) {
    const int y = i % 2;
    labels.push_back(y);
    const double good = y == 0 ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
    const double noisy = rng.uniform();
    random_right += (noisy > 0.5 ? 0 : 1) == y;
    const double row[4] = {good, 1 - good, noisy, 1 - noisy};
    std::copy(row, row + 4, x.row(i).begin());
  }
  nn::ScgConfig cfg;
  cfg.max_iters = 200;
  FusionModel fm = train_patternnet(x, nn::one_hot(labels, 2), 2, 2, cfg, 77);
  CHECK(fm.k == 2);
  const double acc = nn::accuracy(fm.net, x, labels);
  CHECK(acc >= static_cast<double>(random_right) / rows);
  CHECK(acc >= 0.99);

  FusionModel again = train_patternnet(x, nn::one_hot(labels, 2), 2, 2, cfg, 77);
  CHECK(again.net.flat_params() == fm.net.flat_params());

  std::vector<int> one(rows, 0);
  CHECK_THROWS_AS(train_patternnet(x, nn::one_hot(one, 2), 2, 2, cfg, 1), ValidationError);
  CHECK_THROWS_AS(train_patternnet(x, nn::one_hot(labels, 2), 2, 3, cfg, 1), ValidationError);

  // Decision equals the argmax of the forward pass on the same row.
  for (int i = 0; i < 10; ++i) {
    Decision d = patternnet_decide(fm, x.row(i));
    nn::Tensor one_row({1, 4});
    std::copy(x.row(i).begin(), x.row(i).end(), one_row.data.begin());
    auto p = fm.net.forward(one_row);
    CHECK(d.score == p.posterior[0]);
    CHECK(d.label == (p.posterior[0] > p.posterior[1] ? Label::upcall : Label::noise));
  }
}

TEST_CASE("fusion matrix layout and row order") {
  Rng rng(5);
  EnsembleBundle b = biased_bundle(2, 1, 0.0);
  std::vector<Image> spec, scal;
  for (int i = 0; i < 6; ++i) {
    spec.push_back(random_image(rng));
    scal.push_back(random_image(rng));
  }
  std::vector<int> labels{0, 1, 0, 1, 1, 0};
  FusionTrainingSet fs = build_fusion_training_matrix(b, cnn_batch(spec), sae_batch(scal), labels);
  CHECK(fs.inputs.shape == nn::Shape{6, 6});
  CHECK(fs.targets.shape == nn::Shape{6, 2});
  for (int i = 0; i < 6; ++i) {
    CHECK(fs.targets.row(i)[labels[i]] == 1.0);
    auto c0 = b.cnns[0].net.forward(cnn_batch(std::span(&spec[i], 1)));
    auto c1 = b.cnns[1].net.forward(cnn_batch(std::span(&spec[i], 1)));
    auto s0 = b.saes[0].net.forward(sae_batch(std::span(&scal[i], 1)));
    CHECK(fs.inputs.row(i)[0] == doctest::Approx(c0.posterior[0]).epsilon(1e-12));
    CHECK(fs.inputs.row(i)[2] == doctest::Approx(c1.posterior[0]).epsilon(1e-12));
    CHECK(fs.inputs.row(i)[4] == doctest::Approx(s0.posterior[0]).epsilon(1e-12));
  }
  std::vector<size_t> perm{3, 0, 5, 1, 4, 2};
  std::vector<Image> ps, pc;
  for (size_t p : perm) {
    ps.push_back(spec[p]);
    pc.push_back(scal[p]);
  }
  nn::Tensor permuted = member_posteriors(b, cnn_batch(ps), sae_batch(pc), 2);
  for (size_t i = 0; i < perm.size(); ++i)
    for (int c = 0; c < 6; ++c)
      CHECK(permuted.row(static_cast<int>(i))[c] ==
            doctest::Approx(fs.inputs.row(static_cast<int>(perm[i]))[c]).epsilon(1e-12));

  CHECK_THROWS_AS(build_fusion_training_matrix(b, cnn_batch(spec), sae_batch(scal), std::vector<int>{0, 1}),
                  ValidationError);
  scal.pop_back();
  CHECK_THROWS_AS(member_posteriors(b, cnn_batch(spec), sae_batch(scal)), ValidationError);
}

TEST_CASE("fuse: unanimity, single member and missing fusion net") {
  Rng rng(6);
  Image s = random_image(rng), c = random_image(rng);
  EnsembleBundle up = biased_bundle(2, 2, 40.0);
  nn::Tensor x({4, 8});
  std::vector<int> labels{0, 1, 0, 1};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j) x.row(i)[j] = (j % 2 == labels[i]) ? 0.9 : 0.1;
  nn::ScgConfig cfg;
  cfg.max_iters = 100;
  up.fusion = train_patternnet(x, nn::one_hot(labels, 2), 2, 4, cfg, 3);
  for (auto k : {FusionKind::majority_vote, FusionKind::unweighted_average, FusionKind::patternnet}) {
    Decision d = fuse(up, s, c, {k, 2});
    CHECK(d.label == Label::upcall);
    CHECK((d.score >= 0 && d.score <= 1));
    CHECK(d.strategy.kind == k);
  }

  EnsembleBundle down = biased_bundle(1, 0, -40.0);
  CHECK(fuse(down, s, c, {FusionKind::majority_vote, 2}).label == Label::noise);
  CHECK_THROWS_AS(fuse(down, s, c, {FusionKind::patternnet, 2}), ValidationError);
  CHECK_THROWS_AS(decide(down, std::vector<double>{0.5, 0.5, 0.5, 0.5}, {FusionKind::majority_vote, 2}),
                  ValidationError);
}
