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

#include "doctest.h"
#include "test_util.h"
#include "upcall/io.h"
#include "upcall/model_zoo.h"
#include "upcall/nn/train.h"

using namespace upcall;
using upcall::testing::TempDir;

namespace {

bool non_increasing(const std::vector<int>& v) {
  return std::is_sorted(v.begin(), v.end(), std::greater<>());
}

// Two-class toy images: class 0 bright on the left half, class 1 on the right.
std::vector<Image> toy_images(int n, uint64_t seed, std::vector<int>* labels) {
  Rng rng(seed);
  std::vector<Image> out;
  labels->clear();
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    Matrix m(kImageSize, kImageSize);
    for (int r = 0; r < kImageSize; ++r)
      for (int c = 0; c < kImageSize; ++c)
        m(r, c) = std::clamp(((label == 0) == (c < 50) ? 0.7 : 0.3) + 0.05 * rng.normal(), 0.0, 1.0);
    out.emplace_back(m);
    labels->push_back(label);
  }
  return out;
}

EnsembleConfig tiny_ensemble(int n_cnn, int n_sae, uint64_t seed) {
  EnsembleConfig cfg;
  cfg.n_cnn = n_cnn;
  cfg.n_sae = n_sae;
  cfg.cnn_range = {{1, 2}, {2, 3}};
  cfg.sae_range = {{1, 2}, {6, 10}};
  for (auto* t : {&cfg.cnn_train, &cfg.sae_pretrain, &cfg.sae_finetune}) {
    t->epochs = 1;
    t->batch_size = 4;
  }
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("architectures are sorted descending") {
  CHECK(make_cnn_arch({32, 8, 16}).block_filters == std::vector<int>{32, 16, 8});
  CHECK(make_sae_arch({500, 1200}).hidden_sizes == std::vector<int>{1200, 500});
  CHECK_THROWS_AS(make_cnn_arch({}), ValidationError);
  CHECK_THROWS_AS(make_cnn_arch({1, 2, 3, 4, 5, 6}), ValidationError);
}

TEST_CASE("degenerate ranges and seeded determinism") {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    CHECK(sample_cnn_arch({{2, 2}, {16, 16}}, rng).block_filters == std::vector<int>{16, 16});
    CHECK(sample_sae_arch({{1, 1}, {256, 256}}, rng).hidden_sizes == std::vector<int>{256});
  }
  Rng a(5), b(5);
  for (int i = 0; i < 20; ++i) {
    CHECK(sample_cnn_arch(CnnArchRange{}, a).block_filters == sample_cnn_arch(CnnArchRange{}, b).block_filters);
    CHECK(sample_sae_arch(SaeArchRange{}, a).hidden_sizes == sample_sae_arch(SaeArchRange{}, b).hidden_sizes);
  }
}

TEST_CASE("1000 sampled architectures are non-increasing and in range") {
  Rng rng(2);
  CnnArchRange cr{{1, 8}, {4, 64}};
  SaeArchRange sr{{1, 4}, {100, 2500}};
  for (int i = 0; i < 1000; ++i) {
    auto c = sample_cnn_arch(cr, rng);
    CHECK(non_increasing(c.block_filters));
    CHECK(c.block_filters.size() >= 1);
    CHECK(c.block_filters.size() <= static_cast<size_t>(kMaxCnnBlocks));
    for (int f : c.block_filters) CHECK((f >= 4 && f <= 64));
    auto s = sample_sae_arch(sr, rng);
    CHECK(non_increasing(s.hidden_sizes));
    CHECK((s.hidden_sizes.size() >= 1 && s.hidden_sizes.size() <= 4));
    for (int h : s.hidden_sizes) CHECK((h >= 100 && h <= 2500));
  }
}

TEST_CASE("range validation") {
  CHECK_THROWS_AS((CnnArchRange{{3, 2}, {8, 64}}.validate()), ValidationError);
  CHECK_THROWS_AS((CnnArchRange{{0, 2}, {8, 64}}.validate()), ValidationError);
  CHECK_THROWS_AS((SaeArchRange{{1, 2}, {400, 10000}}.validate()), ValidationError);
  CHECK_NOTHROW(CnnArchRange{}.validate());
  CHECK_NOTHROW(SaeArchRange{}.validate());
}

TEST_CASE("cnn feature maps halve per block") {
  for (int alpha = 1; alpha <= kMaxCnnBlocks; ++alpha) {
    std::vector<int> filters(static_cast<size_t>(alpha), 3);
    nn::Network net = build_cnn(make_cnn_arch(filters));
    auto chain = net.shape_chain();
    int block = 0;
    for (size_t i = 0; i < net.num_layers(); ++i)
      if (net.layer(i).kind() == nn::LayerKind::maxpool) {
        ++block;
        CHECK(chain[i + 1][1] == kImageSize >> block);
      }
    CHECK(block == alpha);
    CHECK(net.output_shape() == nn::Shape{2});
    CHECK(net.ends_in_softmax());
    CHECK((kImageSize >> alpha) >= 2);
  }
}

TEST_CASE("pretrain_sae: overcomplete autoencoder reconstructs linear data") {
  Rng rng(3);
  const int D = 8, N = 64;
  nn::Tensor x({N, D});
  for (int i = 0; i < N; ++i) {
    const double z0 = rng.uniform(-1, 1), z1 = rng.uniform(-1, 1);
    for (int d = 0; d < D; ++d) x.data[static_cast<size_t>(i * D + d)] = 0.5 + 0.2 * (z0 * std::cos(d) + z1 * std::sin(d));
  }
  nn::TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.05;
  cfg.l2 = 0;
  cfg.seed = 4;
  nn::Network stack = pretrain_sae(make_sae_arch({D}), x, cfg);
  // Rebuild the autoencoder: the stack keeps only the encoder, so retrain
  // the same layer directly to read its reconstruction error.
  nn::Network ae({D}, 0);
  ae.emplace<nn::Dense>(D, D);
  ae.emplace<nn::Activation>(nn::LayerKind::sigmoid);
  ae.emplace<nn::Dense>(D, D);
  Rng init(derive_seed(cfg.seed, "sae/init", 0));
  ae.initialize(init);
  nn::TrainConfig layer = cfg;
  layer.seed = derive_seed(cfg.seed, "sae/layer", 0);
  nn::fit(ae, x, x, nn::Loss::mse, layer);
  CHECK(nn::loss_and_gradients(ae, x, x, nn::Loss::mse, nullptr, nn::Mode::infer) < 1e-3);
  // The kept encoder is exactly that autoencoder's first half.
  nn::Tensor h1 = nn::predict(stack, x);
  nn::Network enc({D}, 0);
  enc.add(ae.layer(0).clone());
  enc.add(ae.layer(1).clone());
  CHECK(h1 == nn::predict(enc, x));
}

TEST_CASE("pretrain_sae: stack shapes chain layer to layer") {
  Rng rng(5);
  nn::Tensor x({10, 20});
  for (double& v : x.data) v = rng.uniform();
  nn::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 5;
  nn::Network stack = pretrain_sae(make_sae_arch({7, 12, 4}), x, cfg);
  CHECK(stack.output_shape() == nn::Shape{4});
  auto chain = stack.shape_chain();
  REQUIRE(stack.num_layers() == 6);
  CHECK(chain[0] == nn::Shape{20});
  CHECK(chain[2] == nn::Shape{12});
  CHECK(chain[4] == nn::Shape{7});
  CHECK(static_cast<const nn::Dense&>(stack.layer(2)).in_features() == 12);
  CHECK(static_cast<const nn::Dense&>(stack.layer(4)).in_features() == 7);
  // A function of the images only.
  CHECK(pretrain_sae(make_sae_arch({7, 12, 4}), x, cfg).flat_params() == stack.flat_params());
  CHECK_THROWS_AS(pretrain_sae(make_sae_arch({4}), nn::Tensor({0, 20}), cfg), ValidationError);
}

TEST_CASE("finetune_sae: overfits a separable toy set; zero epochs keeps encoders") {
  std::vector<int> labels;
  auto imgs = toy_images(20, 6, &labels);
  nn::Tensor x = sae_batch(imgs);
  nn::TrainConfig pc;
  pc.epochs = 2;
  pc.batch_size = 5;
  nn::Network stack = pretrain_sae(make_sae_arch({16}), x, pc);
  nn::TrainConfig fc;
  fc.epochs = 30;
  fc.batch_size = 5;
  fc.seed = 9;
  Rng r1(1), r2(1);
  nn::Network a = finetune_sae(stack, x, labels, fc, r1);
  nn::Network b = finetune_sae(stack, x, labels, fc, r2);
  CHECK(nn::accuracy(a, x, labels) == 1.0);
  CHECK(a.flat_params() == b.flat_params());

  fc.epochs = 0;
  Rng r3(1);
  nn::Network frozen = finetune_sae(stack, x, labels, fc, r3);
  for (size_t i = 0; i < stack.num_layers(); ++i)
    for (size_t p = 0; p < stack.layer(i).params().size(); ++p)
      CHECK(frozen.layer(i).params()[p].value == stack.layer(i).params()[p].value);
  CHECK(frozen.num_layers() == stack.num_layers() + 2);

  std::vector<int> one(20, 1);
  Rng r4(1);
  fc.epochs = 1;
  CHECK_THROWS_AS(finetune_sae(stack, x, one, fc, r4), ValidationError);
}

TEST_CASE("train_ensemble: counts, seeds, determinism and extension") {
  std::vector<int> labels;
  auto imgs = toy_images(12, 7, &labels);
  nn::Tensor spec = cnn_batch(imgs), scal = sae_batch(imgs);
  EnsembleBundle b1 = train_ensemble(tiny_ensemble(1, 1, 42), spec, labels, scal, labels);
  CHECK(b1.cnns.size() == 1);
  CHECK(b1.saes.size() == 1);
  CHECK(b1.n_models() == 2);
  CHECK(b1.cnns[0].seed == member_seed(42, true, 0));
  CHECK(b1.saes[0].seed == member_seed(42, false, 0));

  EnsembleConfig two = tiny_ensemble(2, 2, 42);
  two.jobs = 2;
  EnsembleBundle b2 = train_ensemble(two, spec, labels, scal, labels);
  CHECK(b2.cnns[0].net.flat_params() == b1.cnns[0].net.flat_params());
  CHECK(b2.saes[0].net.flat_params() == b1.saes[0].net.flat_params());
  std::vector<uint64_t> seeds{b2.cnns[0].seed, b2.cnns[1].seed, b2.saes[0].seed, b2.saes[1].seed};
  std::sort(seeds.begin(), seeds.end());
  CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());

  EnsembleBundle again = train_ensemble(tiny_ensemble(2, 2, 42), spec, labels, scal, labels);
  for (int i = 0; i < 2; ++i) {
    CHECK(again.cnns[i].net.flat_params() == b2.cnns[i].net.flat_params());
    CHECK(again.saes[i].net.flat_params() == b2.saes[i].net.flat_params());
    CHECK(non_increasing(b2.cnns[i].arch.block_filters));
    CHECK(non_increasing(b2.saes[i].arch.hidden_sizes));
  }

  std::vector<int> shifted(labels.rbegin(), labels.rend());
  CHECK_THROWS_AS(train_ensemble(tiny_ensemble(1, 1, 42), spec, labels, scal, shifted), ValidationError);
  CHECK_THROWS_AS(train_ensemble(tiny_ensemble(0, 1, 42), spec, labels, scal, labels), ValidationError);
}

TEST_CASE("bundle directory round trip") {
  std::vector<int> labels;
  auto imgs = toy_images(8, 8, &labels);
  nn::Tensor spec = cnn_batch(imgs), scal = sae_batch(imgs);
  EnsembleBundle b = train_ensemble(tiny_ensemble(2, 1, 3), spec, labels, scal, labels);
  b.features = {{"note", "toy"}};
  TempDir dir("bundle");
  save_bundle(b, dir / "bundle");
  CHECK(std::filesystem::exists(dir / "bundle" / "meta.json"));
  CHECK(std::filesystem::is_directory(dir / "bundle" / "cnn_1"));
  CHECK(std::filesystem::is_directory(dir / "bundle" / "sae_0"));
  CHECK_FALSE(std::filesystem::exists(dir / "bundle" / "fusion"));
  auto meta = read_json_file(dir / "bundle" / "meta.json");
  CHECK(meta["format_version"] == kBundleFormatVersion);
  CHECK(meta["master_seed"] == 3);

  EnsembleBundle back = load_bundle(dir / "bundle");
  CHECK(back.master_seed == 3);
  CHECK(back.features == b.features);
  REQUIRE(back.cnns.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(back.cnns[i].arch.block_filters == b.cnns[i].arch.block_filters);
    CHECK(back.cnns[i].seed == b.cnns[i].seed);
    CHECK(back.cnns[i].net.forward_batch(spec) == b.cnns[i].net.forward_batch(spec));
  }
  CHECK(back.saes[0].net.forward_batch(scal) == b.saes[0].net.forward_batch(scal));
  CHECK_THROWS_AS(load_bundle(dir / "missing"), RuntimeFailure);
}
