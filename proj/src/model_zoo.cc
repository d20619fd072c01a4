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

#include "upcall/model_zoo.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "upcall/io.h"
#include "upcall/nn/model_io.h"
#include "upcall/parallel.h"

namespace upcall {

namespace fs = std::filesystem;
using nn::Network;
using nn::Shape;
using nn::Tensor;

namespace {

void check_range(const IntRange& r, const char* what) {
  if (r.min < 1 || r.min > r.max)
    throw ValidationError(std::string(what) + ": require 1 <= min <= max, got (" +
                          std::to_string(r.min) + "," + std::to_string(r.max) + ")");
}

nlohmann::json range_json(const IntRange& r) { return nlohmann::json::array({r.min, r.max}); }

IntRange range_from_json(const nlohmann::json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

void xavier_dense(nn::Layer& dense, Rng& rng) {
  auto& d = static_cast<nn::Dense&>(dense);
  const double bound = std::sqrt(6.0 / (d.in_features() + d.out_features()));
  for (auto& p : d.params()) {
    if (p.name == "weight")
      for (double& x : p.value.data) x = rng.uniform(-bound, bound);
    else
      p.value.fill(0.0);
  }
}

}  // namespace

void CnnArchRange::validate() const {
  check_range(alpha, "cnn alpha range");
  check_range(filters, "cnn filters range");
}

void SaeArchRange::validate() const {
  check_range(depth, "sae depth range");
  check_range(hidden, "sae hidden range");
  if (hidden.max >= kSaeInputDim)
    throw ValidationError("sae hidden range: max must be below the input dimension 10000");
}

CnnArch make_cnn_arch(std::vector<int> raw) {
  if (raw.empty() || raw.size() > static_cast<size_t>(kMaxCnnBlocks))
    throw ValidationError("cnn arch: need 1..5 blocks");
  std::sort(raw.begin(), raw.end(), std::greater<>());
  if (raw.back() < 1) throw ValidationError("cnn arch: filter counts must be positive");
  return {std::move(raw)};
}

SaeArch make_sae_arch(std::vector<int> raw) {
  if (raw.empty()) throw ValidationError("sae arch: need at least one autoencoder");
  std::sort(raw.begin(), raw.end(), std::greater<>());
  if (raw.back() < 1 || raw.front() >= kSaeInputDim)
    throw ValidationError("sae arch: hidden sizes must lie in [1, 10000)");
  return {std::move(raw)};
}

CnnArch sample_cnn_arch(const CnnArchRange& range, Rng& rng) {
  range.validate();
  int alpha = static_cast<int>(rng.uniform_int(range.alpha.min, range.alpha.max));
  alpha = std::min(alpha, kMaxCnnBlocks);
  std::vector<int> raw(static_cast<size_t>(alpha));
  for (int& f : raw) f = static_cast<int>(rng.uniform_int(range.filters.min, range.filters.max));
  return make_cnn_arch(std::move(raw));
}

SaeArch sample_sae_arch(const SaeArchRange& range, Rng& rng) {
  range.validate();
  const int depth = static_cast<int>(rng.uniform_int(range.depth.min, range.depth.max));
  std::vector<int> raw(static_cast<size_t>(depth));
  for (int& h : raw) h = static_cast<int>(rng.uniform_int(range.hidden.min, range.hidden.max));
  return make_sae_arch(std::move(raw));
}

Network build_cnn(const CnnArch& arch) {
  Network net({1, kImageSize, kImageSize}, kNumClasses);
  int channels = 1, size = kImageSize;
  for (int f : arch.block_filters) {
    net.emplace<nn::Conv2d>(channels, f, false);
    net.emplace<nn::BatchNorm>(f);
    net.emplace<nn::Activation>(nn::LayerKind::relu);
    net.emplace<nn::MaxPool>();
    channels = f;
    size /= 2;
  }
  net.emplace<nn::Flatten>();
  net.emplace<nn::Dense>(channels * size * size, kNumClasses);
  net.emplace<nn::Activation>(nn::LayerKind::softmax);
  net.validate();
  return net;
}

Network pretrain_sae(const SaeArch& arch, const Tensor& images, const nn::TrainConfig& cfg) {
  cfg.validate();
  if (images.shape.size() != 2 || images.dim(0) == 0)
    throw ValidationError("pretrain_sae: expected a non-empty [N, D] image matrix");
  const int input_dim = images.dim(1);
  Network stack({input_dim}, 0);
  Tensor current = images;
  int in_dim = input_dim;
  for (size_t k = 0; k < arch.hidden_sizes.size(); ++k) {
    const int h = arch.hidden_sizes[k];
    Network ae({in_dim}, 0);
    ae.emplace<nn::Dense>(in_dim, h);
    ae.emplace<nn::Activation>(nn::LayerKind::sigmoid);
    ae.emplace<nn::Dense>(h, in_dim);
    Rng init(derive_seed(cfg.seed, "sae/init", k));
    ae.initialize(init);
    nn::TrainConfig layer_cfg = cfg;
    layer_cfg.seed = derive_seed(cfg.seed, "sae/layer", k);
    nn::fit(ae, current, current, nn::Loss::mse, layer_cfg);

    Network encoder({in_dim}, 0);
    encoder.add(ae.layer(0).clone());
    encoder.add(ae.layer(1).clone());
    if (k + 1 < arch.hidden_sizes.size()) current = nn::predict(encoder, current);
    stack.add(ae.layer(0).clone());
    stack.add(ae.layer(1).clone());
    in_dim = h;
  }
  stack.validate();
  return stack;
}

Network finetune_sae(const Network& stack, const Tensor& images, std::span<const int> labels,
                     const nn::TrainConfig& cfg, Rng& rng) {
  const Shape out = stack.output_shape();
  if (out.size() != 1) throw ValidationError("finetune_sae: encoder stack must output a vector");
  Network net(stack.input_shape(), kNumClasses);
  for (size_t i = 0; i < stack.num_layers(); ++i) net.add(stack.layer(i).clone());
  auto& head = net.emplace<nn::Dense>(out[0], kNumClasses);
  xavier_dense(head, rng);
  net.emplace<nn::Activation>(nn::LayerKind::softmax);
  return nn::train_supervised(std::move(net), images, labels, cfg);
}

Tensor cnn_batch(std::span<const Image> images) {
  Tensor t({static_cast<int>(images.size()), 1, kImageSize, kImageSize});
  for (size_t i = 0; i < images.size(); ++i)
    std::copy(images[i].data(), images[i].data() + kImagePixels, t.row(i).begin());
  return t;
}

Tensor sae_batch(std::span<const Image> images) {
  Tensor t({static_cast<int>(images.size()), kImagePixels});
  for (size_t i = 0; i < images.size(); ++i)
    std::copy(images[i].data(), images[i].data() + kImagePixels, t.row(i).begin());
  return t;
}

void EnsembleConfig::validate() const {
  if (n_cnn < 1 || n_sae < 1) throw ValidationError("ensemble: need at least one CNN and one SAE");
  cnn_range.validate();
  sae_range.validate();
  cnn_train.validate();
  sae_pretrain.validate();
  sae_finetune.validate();
}

uint64_t member_seed(uint64_t master, bool cnn, int index) {
  return derive_seed(master, cnn ? "cnn" : "sae", static_cast<uint64_t>(index));
}

EnsembleBundle train_ensemble(const EnsembleConfig& cfg, const Tensor& spectrograms,
                              std::span<const int> spec_labels, const Tensor& scalograms,
                              std::span<const int> scal_labels) {
  cfg.validate();
  const size_t n = spec_labels.size();
  if (static_cast<size_t>(spectrograms.batch()) != n || static_cast<size_t>(scalograms.batch()) != n ||
      scal_labels.size() != n || !std::equal(spec_labels.begin(), spec_labels.end(), scal_labels.begin()))
    throw ValidationError("train_ensemble: spectrogram and scalogram sets do not index the same clips");

  EnsembleBundle bundle;
  bundle.master_seed = cfg.seed;
  bundle.cnn_range = cfg.cnn_range;
  bundle.sae_range = cfg.sae_range;
  bundle.cnns.resize(static_cast<size_t>(cfg.n_cnn));
  bundle.saes.resize(static_cast<size_t>(cfg.n_sae));

  const size_t tasks = bundle.cnns.size() + bundle.saes.size();
  parallel_for(tasks, cfg.jobs, [&](size_t t) {
    if (t < bundle.cnns.size()) {
      CnnMember& m = bundle.cnns[t];
      m.seed = member_seed(cfg.seed, true, static_cast<int>(t));
      Rng rng(m.seed);
      m.arch = sample_cnn_arch(cfg.cnn_range, rng);
      Network net = build_cnn(m.arch);
      net.initialize(rng);
      nn::TrainConfig tc = cfg.cnn_train;
      tc.seed = derive_seed(m.seed, "train", 0);
      m.net = nn::train_supervised(std::move(net), spectrograms, spec_labels, tc);
    } else {
      const size_t i = t - bundle.cnns.size();
      SaeMember& m = bundle.saes[i];
      m.seed = member_seed(cfg.seed, false, static_cast<int>(i));
      Rng rng(m.seed);
      m.arch = sample_sae_arch(cfg.sae_range, rng);
      nn::TrainConfig pc = cfg.sae_pretrain;
      pc.seed = derive_seed(m.seed, "pretrain", 0);
      Network stack = pretrain_sae(m.arch, scalograms, pc);
      nn::TrainConfig fc = cfg.sae_finetune;
      fc.seed = derive_seed(m.seed, "finetune", 0);
      m.net = finetune_sae(stack, scalograms, scal_labels, fc, rng);
    }
  });
  return bundle;
}

void save_bundle(const EnsembleBundle& b, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json members = nlohmann::json::array();
  for (size_t i = 0; i < b.cnns.size(); ++i) {
    const auto& m = b.cnns[i];
    std::string name = "cnn_" + std::to_string(i);
    nlohmann::json rec = {{"kind", "cnn"}, {"index", i}, {"seed", m.seed}, {"sizes", m.arch.block_filters},
                          {"dir", name}};
    nn::save_network(m.net, dir / name, rec);
    members.push_back(rec);
  }
  for (size_t i = 0; i < b.saes.size(); ++i) {
    const auto& m = b.saes[i];
    std::string name = "sae_" + std::to_string(i);
    nlohmann::json rec = {{"kind", "sae"}, {"index", i}, {"seed", m.seed}, {"sizes", m.arch.hidden_sizes},
                          {"dir", name}};
    nn::save_network(m.net, dir / name, rec);
    members.push_back(rec);
  }
  nlohmann::json fusion = nullptr;
  if (b.fusion) {
    fusion = {{"strategy", "patternnet"},
              {"k", b.fusion->k},
              {"n_cnn", b.cnns.size()},
              {"n_sae", b.saes.size()},
              {"dir", "fusion"}};
    nn::save_network(b.fusion->net, dir / "fusion", fusion);
  }
  nlohmann::json meta = {{"format_version", kBundleFormatVersion},
                         {"master_seed", b.master_seed},
                         {"n_cnn", b.cnns.size()},
                         {"n_sae", b.saes.size()},
                         {"cnn_range", {{"alpha", range_json(b.cnn_range.alpha)},
                                        {"filters", range_json(b.cnn_range.filters)}}},
                         {"sae_range", {{"depth", range_json(b.sae_range.depth)},
                                        {"hidden", range_json(b.sae_range.hidden)}}},
                         {"members", members},
                         {"fusion", fusion},
                         {"features", b.features}};
  write_json_file(dir / "meta.json", meta);
}

EnsembleBundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw RuntimeFailure("bundle directory not found: " + dir.string());
  nlohmann::json meta = read_json_file(dir / "meta.json");
  EnsembleBundle b;
  try {
    if (meta.at("format_version").get<int>() != kBundleFormatVersion)
      throw RuntimeFailure(dir.string() + ": unsupported bundle format version");
    b.master_seed = meta.at("master_seed").get<uint64_t>();
    b.cnn_range = {range_from_json(meta.at("cnn_range").at("alpha")),
                   range_from_json(meta.at("cnn_range").at("filters"))};
    b.sae_range = {range_from_json(meta.at("sae_range").at("depth")),
                   range_from_json(meta.at("sae_range").at("hidden"))};
    b.features = meta.at("features");
    for (const auto& rec : meta.at("members")) {
      const std::string kind = rec.at("kind").get<std::string>();
      Network net = nn::load_network(dir / rec.at("dir").get<std::string>());
      auto sizes = rec.at("sizes").get<std::vector<int>>();
      const uint64_t seed = rec.at("seed").get<uint64_t>();
      if (net.n_classes() != kNumClasses)
        throw RuntimeFailure(dir.string() + ": member is not a 2-class network");
      if (kind == "cnn")
        b.cnns.push_back({CnnArch{std::move(sizes)}, seed, std::move(net)});
      else if (kind == "sae")
        b.saes.push_back({SaeArch{std::move(sizes)}, seed, std::move(net)});
      else
        throw RuntimeFailure(dir.string() + ": unknown member kind " + kind);
    }
    if (b.cnns.size() != meta.at("n_cnn").get<size_t>() || b.saes.size() != meta.at("n_sae").get<size_t>() ||
        b.cnns.empty() || b.saes.empty())
      throw RuntimeFailure(dir.string() + ": member counts inconsistent with metadata");
    const auto& fj = meta.at("fusion");
    if (!fj.is_null()) {
      Network fnet = nn::load_network(dir / fj.at("dir").get<std::string>());
      if (fnet.input_shape() != Shape{2 * b.n_models()})
        throw RuntimeFailure(dir.string() + ": fusion net input width does not match the ensemble");
      b.fusion = FusionModel{fj.at("k").get<int>(), std::move(fnet)};
    }
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure(dir.string() + ": malformed bundle metadata: " + e.what());
  }
  return b;
}

}  // namespace upcall
