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

#include "upcall/cli.h"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <ostream>

#include "upcall/io.h"
#include "upcall/parallel.h"

namespace upcall {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ------------------------------------------------------------ config keys

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r";
  const size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ValidationError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) +
                        "' as " + expected);
}

template <typename T>
void parse_number(std::string_view key, std::string_view v, T& out, const char* expected) {
  T tmp{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), tmp);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, expected);
  out = tmp;
}

void parse_value(std::string_view key, std::string_view v, int& out) { parse_number(key, v, out, "an integer"); }
void parse_value(std::string_view key, std::string_view v, uint64_t& out) {
  parse_number(key, v, out, "an unsigned integer");
}
void parse_value(std::string_view key, std::string_view v, double& out) {
  std::string s(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) bad_value(key, v, "a number");
  out = d;
}
void parse_value(std::string_view key, std::string_view v, bool& out) {
  if (v == "true" || v == "1" || v == "yes")
    out = true;
  else if (v == "false" || v == "0" || v == "no")
    out = false;
  else
    bad_value(key, v, "a boolean");
}
void parse_value(std::string_view, std::string_view v, std::string& out) { out = std::string(v); }

struct ConfigKey {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<nlohmann::json(const RunConfig&)> get;
};

template <typename Access>
ConfigKey key(std::string name, Access access) {
  return {name,
          [access, name](RunConfig& c, std::string_view v) { parse_value(name, v, access(c)); },
          [access](const RunConfig& c) { return nlohmann::json(access(const_cast<RunConfig&>(c))); }};
}

#define UPCALL_KEY(name, expr) key(name, [](RunConfig & c) -> auto& { return expr; })

void add_train_keys(std::vector<ConfigKey>& keys, const std::string& prefix,
                    nn::TrainConfig RunConfig::*member) {
  keys.push_back(key(prefix + ".learning_rate", [member](RunConfig& c) -> auto& { return (c.*member).learning_rate; }));
  keys.push_back(key(prefix + ".momentum", [member](RunConfig& c) -> auto& { return (c.*member).momentum; }));
  keys.push_back(key(prefix + ".batch_size", [member](RunConfig& c) -> auto& { return (c.*member).batch_size; }));
  keys.push_back(key(prefix + ".epochs", [member](RunConfig& c) -> auto& { return (c.*member).epochs; }));
  keys.push_back(key(prefix + ".l2", [member](RunConfig& c) -> auto& { return (c.*member).l2; }));
}

const std::vector<ConfigKey>& key_table() {
  static const std::vector<ConfigKey> table = [] {
    std::vector<ConfigKey> k;
    k.push_back(UPCALL_KEY("seed", c.seed));
    k.push_back(UPCALL_KEY("out", c.out));
    k.push_back(UPCALL_KEY("jobs", c.jobs));
    k.push_back({"strategy",
                 [](RunConfig& c, std::string_view v) { c.strategy.kind = parse_fusion_kind(v); },
                 [](const RunConfig& c) { return nlohmann::json(std::string(fusion_kind_name(c.strategy.kind))); }});
    k.push_back(UPCALL_KEY("k", c.strategy.k));
    k.push_back(UPCALL_KEY("n_cnn", c.n_cnn));
    k.push_back(UPCALL_KEY("n_sae", c.n_sae));
    k.push_back(UPCALL_KEY("manifest", c.manifest));
    k.push_back(UPCALL_KEY("test_manifest", c.test_manifest));
    k.push_back(UPCALL_KEY("bundle", c.bundle));
    k.push_back(UPCALL_KEY("baseline_model", c.baseline_model));
    k.push_back(UPCALL_KEY("test_fraction", c.test_fraction));
    k.push_back(UPCALL_KEY("k_folds", c.k_folds));

    k.push_back(UPCALL_KEY("synth.n_upcall", c.synth.n_upcall));
    k.push_back(UPCALL_KEY("synth.n_noise", c.synth.n_noise));
    k.push_back(UPCALL_KEY("synth.snr_min_db", c.synth.snr_min_db));
    k.push_back(UPCALL_KEY("synth.snr_max_db", c.synth.snr_max_db));
    k.push_back(UPCALL_KEY("synth.f_start_hz", c.synth.f_start_hz));
    k.push_back(UPCALL_KEY("synth.f_end_hz", c.synth.f_end_hz));
    k.push_back(UPCALL_KEY("synth.max_chirps", c.synth.max_chirps));

    k.push_back(UPCALL_KEY("sample_rate_hz", c.features.sample_rate_hz));
    k.push_back(UPCALL_KEY("clip_duration_s", c.features.clip_duration_s));
    k.push_back(UPCALL_KEY("spectrogram.window_len", c.features.spectrogram.window_len));
    k.push_back(UPCALL_KEY("spectrogram.hop", c.features.spectrogram.hop));
    k.push_back(UPCALL_KEY("spectrogram.fft_len", c.features.spectrogram.fft_len));
    k.push_back(UPCALL_KEY("spectrogram.log_floor", c.features.spectrogram.log_floor));
    k.push_back(UPCALL_KEY("scalogram.omega0", c.features.scalogram.omega0));
    k.push_back(UPCALL_KEY("scalogram.n_scales", c.features.scalogram.n_scales));
    k.push_back(UPCALL_KEY("scalogram.f_min_hz", c.features.scalogram.f_min_hz));
    k.push_back(UPCALL_KEY("scalogram.f_max_hz", c.features.scalogram.f_max_hz));
    k.push_back(UPCALL_KEY("scalogram.log_floor", c.features.scalogram.log_floor));

    k.push_back(UPCALL_KEY("augment.max_rotation_deg", c.augment.max_rotation_deg));
    k.push_back(UPCALL_KEY("augment.scale_min", c.augment.scale_range.first));
    k.push_back(UPCALL_KEY("augment.scale_max", c.augment.scale_range.second));
    k.push_back(UPCALL_KEY("augment.allow_reflection", c.augment.allow_reflection));
    k.push_back(UPCALL_KEY("augment.max_shear", c.augment.max_shear));
    k.push_back(UPCALL_KEY("augment.noise_sigma", c.augment.noise_sigma));
    k.push_back(UPCALL_KEY("augment.copies_per_image", c.augment.copies_per_image));

    k.push_back(UPCALL_KEY("cnn.alpha_min", c.cnn_range.alpha.min));
    k.push_back(UPCALL_KEY("cnn.alpha_max", c.cnn_range.alpha.max));
    k.push_back(UPCALL_KEY("cnn.filters_min", c.cnn_range.filters.min));
    k.push_back(UPCALL_KEY("cnn.filters_max", c.cnn_range.filters.max));
    k.push_back(UPCALL_KEY("sae.depth_min", c.sae_range.depth.min));
    k.push_back(UPCALL_KEY("sae.depth_max", c.sae_range.depth.max));
    k.push_back(UPCALL_KEY("sae.hidden_min", c.sae_range.hidden.min));
    k.push_back(UPCALL_KEY("sae.hidden_max", c.sae_range.hidden.max));
    add_train_keys(k, "cnn_train", &RunConfig::cnn_train);
    add_train_keys(k, "sae_pretrain", &RunConfig::sae_pretrain);
    add_train_keys(k, "sae_finetune", &RunConfig::sae_finetune);
    k.push_back(UPCALL_KEY("scg.max_iters", c.scg.max_iters));
    k.push_back(UPCALL_KEY("scg.sigma0", c.scg.sigma0));
    k.push_back(UPCALL_KEY("scg.lambda0", c.scg.lambda0));
    k.push_back(UPCALL_KEY("scg.goal_gradient_norm", c.scg.goal_gradient_norm));
    k.push_back(UPCALL_KEY("fusion_holdout", c.fusion_holdout));

    k.push_back(UPCALL_KEY("baseline.recipe", c.baseline_recipe));
    k.push_back({"baseline.classifier",
                 [](RunConfig& c, std::string_view v) { c.baseline_classifier = parse_classifier(v); },
                 [](const RunConfig& c) { return nlohmann::json(std::string(classifier_name(c.baseline_classifier))); }});
    k.push_back(UPCALL_KEY("baseline.svm_lambda", c.svm_lambda));
    k.push_back(UPCALL_KEY("baseline.svm_epochs", c.svm_epochs));
    k.push_back(UPCALL_KEY("baseline.knn_k", c.knn_k));
    k.push_back(UPCALL_KEY("mfcc.n_mels", c.mfcc.n_mels));
    k.push_back(UPCALL_KEY("mfcc.n_coeffs", c.mfcc.n_coeffs));
    k.push_back(UPCALL_KEY("mfcc.window_len", c.mfcc.window_len));
    k.push_back(UPCALL_KEY("mfcc.hop", c.mfcc.hop));
    k.push_back(UPCALL_KEY("mfcc.f_min_hz", c.mfcc.f_min_hz));
    k.push_back(UPCALL_KEY("mfcc.f_max_hz", c.mfcc.f_max_hz));
    return k;
  }();
  return table;
}

#undef UPCALL_KEY

// ------------------------------------------------------------ stage tags

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError("[" + std::string(name) + "] " + e.what());
  } catch (const RuntimeFailure& e) {
    throw RuntimeFailure("[" + std::string(name) + "] " + e.what());
  } catch (const std::exception& e) {
    throw RuntimeFailure("[" + std::string(name) + "] " + e.what());
  }
}

Manifest load_manifest_checked(const std::string& path, bool need_both) {
  if (path.empty()) throw ValidationError("no manifest given (--manifest)");
  Manifest m = read_manifest(path);
  if (m.entries.empty()) throw ValidationError(path + ": manifest has no entries");
  if (need_both)
    for (Label l : {Label::upcall, Label::noise})
      if (m.count(l) == 0)
        throw ValidationError(path + ": manifest has no " + std::string(label_name(l)) + " clips");
  return m;
}

std::vector<Label> manifest_labels(const Manifest& m) {
  std::vector<Label> y;
  for (const auto& e : m.entries) y.push_back(e.label);
  return y;
}

std::vector<FusionStrategy> all_strategies(const EnsembleBundle& b, int k) {
  std::vector<FusionStrategy> s{{FusionKind::majority_vote, k}, {FusionKind::unweighted_average, k}};
  if (b.fusion) s.push_back({FusionKind::patternnet, b.fusion->k});
  return s;
}

nlohmann::json timings_json(const Timings& t) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [name, s] : t) j.push_back({{"stage", name}, {"seconds", s}});
  return j;
}

void write_report_files(const fs::path& out, const Report& report,
                        const std::map<std::string, std::vector<double>>& scores,
                        std::span<const Label> truth) {
  write_text_file(out / "report.csv", report_csv(report.rows));
  write_text_file(out / "summary.txt", report_text(report));
  for (const auto& [name, s] : scores)
    write_text_file(out / ("plot_" + name + ".csv"), sweep_csv(threshold_sweep(s, truth)));
}

Matrix feature_matrix(const FeatureRecipe& recipe, std::span<const Clip> clips, int jobs) {
  Matrix x(static_cast<Eigen::Index>(clips.size()), recipe.dimension());
  parallel_for(clips.size(), jobs, [&](size_t i) {
    auto f = recipe.extract(clips[i]);
    for (size_t j = 0; j < f.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
  });
  return x;
}

}  // namespace

// ---------------------------------------------------------------- RunConfig

void RunConfig::validate() const {
  if (jobs < 0) throw ValidationError("jobs must be >= 0");
  if (n_cnn < 1 || n_sae < 1) throw ValidationError("n_cnn and n_sae must be >= 1");
  if (k_folds < 0 || k_folds == 1) throw ValidationError("k_folds must be 0 (off) or >= 2");
  if (!(test_fraction > 0 && test_fraction < 1)) throw ValidationError("test_fraction must lie in (0, 1)");
  strategy.validate();
  synth.validate();
  mmdl().validate();
  auto recipe = parse_feature_recipe(baseline_recipe);
  recipe.mfcc = mfcc;
  const int rate = recipe.wavelet ? features.sample_rate_hz >> recipe.stages : features.sample_rate_hz;
  scaled_mfcc_config(mfcc, features.sample_rate_hz, recipe.wavelet ? recipe.stages : 0).validate(rate);
  if (!(svm_lambda > 0)) throw ValidationError("baseline.svm_lambda must be > 0");
  if (svm_epochs < 0) throw ValidationError("baseline.svm_epochs must be >= 0");
  if (knn_k < 1 || knn_k % 2 == 0) throw ValidationError("baseline.knn_k must be odd and >= 1");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : key_table()) j[k.name] = k.get(*this);
  return j;
}

MmdlConfig RunConfig::mmdl() const {
  MmdlConfig m;
  m.ensemble.n_cnn = n_cnn;
  m.ensemble.n_sae = n_sae;
  m.ensemble.cnn_range = cnn_range;
  m.ensemble.sae_range = sae_range;
  m.ensemble.cnn_train = cnn_train;
  m.ensemble.sae_pretrain = sae_pretrain;
  m.ensemble.sae_finetune = sae_finetune;
  m.ensemble.seed = seed;
  m.ensemble.jobs = jobs;
  m.augment = augment;
  m.fusion_holdout = fusion_holdout;
  m.k = strategy.k;
  m.scg = scg;
  m.features = features;
  return m;
}

BaselineConfig RunConfig::baseline() const {
  BaselineConfig b;
  b.recipe = parse_feature_recipe(baseline_recipe);
  b.recipe.mfcc = mfcc;
  b.classifier = baseline_classifier;
  b.lambda = svm_lambda;
  b.epochs = svm_epochs;
  b.knn_k = knn_k;
  b.seed = derive_seed(seed, "svm", 0);
  return b;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> names;
  for (const auto& k : key_table()) names.push_back(k.name);
  return names;
}

void set_config_value(RunConfig& cfg, std::string_view name, std::string_view value) {
  for (const auto& k : key_table())
    if (k.name == name) {
      k.set(cfg, value);
      return;
    }
  throw ValidationError("unknown config key '" + std::string(name) + "'");
}

void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin) {
  size_t line_no = 0;
  while (!text.empty()) {
    const size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError(std::string(origin) + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const RuntimeFailure&) {
    throw ValidationError("cannot read config file " + path.string());
  }
  apply_config_text(cfg, text, path.string());
}

fs::path resolve_out_dir(const RunConfig& cfg, std::string_view command) {
  if (!cfg.out.empty()) return cfg.out;
  const char* root = std::getenv(kOutRootEnv);
  fs::path base = root && *root ? fs::path(root) : fs::path("upcall_out");
  return base / std::string(command);
}

// ------------------------------------------------------------------ synth

SynthResult cmd_synth(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  SynthDatasetConfig sc = cfg.synth;
  sc.seed = cfg.seed;
  sc.sample_rate_hz = cfg.features.sample_rate_hz;
  sc.duration_s = cfg.features.clip_duration_s;
  sc.validate();
  auto data = stage("synth", [&] { return synth_dataset(sc); });
  return stage("write", [&] {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw RuntimeFailure("cannot create output directory " + out.string() + ": " + ec.message());
    Manifest m;
    SynthResult r;
    for (const auto& d : data) {
      const bool up = d.label == Label::upcall;
      char name[64];
      std::snprintf(name, sizeof name, "%s_%05zu.wav", up ? "upcall" : "noise", up ? r.n_upcall++ : r.n_noise++);
      write_wav(out / name, AudioSignal{d.clip.samples, d.clip.sample_rate_hz}, WavEncoding::float32);
      m.entries.push_back({out / name, d.label});
    }
    r.manifest = out / "manifest.csv";
    write_manifest(r.manifest, m);
    return r;
  });
}

// ------------------------------------------------------------------ train

TrainResult cmd_train(const RunConfig& cfg, const fs::path& out) {
  stage("config", [&] { cfg.validate(); });
  const auto t_start = Clock::now();
  Timings timings;
  auto t0 = Clock::now();
  Manifest manifest = stage("load", [&] { return load_manifest_checked(cfg.manifest, true); });
  auto clips = stage("load", [&] { return load_clips(manifest, cfg.features, cfg.jobs); });
  timings.push_back({"load", seconds_since(t0)});
  t0 = Clock::now();
  ImageSet images =
      stage("features", [&] { return make_images(clips, manifest_labels(manifest), cfg.features, cfg.jobs); });
  clips.clear();
  timings.push_back({"features", seconds_since(t0)});
  EnsembleBundle bundle = stage("train", [&] { return train_mmdl(cfg.mmdl(), images, &timings); });

  TrainResult r{out / "bundle", out / "run_record.json"};
  stage("save", [&] {
    fs::create_directories(out);
    fs::path tmp = out / "bundle.partial";
    fs::remove_all(tmp);
    try {
      save_bundle(bundle, tmp);
      fs::remove_all(r.bundle_dir);
      fs::rename(tmp, r.bundle_dir);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(tmp, ec);
      throw;
    }
  });
  nlohmann::json members = nlohmann::json::array();
  for (size_t i = 0; i < bundle.cnns.size(); ++i)
    members.push_back({{"member", "cnn_" + std::to_string(i)}, {"seed", bundle.cnns[i].seed},
                       {"sizes", bundle.cnns[i].arch.block_filters}});
  for (size_t i = 0; i < bundle.saes.size(); ++i)
    members.push_back({{"member", "sae_" + std::to_string(i)}, {"seed", bundle.saes[i].seed},
                       {"sizes", bundle.saes[i].arch.hidden_sizes}});
  timings.push_back({"total", seconds_since(t_start)});
  nlohmann::json record = {{"tool_version", std::string(kToolVersion)},
                           {"command", "train"},
                           {"config", cfg.to_json()},
                           {"seeds",
                            {{"master", cfg.seed},
                             {"fusion_split", fusion_split_seed(cfg.seed)},
                             {"patternnet", patternnet_seed(cfg.seed)},
                             {"members", members}}},
                           {"timings", timings_json(timings)},
                           {"artifacts", {{"bundle", r.bundle_dir.string()}}}};
  stage("save", [&] { write_json_file(r.record, record); });
  return r;
}

// ---------------------------------------------------------------- predict

std::vector<PredictLine> cmd_predict(const RunConfig& cfg, const std::vector<std::string>& audio,
                                     std::ostream& os) {
  stage("config", [&] { cfg.strategy.validate(); });
  if (cfg.bundle.empty()) throw ValidationError("[config] no bundle given (--bundle)");
  EnsembleBundle bundle = stage("load bundle", [&] { return load_bundle(cfg.bundle); });
  FeatureConfig fc = stage("load bundle", [&] { return FeatureConfig::from_json(bundle.features); });
  if (cfg.strategy.kind == FusionKind::patternnet && !bundle.fusion)
    throw ValidationError("[config] bundle has no PatternNet; choose --strategy vote or average");
  std::vector<std::string> paths = audio;
  if (!cfg.manifest.empty()) {
    Manifest m = stage("load", [&] { return read_manifest(cfg.manifest); });
    for (const auto& e : m.entries) paths.push_back(e.path.string());
  }
  if (paths.empty()) throw ValidationError("[config] no audio files given");
  std::vector<Clip> clips(paths.size());
  stage("load", [&] {
    parallel_for(paths.size(), cfg.jobs, [&](size_t i) { clips[i] = prepare_clip(read_wav(paths[i]), fc); });
  });
  std::vector<Label> dummy(paths.size(), Label::noise);
  ImageSet images = stage("features", [&] { return make_images(clips, dummy, fc, cfg.jobs); });
  nn::Tensor rows = stage("predict", [&] {
    return member_posteriors(bundle, cnn_batch(images.spectrograms), sae_batch(images.scalograms), cfg.jobs);
  });
  std::vector<PredictLine> lines;
  std::string csv = "path,label,score\n";
  char buf[64];
  for (size_t i = 0; i < paths.size(); ++i) {
    Decision d = decide(bundle, rows.row(i), cfg.strategy);
    std::snprintf(buf, sizeof buf, "%.6f", d.score);
    os << label_name(d.label) << ',' << buf << '\n';
    csv += paths[i] + ',' + std::string(label_name(d.label)) + ',' + buf + '\n';
    lines.push_back({paths[i], d});
  }
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    write_text_file(fs::path(cfg.out) / "predictions.csv", csv);
  }
  return lines;
}

// --------------------------------------------------------------- evaluate

namespace {

EvaluateResult finish_report(const RunConfig& cfg, const fs::path& out, Report report,
                             const std::map<std::string, std::vector<double>>& scores,
                             std::span<const Label> truth, Clock::time_point t0, const char* command) {
  report.config = cfg.to_json();
  report.wall_clock_s = seconds_since(t0);
  EvaluateResult r{std::move(report), out / "report.csv"};
  stage("report", [&] {
    fs::create_directories(out);
    write_report_files(out, r.report, scores, truth);
    nlohmann::json record = {{"tool_version", std::string(kToolVersion)},
                             {"command", command},
                             {"config", r.report.config},
                             {"seeds", {{"master", cfg.seed}}},
                             {"timings", {{{"stage", "total"}, {"seconds", r.report.wall_clock_s}}}},
                             {"artifacts", {{"report", r.report_csv.string()}}}};
    write_json_file(out / "run_record.json", record);
  });
  return r;
}

}  // namespace

EvaluateResult cmd_evaluate(const RunConfig& cfg, const fs::path& out) {
  stage("config", [&] { cfg.validate(); });
  const auto t0 = Clock::now();
  Manifest manifest = stage("load", [&] { return load_manifest_checked(cfg.manifest, true); });
  const auto truth = manifest_labels(manifest);
  Report report;
  std::map<std::string, std::vector<double>> scores;

  if (cfg.k_folds > 0) {
    auto clips = stage("load", [&] { return load_clips(manifest, cfg.features, cfg.jobs); });
    ImageSet images = stage("features", [&] { return make_images(clips, truth, cfg.features, cfg.jobs); });
    FoldSpec folds = stage("folds", [&] { return kfold_indices(truth, cfg.k_folds, derive_seed(cfg.seed, "cv", 0)); });
    const std::string name(fusion_kind_name(cfg.strategy.kind));
    ConfusionCounts total;
    std::vector<double> fold_scores(truth.size());
    for (int f = 0; f < cfg.k_folds; ++f) {
      const std::string tag = "fold " + std::to_string(f);
      auto train_idx = folds.train_indices(f), test_idx = folds.test_indices(f);
      ImageSet train = images.subset(train_idx), test = images.subset(test_idx);
      MmdlConfig mc = cfg.mmdl();
      mc.ensemble.seed = derive_seed(cfg.seed, "fold", static_cast<uint64_t>(f));
      EnsembleBundle b = stage(tag.c_str(), [&] { return train_mmdl(mc, train); });
      FusionStrategy s = cfg.strategy;
      auto ev = stage(tag.c_str(), [&] {
        return evaluate_ensemble(b, cnn_batch(test.spectrograms), sae_batch(test.scalograms), test.labels,
                                 std::span(&s, 1), cfg.jobs);
      });
      report.rows.push_back(make_row("fold_" + std::to_string(f), name, ev.rows[0].counts));
      total += ev.rows[0].counts;
      for (size_t i = 0; i < test_idx.size(); ++i) fold_scores[test_idx[i]] = ev.scores[name][i];
    }
    report.rows.push_back(make_row("ensemble", name, total));
    scores[name] = std::move(fold_scores);
    return finish_report(cfg, out, std::move(report), scores, truth, t0, "evaluate");
  }

  if (!cfg.bundle.empty()) {
    EnsembleBundle bundle = stage("load bundle", [&] { return load_bundle(cfg.bundle); });
    FeatureConfig fc = stage("load bundle", [&] { return FeatureConfig::from_json(bundle.features); });
    auto clips = stage("load", [&] { return load_clips(manifest, fc, cfg.jobs); });
    ImageSet images = stage("features", [&] { return make_images(clips, truth, fc, cfg.jobs); });
    auto strategies = all_strategies(bundle, cfg.strategy.k);
    auto ev = stage("evaluate", [&] {
      return evaluate_ensemble(bundle, cnn_batch(images.spectrograms), sae_batch(images.scalograms), truth,
                               strategies, cfg.jobs);
    });
    report.rows = std::move(ev.rows);
    return finish_report(cfg, out, std::move(report), ev.scores, truth, t0, "evaluate");
  }

  if (!cfg.baseline_model.empty()) {
    BaselineModel model = stage("load model", [&] { return load_baseline(cfg.baseline_model); });
    auto clips = stage("load", [&] { return load_clips(manifest, cfg.features, cfg.jobs); });
    Matrix x = stage("features", [&] { return feature_matrix(model.config.recipe, clips, cfg.jobs); });
    std::vector<Label> pred(truth.size());
    std::vector<double> score(truth.size());
    for (size_t i = 0; i < truth.size(); ++i) {
      auto p = baseline_predict(model, std::span<const double>(x.row(static_cast<Eigen::Index>(i)).data(),
                                                               static_cast<size_t>(x.cols())));
      pred[i] = p.label;
      score[i] = p.score;
    }
    const std::string cname(classifier_name(model.config.classifier));
    report.rows.push_back(
        make_row("baseline_" + model.config.recipe.name(), cname, confusion_counts(pred, truth)));
    scores[cname] = std::move(score);
    return finish_report(cfg, out, std::move(report), scores, truth, t0, "evaluate");
  }
  throw ValidationError("[config] evaluate needs --bundle, --baseline-model or --k-folds");
}

// --------------------------------------------------------------- baseline

EvaluateResult cmd_baseline(const RunConfig& cfg, const fs::path& out) {
  stage("config", [&] { cfg.validate(); });
  const auto t0 = Clock::now();
  BaselineConfig bc = cfg.baseline();
  Manifest manifest = stage("load", [&] { return load_manifest_checked(cfg.manifest, true); });
  auto clips = stage("load", [&] { return load_clips(manifest, cfg.features, cfg.jobs); });
  const auto labels = manifest_labels(manifest);
  Matrix x = stage("features", [&] { return feature_matrix(bc.recipe, clips, cfg.jobs); });

  Matrix x_train, x_test;
  std::vector<Label> y_train, y_test;
  if (!cfg.test_manifest.empty()) {
    Manifest tm = stage("load", [&] { return load_manifest_checked(cfg.test_manifest, true); });
    auto test_clips = stage("load", [&] { return load_clips(tm, cfg.features, cfg.jobs); });
    x_train = std::move(x);
    y_train = labels;
    x_test = stage("features", [&] { return feature_matrix(bc.recipe, test_clips, cfg.jobs); });
    y_test = manifest_labels(tm);
  } else {
    auto [tr, te] = stage("split", [&] {
      return stratified_split(labels, cfg.test_fraction, derive_seed(cfg.seed, "baseline-split", 0));
    });
    auto take = [&](const std::vector<size_t>& idx, Matrix& xm, std::vector<Label>& ym) {
      xm.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
      for (size_t i = 0; i < idx.size(); ++i) {
        xm.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
        ym.push_back(labels[idx[i]]);
      }
    };
    take(tr, x_train, y_train);
    take(te, x_test, y_test);
  }
  BaselineModel model = stage("train", [&] { return train_baseline(bc, x_train, y_train); });
  std::vector<Label> pred(y_test.size());
  std::vector<double> score(y_test.size());
  for (size_t i = 0; i < y_test.size(); ++i) {
    Eigen::RowVectorXd row = x_test.row(static_cast<Eigen::Index>(i));
    auto p = baseline_predict(model, std::span<const double>(row.data(), static_cast<size_t>(row.size())));
    pred[i] = p.label;
    score[i] = p.score;
  }
  Report report;
  const std::string cname(classifier_name(bc.classifier));
  report.rows.push_back(
      stage("evaluate", [&] { return make_row("baseline_" + bc.recipe.name(), cname, confusion_counts(pred, y_test)); }));
  stage("save", [&] {
    fs::create_directories(out);
    fs::path tmp = out / "model.partial";
    fs::remove_all(tmp);
    save_baseline(model, tmp);
    fs::remove_all(out / "model");
    fs::rename(tmp, out / "model");
  });
  std::map<std::string, std::vector<double>> scores{{cname, std::move(score)}};
  return finish_report(cfg, out, std::move(report), scores, y_test, t0, "baseline");
}

}  // namespace upcall
