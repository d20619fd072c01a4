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

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "upcall/cli.h"

namespace {

using upcall::RunConfig;

// Flags that map one-to-one onto config keys. Values are applied after the
// config file and --set overrides, in that order.
struct KeyFlag {
  std::string key;
  std::string value;
  CLI::Option* opt = nullptr;
};

KeyFlag* add_key_flag(CLI::App& app, std::vector<std::unique_ptr<KeyFlag>>& flags,
                      const std::string& name, const std::string& key, const std::string& help) {
  flags.push_back(std::make_unique<KeyFlag>());
  KeyFlag* f = flags.back().get();
  f->key = key;
  f->opt = app.add_option(name, f->value, help);
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Up-call detection with a multimodel deep learning ensemble"};
  app.set_version_flag("--version", std::string(upcall::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<std::unique_ptr<KeyFlag>> flags;
  app.add_option("--config", config_path, "Key-value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "Override one config key (key=value); repeatable");
  add_key_flag(app, flags, "--seed", "seed", "Master seed");
  add_key_flag(app, flags, "--out", "out",
               std::string("Output directory (default: $") + upcall::kOutRootEnv + "/<command>)");
  add_key_flag(app, flags, "--jobs", "jobs", "Worker threads (0 = all cores)");
  add_key_flag(app, flags, "--strategy", "strategy", "Fusion strategy: vote, average or patternnet");
  add_key_flag(app, flags, "--k", "k", "PatternNet hidden-width multiplier");
  add_key_flag(app, flags, "--n-cnn", "n_cnn", "Number of CNN members");
  add_key_flag(app, flags, "--n-sae", "n_sae", "Number of SAE members");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
  add_key_flag(*synth, flags, "--n-upcall", "synth.n_upcall", "Number of up-call clips");
  add_key_flag(*synth, flags, "--n-noise", "synth.n_noise", "Number of noise clips");

  auto* train = app.add_subcommand("train", "Train an ensemble bundle");
  add_key_flag(*train, flags, "--manifest", "manifest", "Training manifest (path,label)");

  std::vector<std::string> audio;
  auto* predict = app.add_subcommand("predict", "Classify audio clips with a bundle");
  add_key_flag(*predict, flags, "--bundle", "bundle", "Bundle directory");
  add_key_flag(*predict, flags, "--manifest", "manifest", "Manifest of clips to classify");
  predict->add_option("audio", audio, "WAV files");

  auto* evaluate = app.add_subcommand("evaluate", "Score a bundle or baseline model, or cross-validate");
  add_key_flag(*evaluate, flags, "--bundle", "bundle", "Bundle directory");
  add_key_flag(*evaluate, flags, "--baseline-model", "baseline_model", "Baseline model directory");
  add_key_flag(*evaluate, flags, "--manifest", "manifest", "Labelled manifest");
  add_key_flag(*evaluate, flags, "--k-folds", "k_folds", "Stratified folds; retrains per fold");

  auto* baseline = app.add_subcommand("baseline", "Train and evaluate a handcrafted-feature baseline");
  add_key_flag(*baseline, flags, "--manifest", "manifest", "Labelled manifest");
  add_key_flag(*baseline, flags, "--test-manifest", "test_manifest", "Held-out manifest");
  add_key_flag(*baseline, flags, "--recipe", "baseline.recipe", "mfcc or dwt:<wavelet>:<stages>+mfcc");
  add_key_flag(*baseline, flags, "--classifier", "baseline.classifier", "svm or knn");
  add_key_flag(*baseline, flags, "--test-fraction", "test_fraction",
               "Held-out fraction when no test manifest is given");

  for (auto* sub : {synth, train, predict, evaluate, baseline}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? upcall::kExitOk : upcall::kExitValidation;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    RunConfig cfg;
    if (!config_path.empty()) upcall::apply_config_file(cfg, config_path);
    for (const auto& kv : overrides) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos) throw upcall::ValidationError("--set expects key=value, got '" + kv + "'");
      upcall::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& f : flags)
      if (f->opt->count() > 0) upcall::set_config_value(cfg, f->key, f->value);

    if (name == "predict") {
      upcall::cmd_predict(cfg, audio, std::cout);
      return upcall::kExitOk;
    }
    const std::filesystem::path out = upcall::resolve_out_dir(cfg, name);
    if (name == "synth") {
      auto r = upcall::cmd_synth(cfg, out);
      std::cerr << "wrote " << r.n_upcall << " up-call and " << r.n_noise << " noise clips; manifest "
                << r.manifest.string() << "\n";
    } else if (name == "train") {
      auto r = upcall::cmd_train(cfg, out);
      std::cerr << "bundle " << r.bundle_dir.string() << "\n";
    } else if (name == "evaluate") {
      auto r = upcall::cmd_evaluate(cfg, out);
      std::cout << upcall::report_text(r.report);
    } else if (name == "baseline") {
      auto r = upcall::cmd_baseline(cfg, out);
      std::cout << upcall::report_text(r.report);
    }
    return upcall::kExitOk;
  } catch (const upcall::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return upcall::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return upcall::kExitRuntime;
  }
}
