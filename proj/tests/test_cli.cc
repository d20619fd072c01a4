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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "test_util.h"
#include "upcall/cli.h"
#include "upcall/io.h"

using namespace upcall;
using upcall::testing::TempDir;
namespace fs = std::filesystem;

namespace {

constexpr const char* kTiny = R"(
# small and fast
seed = 5
synth.n_upcall = 10
synth.n_noise = 10
synth.snr_min_db = 10
synth.snr_max_db = 20
augment.copies_per_image = 0
cnn.alpha_min = 1
cnn.alpha_max = 1
cnn.filters_min = 2
cnn.filters_max = 2
sae.depth_min = 1
sae.depth_max = 1
sae.hidden_min = 8
sae.hidden_max = 8
cnn_train.epochs = 8
cnn_train.batch_size = 4
cnn_train.learning_rate = 0.05
sae_pretrain.epochs = 2
sae_finetune.epochs = 20
sae_finetune.batch_size = 4
scg.max_iters = 50
n_cnn = 1
n_sae = 1
)";

RunConfig tiny() {
  RunConfig cfg;
  apply_config_text(cfg, kTiny, "tiny");
  return cfg;
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(UPCALL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

// One synthetic dataset and one trained bundle shared by the slower cases.
struct Shared {
  TempDir dir{"cli_shared"};
  RunConfig cfg = tiny();
  fs::path manifest, bundle;
  Shared() {
    manifest = cmd_synth(cfg, dir / "data").manifest;
    cfg.manifest = manifest.string();
    bundle = cmd_train(cfg, dir / "train").bundle_dir;
  }
};

Shared& shared() {
  static Shared s;
  return s;
}

}  // namespace

TEST_CASE("config text parsing") {
  RunConfig cfg;
  apply_config_text(cfg, "seed = 42\n# comment\n\nstrategy = vote  # trailing\nk=3\ncnn.alpha_max = 4\n");
  CHECK(cfg.seed == 42);
  CHECK(cfg.strategy.kind == FusionKind::majority_vote);
  CHECK(cfg.strategy.k == 3);
  CHECK(cfg.cnn_range.alpha.max == 4);
  CHECK_THROWS_AS(apply_config_text(cfg, "no_such_key = 1"), ValidationError);
  CHECK_THROWS_AS(apply_config_text(cfg, "seed = abc"), ValidationError);
  CHECK_THROWS_AS(apply_config_text(cfg, "seed"), ValidationError);
  CHECK_THROWS_AS(apply_config_text(cfg, "strategy = weighted"), ValidationError);
  try {
    apply_config_text(cfg, "seed = 1\nbogus = 2\n", "my.conf");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("my.conf:2") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/x.conf"), ValidationError);

  // Every key accepts its own printed value.
  RunConfig a = tiny();
  const auto printed = a.to_json();
  RunConfig b;
  for (const auto& key : config_keys()) {
    const auto& v = printed.at(key);
    set_config_value(b, key, v.is_string() ? v.get<std::string>() : v.dump());
  }
  CHECK(b.to_json() == printed);
  CHECK(config_keys().size() > 60);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("example config lists every key") {
  const std::string text = slurp(fs::path(UPCALL_SOURCE_DIR) / "configs" / "example.conf");
  RunConfig cfg;
  CHECK_NOTHROW(apply_config_text(cfg, text, "example.conf"));
  for (const auto& key : config_keys()) CHECK_MESSAGE(text.find("\n" + key + " =") != std::string::npos, key);
}

TEST_CASE("output directory resolution") {
  RunConfig cfg;
  ::unsetenv(kOutRootEnv);
  CHECK(resolve_out_dir(cfg, "train") == fs::path("upcall_out") / "train");
  ::setenv(kOutRootEnv, "/tmp/somewhere", 1);
  CHECK(resolve_out_dir(cfg, "train") == fs::path("/tmp/somewhere") / "train");
  cfg.out = "/tmp/explicit";
  CHECK(resolve_out_dir(cfg, "train") == fs::path("/tmp/explicit"));
  ::unsetenv(kOutRootEnv);
}

TEST_CASE("synth: counts and determinism") {
  TempDir dir("synth");
  RunConfig cfg = tiny();
  SynthResult r = cmd_synth(cfg, dir / "a");
  CHECK(r.n_upcall == 10);
  CHECK(r.n_noise == 10);
  Manifest m = read_manifest(r.manifest);
  CHECK(m.entries.size() == 20);
  CHECK(m.count(Label::upcall) == 10);
  CHECK(m.count(Label::noise) == 10);
  size_t wavs = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) wavs += e.path().extension() == ".wav";
  CHECK(wavs == 20);
  cmd_synth(cfg, dir / "b");
  CHECK(dir_bytes(dir / "a") == dir_bytes(dir / "b"));
}

TEST_CASE("train: identical reruns and predict consistency") {
  Shared& s = shared();
  CHECK(fs::exists(s.bundle / "meta.json"));
  CHECK(fs::exists(s.dir / "train" / "run_record.json"));
  CHECK_FALSE(fs::exists(s.dir / "train" / "bundle.partial"));
  auto record = read_json_file(s.dir / "train" / "run_record.json");
  CHECK(record["seeds"]["master"] == 5);
  CHECK(record["command"] == "train");

  cmd_train(s.cfg, s.dir / "again");
  CHECK(dir_bytes(s.bundle) == dir_bytes(s.dir / "again" / "bundle"));

  // Evaluate on the training data, then predict the same clips.
  RunConfig ev = s.cfg;
  ev.bundle = s.bundle.string();
  EvaluateResult er = cmd_evaluate(ev, s.dir / "eval");
  auto parsed = parse_report_csv(slurp(er.report_csv));
  REQUIRE(parsed.size() == er.report.rows.size());
  for (size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].counts == er.report.rows[i].counts);
    CHECK(parsed[i].rates == er.report.rows[i].rates);
  }
  CHECK(fs::exists(s.dir / "eval" / "summary.txt"));
  const ReportRow& vote = er.report.rows[0];
  CHECK(vote.scope == "ensemble");
  CHECK(vote.rates.upcall_detection == 1.0);
  CHECK(vote.rates.non_upcall_detection == 1.0);
  CHECK(vote.rates.false_alarm == 0.0);

  Manifest m = read_manifest(s.manifest);
  std::vector<std::string> audio;
  for (const auto& e : m.entries) audio.push_back(e.path.string());
  for (const char* strategy : {"vote", "average", "patternnet"}) {
    RunConfig pc = ev;
    pc.manifest.clear();
    set_config_value(pc, "strategy", strategy);
    pc.out = (s.dir / (std::string("pred_") + strategy)).string();
    std::ostringstream os;
    auto lines = cmd_predict(pc, audio, os);
    REQUIRE(lines.size() == audio.size());
    size_t n_lines = 0;
    for (char c : os.str()) n_lines += c == '\n';
    CHECK(n_lines == audio.size());
    for (size_t i = 0; i < lines.size(); ++i) CHECK(lines[i].decision.label == m.entries[i].label);
    CHECK(fs::exists(fs::path(pc.out) / "predictions.csv"));
  }
}

TEST_CASE("train: a missing class fails in a tagged stage and leaves no bundle") {
  Shared& s = shared();
  TempDir dir("oneclass");
  Manifest m = read_manifest(s.manifest);
  Manifest up;
  for (const auto& e : m.entries)
    if (e.label == Label::upcall) up.entries.push_back(e);
  write_manifest(dir / "up.csv", up);
  RunConfig cfg = s.cfg;
  cfg.manifest = (dir / "up.csv").string();
  try {
    cmd_train(cfg, dir / "out");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).starts_with("["));
  }
  CHECK_FALSE(fs::exists(dir / "out" / "bundle"));
  CHECK_FALSE(fs::exists(dir / "out" / "bundle.partial"));
}

TEST_CASE("evaluate: 5-fold cross-validation gives 5 rows plus an aggregate") {
  Shared& s = shared();
  RunConfig cfg = s.cfg;
  cfg.k_folds = 5;
  set_config_value(cfg, "strategy", "average");
  EvaluateResult r = cmd_evaluate(cfg, s.dir / "cv");
  REQUIRE(r.report.rows.size() == 6);
  ConfusionCounts total;
  for (int f = 0; f < 5; ++f) {
    CHECK(r.report.rows[f].scope == "fold_" + std::to_string(f));
    CHECK(r.report.rows[f].counts.positives() == 2);
    CHECK(r.report.rows[f].counts.negatives() == 2);
    total += r.report.rows[f].counts;
  }
  CHECK(r.report.rows[5].scope == "ensemble");
  CHECK(r.report.rows[5].counts == total);
}

TEST_CASE("baseline: mfcc + knn end to end, and an unknown wavelet") {
  Shared& s = shared();
  RunConfig cfg = s.cfg;
  set_config_value(cfg, "baseline.recipe", "mfcc");
  set_config_value(cfg, "baseline.classifier", "knn");
  set_config_value(cfg, "baseline.knn_k", "3");
  EvaluateResult r = cmd_baseline(cfg, s.dir / "knn");
  REQUIRE(r.report.rows.size() == 1);
  CHECK(r.report.rows[0].scope == "baseline_mfcc");
  CHECK(r.report.rows[0].strategy == "knn");
  CHECK(r.report.rows[0].counts.positives() + r.report.rows[0].counts.negatives() == 4);
  CHECK(fs::exists(s.dir / "knn" / "model" / "meta.json"));

  RunConfig ev = s.cfg;
  ev.baseline_model = (s.dir / "knn" / "model").string();
  EvaluateResult back = cmd_evaluate(ev, s.dir / "knn_eval");
  CHECK(back.report.rows.size() == 1);
  CHECK(back.report.rows[0].strategy == "knn");

  set_config_value(cfg, "baseline.recipe", "dwt:db99:2+mfcc");
  TempDir dir("db99");
  CHECK_THROWS_AS(cmd_baseline(cfg, dir / "out"), ValidationError);
  CHECK_FALSE(fs::exists(dir / "out" / "model"));
}

TEST_CASE("command-line exit codes") {
  Shared& s = shared();
  TempDir dir("exit");
  const fs::path log = dir / "log.txt";
  CHECK(run_tool("--help", log) == kExitOk);
  CHECK(run_tool("", log) == kExitValidation);
  CHECK(run_tool("train --no-such-flag", log) == kExitValidation);
  CHECK(run_tool("--strategy weighted synth --out " + (dir / "x").string(), log) == kExitValidation);

  CHECK(run_tool("predict --bundle " + (dir / "missing").string() + " " + s.manifest.string(), log) ==
        kExitRuntime);
  CHECK(slurp(log).find("missing") != std::string::npos);

  CHECK(run_tool("baseline --recipe dwt:db99:2+mfcc --manifest " + s.manifest.string() + " --out " +
                     (dir / "b").string(),
                 log) == kExitValidation);
  CHECK(slurp(log).find("db99") != std::string::npos);

  const fs::path wav = s.manifest.parent_path() / "upcall_00000.wav";
  CHECK(run_tool("--strategy vote predict --bundle " + s.bundle.string() + " " + wav.string(), log) == kExitOk);
  CHECK(slurp(log).find("upcall,") != std::string::npos);

  ::setenv(kOutRootEnv, (dir / "root").c_str(), 1);
  CHECK(run_tool("synth --n-upcall 2 --n-noise 3", log) == kExitOk);
  ::unsetenv(kOutRootEnv);
  CHECK(read_manifest(dir / "root" / "synth" / "manifest.csv").entries.size() == 5);
}
