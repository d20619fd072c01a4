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

#include "upcall/eval.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace upcall {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion_counts(std::span<const Label> pred, std::span<const Label> truth) {
  if (pred.size() != truth.size()) throw ValidationError("confusion: prediction/truth length mismatch");
  if (pred.empty()) throw ValidationError("confusion: empty prediction list");
  ConfusionCounts c;
  for (size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == Label::upcall, t = truth[i] == Label::upcall;
    if (p && t)
      ++c.tp;
    else if (!p && !t)
      ++c.tn;
    else if (p)
      ++c.fp;
    else
      ++c.fn;
  }
  return c;
}

Rates rates(const ConfusionCounts& c) {
  if (c.positives() == 0) throw ValidationError("rates: no true upcalls (P = 0)");
  if (c.negatives() == 0) throw ValidationError("rates: no true non-upcalls (N = 0)");
  Rates r;
  r.upcall_detection = static_cast<double>(c.tp) / static_cast<double>(c.positives());
  r.non_upcall_detection = static_cast<double>(c.tn) / static_cast<double>(c.negatives());
  r.false_alarm = 1.0 - r.non_upcall_detection;
  return r;
}

std::vector<size_t> FoldSpec::test_indices(int fold) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(i);
  return out;
}

std::vector<size_t> FoldSpec::train_indices(int fold) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(i);
  return out;
}

namespace {

std::vector<size_t> class_members(std::span<const Label> labels, Label l) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == l) idx.push_back(i);
  return idx;
}

}  // namespace

FoldSpec kfold_indices(std::span<const Label> labels, int k, uint64_t seed) {
  if (k < 2) throw ValidationError("kfold: k must be >= 2");
  FoldSpec f;
  f.k = k;
  f.seed = seed;
  f.assignments.assign(labels.size(), -1);
  size_t pos = 0;
  for (Label l : {Label::upcall, Label::noise}) {
    auto idx = class_members(labels, l);
    if (idx.size() < static_cast<size_t>(k))
      throw ValidationError("kfold: class " + std::string(label_name(l)) + " has fewer than k samples");
    Rng rng(derive_seed(seed, "kfold", static_cast<uint64_t>(class_index(l))));
    rng.shuffle(idx);
    for (size_t i : idx) f.assignments[i] = static_cast<int>(pos++ % static_cast<size_t>(k));
  }
  return f;
}

std::pair<std::vector<size_t>, std::vector<size_t>> stratified_split(std::span<const Label> labels,
                                                                     double fraction, uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw ValidationError("split: fraction must be in (0, 1)");
  std::vector<size_t> keep, held;
  for (Label l : {Label::upcall, Label::noise}) {
    auto idx = class_members(labels, l);
    Rng rng(derive_seed(seed, "split", static_cast<uint64_t>(class_index(l))));
    rng.shuffle(idx);
    const auto n_held = static_cast<size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    held.insert(held.end(), idx.begin(), idx.begin() + static_cast<long>(n_held));
    keep.insert(keep.end(), idx.begin() + static_cast<long>(n_held), idx.end());
  }
  std::sort(keep.begin(), keep.end());
  std::sort(held.begin(), held.end());
  return {keep, held};
}

ReportRow make_row(std::string scope, std::string strategy, const ConfusionCounts& counts) {
  return {std::move(scope), std::move(strategy), counts, rates(counts)};
}

namespace {

std::string pct(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * r);
  return buf;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string_view::npos ? s.npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

int64_t parse_count(std::string_view s) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
    throw RuntimeFailure("report: bad count '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string report_csv(std::span<const ReportRow> rows) {
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.scope + ',' + r.strategy + ',' + std::to_string(r.counts.tp) + ',' +
           std::to_string(r.counts.tn) + ',' + std::to_string(r.counts.fp) + ',' +
           std::to_string(r.counts.fn) + ',' + pct(r.rates.upcall_detection) + ',' +
           pct(r.rates.non_upcall_detection) + ',' + pct(r.rates.false_alarm) + '\n';
  }
  return out;
}

std::vector<ReportRow> parse_report_csv(std::string_view text) {
  auto lines = split(text, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0] != kReportHeader) throw RuntimeFailure("report: missing or wrong header");
  std::vector<ReportRow> rows;
  for (size_t i = 1; i < lines.size(); ++i) {
    auto f = split(lines[i], ',');
    if (f.size() != 9) throw RuntimeFailure("report: line " + std::to_string(i + 1) + " has wrong field count");
    ConfusionCounts c{parse_count(f[2]), parse_count(f[3]), parse_count(f[4]), parse_count(f[5])};
    ReportRow r = make_row(std::string(f[0]), std::string(f[1]), c);
    if (pct(r.rates.upcall_detection) != f[6] || pct(r.rates.non_upcall_detection) != f[7] ||
        pct(r.rates.false_alarm) != f[8])
      throw RuntimeFailure("report: line " + std::to_string(i + 1) + " rates disagree with its counts");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string report_text(const Report& report) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %-11s %8s %8s %8s %8s %9s %9s %9s\n", "scope", "strategy", "tp",
                "tn", "fp", "fn", "upcall%", "non-up%", "f-alarm%");
  os << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%-28s %-11s %8lld %8lld %8lld %8lld %9s %9s %9s\n", r.scope.c_str(),
                  r.strategy.c_str(), static_cast<long long>(r.counts.tp),
                  static_cast<long long>(r.counts.tn), static_cast<long long>(r.counts.fp),
                  static_cast<long long>(r.counts.fn), pct(r.rates.upcall_detection).c_str(),
                  pct(r.rates.non_upcall_detection).c_str(), pct(r.rates.false_alarm).c_str());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "wall clock: %.1f s\n", report.wall_clock_s);
  os << buf;
  return os.str();
}

std::vector<SweepPoint> threshold_sweep(std::span<const double> scores, std::span<const Label> truth) {
  if (scores.size() != truth.size()) throw ValidationError("sweep: score/truth length mismatch");
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  ConfusionCounts c;
  for (Label t : truth) (t == Label::upcall ? c.fn : c.tn)++;
  std::vector<SweepPoint> pts;
  auto push = [&](double thr) {
    Rates r = rates(c);
    pts.push_back({thr, r.false_alarm, r.upcall_detection});
  };
  push(std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (truth[order[i]] == Label::upcall) {
        --c.fn;
        ++c.tp;
      } else {
        --c.tn;
        ++c.fp;
      }
    }
    push(s);
  }
  return pts;
}

std::string sweep_csv(std::span<const SweepPoint> points) {
  std::string out = "false_alarm,upcall_detection\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.false_alarm, p.upcall_detection);
    out += buf;
  }
  return out;
}

EnsembleEvaluation evaluate_ensemble(const EnsembleBundle& bundle, const nn::Tensor& spectrograms,
                                     const nn::Tensor& scalograms, std::span<const Label> truth,
                                     std::span<const FusionStrategy> strategies, int jobs) {
  if (static_cast<size_t>(spectrograms.batch()) != truth.size())
    throw ValidationError("evaluate: image count differs from label count");
  for (const auto& s : strategies)
    if (s.kind == FusionKind::patternnet && !bundle.fusion)
      throw ValidationError("evaluate: patternnet requested but the bundle has no fusion net");
  nn::Tensor rows = member_posteriors(bundle, spectrograms, scalograms, jobs);
  EnsembleEvaluation ev;
  const size_t n = truth.size();
  for (const auto& s : strategies) {
    const std::string name(fusion_kind_name(s.kind));
    std::vector<Label> pred(n);
    std::vector<double> score(n);
    for (size_t i = 0; i < n; ++i) {
      Decision d = decide(bundle, rows.row(i), s);
      pred[i] = d.label;
      score[i] = d.upcall_score;
    }
    ev.rows.push_back(make_row("ensemble", name, confusion_counts(pred, truth)));
    ev.scores[name] = std::move(score);
    ev.labels[name] = std::move(pred);
  }
  for (int j = 0; j < bundle.n_models(); ++j) {
    std::vector<Label> pred(n);
    for (size_t i = 0; i < n; ++i) pred[i] = model_output(rows.row(i).subspan(2 * j, 2), j).label;
    const bool cnn = j < static_cast<int>(bundle.cnns.size());
    const int idx = cnn ? j : j - static_cast<int>(bundle.cnns.size());
    ev.rows.push_back(make_row((cnn ? "cnn_" : "sae_") + std::to_string(idx), "member",
                               confusion_counts(pred, truth)));
  }
  return ev;
}

}  // namespace upcall
