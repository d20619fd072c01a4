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

#include "upcall/dwt.h"

#include <algorithm>
#include <map>

namespace upcall {

namespace {

// Scaling (reconstruction lowpass) filters of the orthogonal Daubechies,
// Symlet and Coiflet families. Symlet entries were refined to full double
// precision against the orthonormality and vanishing-moment equations.
const std::map<std::string, std::vector<double>, std::less<>>& filter_table() {
  static const std::map<std::string, std::vector<double>, std::less<>> table = {
    {"db1", {
        0.70710678118654757, 0.70710678118654757,
    }},
    {"db2", {
        0.48296291314453416, 0.83651630373780794, 0.22414386804201339,
        -0.12940952255126037,
    }},
    {"db3", {
        0.33267055295008263, 0.80689150931109255, 0.45987750211849154,
        -0.13501102001025458, -0.085441273882026658, 0.035226291885709533,
    }},
    {"db4", {
        0.23037781330889651, 0.71484657055291567, 0.63088076792985892,
        -0.027983769416859854, -0.18703481171909309, 0.030841381835560764,
        0.032883011666885197, -0.010597401785069032,
    }},
    {"db5", {
        0.16010239797419293, 0.60382926979718965, 0.72430852843777294,
        0.13842814590132074, -0.24229488706638203, -0.032244869584638375,
        0.077571493840045719, -0.0062414902127982744, -0.012580751999081999,
        0.0033357252854737712,
    }},
    {"db6", {
        0.11154074335010947, 0.49462389039845306, 0.75113390802109536,
        0.31525035170919763, -0.22626469396543983, -0.12976686756726194,
        0.097501605587323043, 0.027522865530305727, -0.03158203931748603,
        0.00055384220116149613, 0.0047772575109455108, -0.0010773010853084796,
    }},
    {"db7", {
        0.077852054085009184, 0.39653931948191729, 0.72913209084623509,
        0.46978228740519312, -0.14390600392856498, -0.22403618499387498,
        0.071309219266830259, 0.080612609151083078, -0.038029936935014413,
        -0.016574541630666881, 0.01255099855609984, 0.00042957797292136651,
        -0.0018016407040474908, 0.00035371379997452024,
    }},
    {"sym2", {
        0.48296291314453416, 0.83651630373780794, 0.22414386804201339,
        -0.12940952255126037,
    }},
    {"sym3", {
        0.33267055295008263, 0.80689150931109255, 0.45987750211849154,
        -0.13501102001025458, -0.085441273882026658, 0.03522629188570954,
    }},
    {"sym4", {
        0.032223100604051466, -0.012603967262031305, -0.099219543576633526,
        0.29785779560530606, 0.8037387518051321, 0.49761866763277501,
        -0.029635527646002493, -0.075765714789502212,
    }},
    {"sym5", {
        0.01953888273524983, -0.021101834024689046, -0.17532808990805623,
        0.016602105764510849, 0.63397896345679206, 0.72340769040404074,
        0.19939753397685558, -0.039134249302313844, 0.029519490925706264,
        0.027333068344998768,
    }},
    {"coif1", {
        -0.07273261951252645, 0.33789766245748182, 0.85257202021160039,
        0.38486484686485778, -0.07273261951252645, -0.015655728135791993,
    }},
    {"coif2", {
        0.016387336463203641, -0.041464936786871777, -0.067372554723725595,
        0.38611006682276289, 0.81272363544941351, 0.41700518442323908,
        -0.076488599078280761, -0.059434418646431092, 0.02368017194684777,
        0.0056114348193688343, -0.0018232088709110323, -0.00072054944552034698,
    }},
    {"coif3", {
        -0.0037935128643808019, 0.0077825964256727463, 0.023452696142077168,
        -0.065771911281469364, -0.061123390002972552, 0.40517690240911824,
        0.79377722262608719, 0.42848347637737, -0.071799821619154838,
        -0.082301927106299827, 0.034555027573297738, 0.015880544863669452,
        -0.0090079761367306242, -0.0025745176881367972, 0.0011175187708306303,
        0.00046621695982040288, -7.0983302506379004e-05, -3.4599773197272781e-05,
    }},
    {"coif4", {
        0.00089231390253700297, -0.001629492425226786, -0.0073461679362680507,
        0.016068947131575029, 0.02668230466960483, -0.081266710249193727,
        -0.056077319603569258, 0.41530842700068227, 0.78223893442428261,
        0.43438603311435653, -0.066627472366817167, -0.096220424535952642,
        0.039334422605589149, 0.025082253337949612, -0.015211728187697211,
        -0.0056582838001308835, 0.0037514346971460866, 0.0012665610789256603,
        -0.00058902022463321654, -0.00025997433712225682, 6.2338854312787192e-05,
        3.1229861599195265e-05, -3.259647940030751e-06, -1.7849909144933469e-06,
    }},
    {"coif5", {
        -0.000212081862067494, 0.00035857774116175768, 0.0021782943778456947,
        -0.0041593126275786402, -0.010131584846900276, 0.023408322118927783,
        0.028169744270532353, -0.091921588060086087, -0.052046670253554764,
        0.42157126673075435, 0.77429362286032744, 0.43798230665916338,
        -0.06203775157498196, -0.10556315130733723, 0.041287530472117834,
        0.032674799467057355, -0.019758391600965465, -0.0091595073386761625,
        0.0067615202206204169, 0.0024315754425382886, -0.0016616273039298788,
        -0.00063755892612588115, 0.00030185794166824478, 0.00014035632812373243,
        -4.1219861924265501e-05, -2.1270221672515614e-05, 3.7007277113394796e-06,
        2.0612203985788783e-06, -1.6237995172048338e-07, -9.6040101127678941e-08,
    }},
  };
  return table;
}

}  // namespace

std::string WaveletSpec::name() const {
  switch (family) {
    case WaveletFamily::db: return "db" + std::to_string(order);
    case WaveletFamily::sym: return "sym" + std::to_string(order);
    case WaveletFamily::coif: return "coif" + std::to_string(order);
  }
  return "?";
}

WaveletSpec wavelet_by_name(std::string_view name) {
  const auto& table = filter_table();
  auto it = table.find(name);
  if (it == table.end()) throw ValidationError("unknown wavelet '" + std::string(name) + "'");
  WaveletSpec w;
  std::string_view digits = name;
  if (name.starts_with("db")) {
    w.family = WaveletFamily::db;
    digits.remove_prefix(2);
  } else if (name.starts_with("sym")) {
    w.family = WaveletFamily::sym;
    digits.remove_prefix(3);
  } else {
    w.family = WaveletFamily::coif;
    digits.remove_prefix(4);
  }
  w.order = std::stoi(std::string(digits));
  w.lowpass = it->second;
  const size_t L = w.lowpass.size();
  w.highpass.resize(L);
  for (size_t j = 0; j < L; ++j) w.highpass[j] = ((j % 2) ? -1.0 : 1.0) * w.lowpass[L - 1 - j];
  return w;
}

std::vector<std::string> available_wavelets() {
  std::vector<std::string> names;
  for (const auto& [k, v] : filter_table()) names.push_back(k);
  return names;
}

void dwt_step(std::span<const double> x, const WaveletSpec& w, std::vector<double>* approx,
              std::vector<double>* detail) {
  std::vector<double> ext(x.begin(), x.end());
  if (ext.size() % 2) ext.push_back(ext.back());
  const size_t n = ext.size();
  const size_t half = n / 2;
  const size_t L = w.length();
  approx->assign(half, 0.0);
  detail->assign(half, 0.0);
  for (size_t k = 0; k < half; ++k) {
    double a = 0, d = 0;
    for (size_t j = 0; j < L; ++j) {
      double v = ext[(2 * k + j) % n];
      a += w.lowpass[j] * v;
      d += w.highpass[j] * v;
    }
    (*approx)[k] = a;
    (*detail)[k] = d;
  }
}

std::vector<double> idwt_step(std::span<const double> approx, std::span<const double> detail,
                              const WaveletSpec& w) {
  if (approx.size() != detail.size()) throw ValidationError("idwt: band length mismatch");
  const size_t half = approx.size();
  const size_t n = 2 * half;
  std::vector<double> x(n, 0.0);
  for (size_t k = 0; k < half; ++k)
    for (size_t j = 0; j < w.length(); ++j)
      x[(2 * k + j) % n] += w.lowpass[j] * approx[k] + w.highpass[j] * detail[k];
  return x;
}

DwtPyramid dwt_decompose(std::span<const double> signal, const WaveletSpec& w, int stages) {
  if (stages < 1) throw ValidationError("dwt: stages must be >= 1");
  if (w.lowpass.empty() || w.highpass.size() != w.lowpass.size())
    throw ValidationError("dwt: malformed wavelet");
  if (signal.size() < w.length()) throw ValidationError("dwt: signal shorter than filter");
  DwtPyramid p;
  p.stages = stages;
  std::vector<double> current(signal.begin(), signal.end());
  for (int s = 0; s < stages; ++s) {
    if (current.size() < 2) throw ValidationError("dwt: too many stages for signal length");
    std::vector<double> a, d;
    dwt_step(current, w, &a, &d);
    p.approximations.push_back(a);
    p.details.push_back(std::move(d));
    current = std::move(a);
  }
  return p;
}

}  // namespace upcall
