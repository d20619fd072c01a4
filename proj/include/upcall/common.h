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

#ifndef UPCALL_COMMON_H_
#define UPCALL_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace upcall {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Class index order used by every network head and posterior vector.
enum class Label : int { upcall = 0, noise = 1 };

inline constexpr int kNumClasses = 2;

inline int class_index(Label l) { return static_cast<int>(l); }
inline Label label_from_index(int i) { return i == 0 ? Label::upcall : Label::noise; }
std::string_view label_name(Label l);
Label parse_label(std::string_view s);

// Bad configuration or arguments; detected before any work is done.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure while doing work (I/O, numerical breakdown, corrupt inputs).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

uint64_t splitmix64(uint64_t x);

// Stable seed derivation: the same (master, tag, index) always yields the same
// stream seed, and distinct tuples yield distinct seeds with overwhelming
// probability.
uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index);

// Seeded random stream. Distributions are computed here instead of through
// <random> distribution classes so results do not depend on the standard
// library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi].
  int64_t uniform_int(int64_t lo, int64_t hi);
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename Container>
  void shuffle(Container& c) {
    for (size_t i = c.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(c[i - 1], c[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace upcall

#endif  // UPCALL_COMMON_H_
