/* Copyright 2026 The geosyn Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GEOSYN_CORE_RNG_H_
#define GEOSYN_CORE_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/tensor.h"

namespace geosyn {

// Deterministic random source. All transforms (uniform, normal, shuffle) are
// implemented here rather than with std distributions, whose output is
// implementation-defined; checkpoint resume relies on the serialized state
// continuing the exact same stream.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Derive an independent stream, e.g. per epoch.
  static Rng derived(uint64_t seed, uint64_t salt) {
    std::mt19937_64 mix(seed ^ (0x9e3779b97f4a7c15ull * (salt + 1)));
    return Rng(mix());
  }

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int64_t uniform_int(int64_t n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n <= 0");
    // rejection sampling keeps the distribution exact
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<int64_t>(x % un);
  }

  // Standard normal via Box-Muller; caches the second value.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void fill_normal(Tensor<T>& t, T mean, T stddev) {
    for (int64_t i = 0; i < t.numel(); ++i)
      t[i] = static_cast<T>(normal(mean, stddev));
  }

  template <typename T>
  void fill_uniform(Tensor<T>& t, T lo, T hi) {
    for (int64_t i = 0; i < t.numel(); ++i)
      t[i] = static_cast<T>(uniform(lo, hi));
  }

  template <typename X>
  void shuffle(std::vector<X>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      int64_t j = uniform_int(i + 1);
      std::swap(v[i], v[j]);
    }
  }

  std::string serialize() const {
    std::ostringstream os;
    os << gen_ << " " << (has_spare_ ? 1 : 0) << " ";
    os.precision(17);
    os << spare_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    int hs = 0;
    is >> gen_ >> hs >> spare_;
    if (is.fail()) throw std::runtime_error("Rng::deserialize: bad state string");
    has_spare_ = hs != 0;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace geosyn

#endif  // GEOSYN_CORE_RNG_H_
