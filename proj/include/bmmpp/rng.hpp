/*
 * Copyright (c) 2026, the bmmpp2 authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>

namespace bmmpp {

// Seed plus stream id.  The same (seed, stream) pair always reproduces the
// same sequence, on every platform; distinct streams are statistically
// independent for practical purposes.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// Counter-based generator: the i-th output is a pure function of
// (key, i), using the SplitMix64 finalizer over a keyed Weyl sequence.
// State is just the counter, so jumping and stream splitting are trivial.
class CounterRng {
 public:
  CounterRng() : CounterRng(RngSpec{}) {}
  explicit CounterRng(const RngSpec &spec)
      : key_(derive_key(spec.seed, spec.stream)), counter_(0) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : CounterRng(RngSpec{seed, stream}) {}

  std::uint64_t next_u64() {
    return mix(key_ + (++counter_) * kWeyl);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_u01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Exponential with the given rate (> 0); never returns 0 or infinity.
  double next_exp(double rate) {
    double u;
    do {
      u = next_u01();
    } while (u >= 1.0);
    return -std::log1p(-u) / rate;
  }

  // Uniform on [lo, hi].
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_u01();
  }

  // Index in [0, n) proportional to weights[0..n).
  template <class Weights>
  int next_discrete(const Weights &weights, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += weights[i];
    double u = next_u01() * total;
    for (int i = 0; i < n - 1; ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return n - 1;
  }

  // A derived spec for an independent substream, e.g. per multistart point.
  static RngSpec substream(const RngSpec &spec, std::uint64_t salt) {
    return RngSpec{spec.seed, mix(spec.stream + kWeyl * (salt + 1))};
  }

 private:
  static constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(mix(seed + kWeyl) + mix(stream + 2 * kWeyl));
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace bmmpp
