/*
 * Copyright 2026 The qtomo authors
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

#ifndef QTOMO_CORE_RNG_HPP
#define QTOMO_CORE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace qtomo {

/// Deterministic RNG used throughout. Uniform and Gaussian variates are
/// generated from raw mt19937_64 output (not std::*_distribution, whose
/// sequences may change between standard library versions), so fixed-seed
/// runs reproduce bit-exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection sampling keeps the distribution exact.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (cached spare deviate).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 step; used to derive independent substreams from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for substream `stream` of replica `replica` under `master`.
/// Streams for distinct (replica, stream) pairs are effectively independent.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica,
                                 std::uint64_t stream) {
  std::uint64_t s = master;
  (void)splitmix64(s);
  s ^= 0x6a09e667f3bcc909ULL + replica * 0x510e527fade682d1ULL;
  (void)splitmix64(s);
  s ^= 0xbb67ae8584caa73bULL + stream * 0x9b05688c2b3e6c1fULL;
  return splitmix64(s);
}

}  // namespace qtomo

#endif  // QTOMO_CORE_RNG_HPP
