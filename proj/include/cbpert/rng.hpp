// Copyright 2026 The cbpert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reproducible random streams.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++
// standard. It is seeded with a single 64-bit word.
//
// Stream split: substream `t` of a master seed s is seeded with
// splitmix64(s ^ splitmix64(t + 1)), so trial streams never depend on the
// order in which trials are run.
//
// Uniforms take the top 53 bits of one engine output: u = (x >> 11) * 2^-53,
// which lies in [0, 1). Normals use the Box-Muller cosine branch only:
// z = sqrt(-2 log(1 - u1)) * cos(2 pi u2), two engine outputs per draw.
// std::normal_distribution is avoided because its algorithm is
// implementation-defined.

#ifndef CBPERT_RNG_HPP_
#define CBPERT_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cbpert {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // +1 or -1 with equal probability, from the top bit.
  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cbpert

#endif  // CBPERT_RNG_HPP_
