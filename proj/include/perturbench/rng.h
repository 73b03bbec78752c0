//
// Copyright 2026 The Perturbench Authors
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
//

#ifndef PERTURBENCH_RNG_H_
#define PERTURBENCH_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

// Keyed, platform-independent random streams. Every random decision in the
// toolkit draws from a stream keyed by (seed, item id, position, stage) so
// results do not depend on iteration order or thread scheduling. The standard
// <random> distributions are avoided on purpose: their output is not
// specified across standard library implementations.
namespace perturbench::rng {

constexpr std::uint64_t Mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t HashString(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Mix(h);
}

constexpr std::uint64_t Key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = Mix(h ^ Mix(p));
  return h;
}

// Stage tags separate the streams used by different decisions about the
// same word.
enum class Stage : std::uint64_t {
  kSelect = 1,
  kOperator = 2,
  kSource = 3,
  kOptions = 4,
  kOrder = 5,
  kBootstrap = 6,
  kFeatures = 7,
  kSweep = 8,
};

constexpr std::uint64_t StageKey(Stage s) {
  return static_cast<std::uint64_t>(s);
}

// splitmix64 sequence; satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t key) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on the open interval (0, 1).
  double Uniform() { return ToOpenUnit((*this)()); }

  // Uniform integer in [0, n); n must be positive.
  std::uint64_t Below(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  // Index drawn according to non-negative weights.
  std::size_t Categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = Uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return weights.size() - 1;
  }

  template <typename Container>
  void Shuffle(Container& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = Below(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  // Maps 64 random bits onto (0, 1): the 53-bit lattice is offset by half a
  // step so neither 0 nor 1 is reachable.
  static constexpr double ToOpenUnit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace perturbench::rng

#endif  // PERTURBENCH_RNG_H_
