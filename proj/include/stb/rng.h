// Copyright 2026 The stb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STB_RNG_H_
#define STB_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace stb {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr uint64_t MixSeed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for task `stream` of a run seeded with `base`. Results depend only on
// (base, stream), never on scheduling.
constexpr uint64_t DeriveSeed(uint64_t base, uint64_t stream) {
  return MixSeed(MixSeed(base) ^ MixSeed(stream + 0x632be59bd9b4e019ULL));
}

// FNV-1a; stable across platforms, used for opaque ids.
constexpr uint64_t HashString(std::string_view s) {
  uint64_t h = 14695981039346656037ULL;
  for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return h;
}

inline Rng MakeRng(uint64_t base, uint64_t stream) {
  return Rng(DeriveSeed(base, stream));
}

// Uniform index in [0, n). Avoids std::uniform_int_distribution so streams are
// identical across standard library implementations.
inline size_t UniformIndex(Rng& rng, size_t n) {
  // Lemire's nearly-divisionless method with rejection.
  uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  uint64_t low = static_cast<uint64_t>(m);
  if (low < n) {
    uint64_t threshold = -static_cast<uint64_t>(n) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<uint64_t>(m);
    }
  }
  return static_cast<size_t>(m >> 64);
}

// Uniform double in [0, 1).
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename It>
void Shuffle(It first, It last, Rng& rng) {
  auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    auto j = static_cast<decltype(i)>(UniformIndex(rng, static_cast<size_t>(i) + 1));
    using std::swap;
    swap(first[i], first[j]);
  }
}

}  // namespace stb

#endif  // STB_RNG_H_
