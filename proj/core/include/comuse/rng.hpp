// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "comuse/hash.hpp"

namespace comuse {

/* Project-wide pseudo random generator (SplitMix64).
 *
 * Splits, shuffles and synthetic embeddings must reproduce bit for bit on
 * any platform, and the standard library distributions are allowed to
 * differ between implementations. Everything random in this project goes
 * through this class and the helpers below, never through <random>. */
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /* Unbiased draw from [0, bound) by rejection sampling. bound > 0. */
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /* Uniform in [0, 1), 53 random bits. */
  double next_unit() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /* Standard normal via Box-Muller. Consumes two draws. */
  double next_normal() noexcept;

 private:
  std::uint64_t state_;
};

/* Derives an independent stream seed from a base seed and a purpose label,
 * so consumers of one experiment seed do not accidentally share a stream. */
inline std::uint64_t derive_stream(std::uint64_t seed,
                                   std::string_view label) noexcept {
  SplitMix64 rng(seed ^ fnv1a64(label));
  return rng.next();
}

/* In-place Fisher-Yates shuffle. */
template <typename T>
void shuffle(std::vector<T>& values, SplitMix64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(values[i - 1], values[j]);
  }
}

inline double SplitMix64::next_normal() noexcept {
  /* u1 must stay away from zero for the log. */
  double u1;
  do {
    u1 = next_unit();
  } while (u1 <= 0.0);
  const double u2 = next_unit();
  const double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace comuse
