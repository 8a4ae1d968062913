#pragma once

// Seeded randomness helpers. Every random draw in the library flows through
// a mt19937_64 engine whose seed is derived from a single master seed, so
// experiment outputs are reproducible byte for byte.

#include <cmath>
#include <cstdint>
#include <random>

namespace difftomo {

// Generator name recorded in experiment metadata.
inline constexpr const char* kGeneratorName = "mt19937_64";

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent child seed from a master seed and up to three
// stream coordinates (e.g. k, congested-set ordinal, stream id).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(master + 0x9e3779b97f4a7c15ull);
  s = mix64(s ^ (a + 0x9e3779b97f4a7c15ull));
  s = mix64(s ^ (b + 0x3c6ef372fe94f82bull));
  s = mix64(s ^ (c + 0x5851f42d4c957f2dull));
  return s;
}

// Uniform draw in the open interval (0,1), 53-bit resolution. Never returns
// 0 or 1, so inverse-CDF transforms stay finite and strictly positive.
inline double unit_open(std::mt19937_64& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1p-53;
}

// Inverse-CDF exponential draw with the given mean; strictly positive.
inline double exponential_draw(std::mt19937_64& g, double mean) {
  return -mean * std::log1p(-unit_open(g));
}

inline double uniform_in(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * unit_open(g);
}

// Unbiased draw in [0, n) by rejection; used for seeded shuffles so the
// permutation stream does not depend on the standard library's std::shuffle.
inline std::uint64_t bounded_draw(std::mt19937_64& g, std::uint64_t n) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
  std::uint64_t v = g();
  while (v >= limit) v = g();
  return v % n;
}

}  // namespace difftomo
