#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "wurl/common.hpp"

namespace wurl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

// Splittable seed tree. Every component takes its own child so adding RNG
// consumers in one place never shifts the streams of another.
class SeedSeq {
 public:
  explicit SeedSeq(std::uint64_t seed) : state_(splitmix64(seed ^ 0x7c0ffee5eed5ull)) {}

  // Child sequence for a named slot (stable w.r.t. call order).
  SeedSeq at(std::uint64_t slot) const { return SeedSeq(mix(slot), 0); }

  // Next child in registration order.
  SeedSeq child() { return at(counter_++); }

  std::uint64_t raw(std::uint64_t slot) const { return mix(slot); }
  Rng rng(std::uint64_t slot) const { return Rng(mix(slot)); }

 private:
  SeedSeq(std::uint64_t state, int) : state_(state) {}
  std::uint64_t mix(std::uint64_t slot) const {
    return splitmix64(state_ + 0x9e3779b97f4a7c15ull * (slot + 1));
  }
  std::uint64_t state_;
  std::uint64_t counter_ = 0;
};

// Uniform in [0, 1). 53-bit resolution.
inline double uniform01(Rng& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Standard normal via Box-Muller, no cached spare: consumption pattern stays
// fixed at two raw draws per sample, independent of the standard library.
inline double std_normal(Rng& rng) {
  double u1 = 1.0 - uniform01(rng);  // (0, 1]
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

inline int uniform_int(Rng& rng, int n) {
  // Modulo bias is ~2^-53 for desk-scale n; not worth a rejection loop.
  return int(rng() % std::uint64_t(n));
}

// Uniform direction on S^{d-1}: normalized standard Gaussian.
inline Vec sample_direction(Rng& rng, int dim) {
  require(dim >= 1, "sample_direction: dim must be >= 1");
  Vec v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      v[i] = std_normal(rng);
      norm2 += v[i] * v[i];
    }
  } while (norm2 < 1e-24);
  double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace wurl
