#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wurl {

using Vec = std::vector<double>;

// Configuration / file-format problems (bad keys, missing files, corrupt
// checkpoints). Everything else uses std::invalid_argument / std::logic_error.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_state(bool cond, const char* msg) {
  if (!cond) throw std::logic_error(msg);
}

inline double sqr(double x) { return x * x; }

// FNV-1a over raw double bits; used for frozen-parameter checks.
inline std::uint64_t hash_doubles(std::span<const double> xs) {
  std::uint64_t h = 1469598103934665603ull;
  for (double x : xs) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(x));
    __builtin_memcpy(&bits, &x, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace wurl
