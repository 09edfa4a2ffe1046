#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace ldsid {

// SplitMix64 (Steele, Lea & Flood, 2014). The state is a Weyl counter and
// every output is a finalizer hash of that counter, so the sequence is a
// pure function of the 64-bit seed. No global state anywhere; every public
// API that consumes randomness takes an explicit seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second member of each pair is cached.
  double next_gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Hash-combines a base seed with a path of indices (grid point, trial,
// sample, ...) so nested components draw from independent streams. The
// derivation depends only on the path, never on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = detail::mix64(base + 0x9E3779B97F4A7C15ULL);
  for (std::uint64_t p : path) {
    s = detail::mix64(s ^ (p + 0x9E3779B97F4A7C15ULL + (s << 6) + (s >> 2)));
  }
  return s;
}

}  // namespace ldsid
