#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fdridge {

namespace detail {

// splitmix64 finalizer; bijective on u64.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Counter-based pseudo-random generator: output i of stream (seed, stream)
/// is a fixed mixing function of (seed, stream, i). Draws are reproducible
/// bit-for-bit for a given seed, independent of platform or call pattern
/// elsewhere, and distinct streams never collide in practice.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(detail::mix64(detail::mix64(seed) ^
                            (0x9E3779B97F4A7C15ULL * (stream + 1)))) {}

  std::uint64_t next_u64() {
    return detail::mix64(base_ + 0x9E3779B97F4A7C15ULL * counter_++);
  }

  /// Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; generated in pairs, one cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_double_open();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Uniform index in [0, n); n > 0.
  std::uint64_t next_index(std::uint64_t n) {
    // Fixed-point multiply; bias is O(n / 2^64).
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// +1 or -1 with equal probability.
  double next_sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) {
    counter_ = c;
    have_spare_ = false;
  }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fdridge
