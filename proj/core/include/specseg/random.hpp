#pragma once

// Fully specified pseudo-random streams so that datasets, noise and
// initialization reproduce bit-for-bit in any language:
//
//   * SplitMix64 (Steele, Lea & Flood) as the only bit source.
//   * uniform(): top 53 bits scaled by 2^-53, in [0, 1).
//   * normal(): Box-Muller on u1 = 1 - uniform() in (0, 1] and u2 = uniform();
//     the cosine branch is returned first, the sine branch is cached for the
//     next call.
//   * uniform_index(n): high 64 bits of the 128-bit product next() * n.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

namespace specseg {

__extension__ using uint128_t = unsigned __int128;

/// The SplitMix64 output finalizer, usable as a 64-bit mixing function.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the stream for item `index` of a run seeded with `seed`.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index + 0x9e3779b97f4a7c15ULL));
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return next(); }

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<uint128_t>(next()) * n) >> 64);
  }

  double normal() noexcept {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

}  // namespace specseg
