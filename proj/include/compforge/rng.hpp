#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

namespace compforge {

std::uint64_t splitmix64(std::uint64_t& state);

/// xoshiro256** seeded through splitmix64.
///
/// Every random draw in the library goes through this generator, and all
/// derived quantities (uniform doubles, bounded integers, normals, shuffles)
/// are computed here rather than through <random> distributions, whose
/// algorithms differ between standard libraries. Seeded runs are therefore
/// reproducible across compilers and platforms.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (no cached second value).
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace compforge
