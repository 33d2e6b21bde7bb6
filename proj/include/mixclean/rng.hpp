#ifndef MIXCLEAN_RNG_HPP
#define MIXCLEAN_RNG_HPP

#include <array>
#include <cstdint>
#include <span>

namespace mixclean {

/// SplitMix64 finalizer. Used to expand seeds and to derive stream keys.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t &state) noexcept;

/// Mix a base seed with stream coordinates into an independent 64-bit key.
/// derive_seed(s, a, b) is stable across platforms and thread counts.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                        std::uint64_t b = 0) noexcept;

/// xoshiro256** generator seeded through SplitMix64.
///
/// Every distribution below is implemented here rather than through
/// <random> so that output is byte-identical across standard libraries.
/// Per-sample streams are obtained with `Rng::stream(seed, a, b)`, which
/// seeds a fresh generator from `derive_seed(seed, a, b)`.
class Rng {
public:
  explicit Rng(std::uint64_t seed) noexcept;

  [[nodiscard]] static Rng stream(std::uint64_t seed, std::uint64_t a,
                                  std::uint64_t b = 0) noexcept {
    return Rng(derive_seed(seed, a, b));
  }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of precision.
  double uniform() noexcept;

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Standard normal (Box-Muller, no cached second variate).
  double normal() noexcept;

  /// Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape) noexcept;

  /// Index drawn with probability proportional to `weights` (inverse CDF).
  std::size_t categorical(std::span<const double> weights) noexcept;

private:
  std::array<std::uint64_t, 4> s_{};
};

} // namespace mixclean

#endif // MIXCLEAN_RNG_HPP
