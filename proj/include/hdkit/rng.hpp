#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace hdkit {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so random constructors are reproducible across
// backends and thread counts, and independent streams can be split off
// without shared state. The mixer is splitmix64.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed + kGolden) ^ mix(stream * kGolden + 1))) {}

  static std::uint64_t mix(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::uint64_t bits(std::uint64_t counter) const { return mix(key_ ^ (counter * kGolden)); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Uniform in [-1, 1).
  double uniform_pm1(std::uint64_t counter) const { return 2.0 * uniform01(counter) - 1.0; }

  // Uniform over {-1, +1}.
  int sign(std::uint64_t counter) const { return (bits(counter) & 1u) ? 1 : -1; }

  // Standard normal via Box-Muller; the pair of uniforms comes from counters
  // 2c and 2c+1 so the draw stays a pure function of the counter.
  double gaussian(std::uint64_t counter) const {
    double u1 = uniform01(2 * counter);
    double u2 = uniform01(2 * counter + 1);
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Sample k distinct indices from [0, n) by seeded partial Fisher-Yates.
  template <typename OutIt>
  void sample_without_replacement(std::int64_t n, std::int64_t k, OutIt out) const {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = 0; i < k; ++i) {
      std::int64_t j = i + static_cast<std::int64_t>(bits(static_cast<std::uint64_t>(i)) %
                                                     static_cast<std::uint64_t>(n - i));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      *out++ = idx[static_cast<std::size_t>(i)];
    }
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  std::uint64_t key_;
};

// Stream ids used by the library so different constructors never collide.
namespace rng_stream {
inline constexpr std::uint64_t kRandom = 0x52414e44;    // "RAND"
inline constexpr std::uint64_t kGaussian = 0x47415553;  // "GAUS"
inline constexpr std::uint64_t kChoice = 0x43484f49;    // "CHOI"
}  // namespace rng_stream

}  // namespace hdkit
