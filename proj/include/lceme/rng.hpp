#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace lceme {

// Deterministic counter-seeded random stream (splitmix64 core).
//
// Every stochastic step in the library draws from one of these. Streams for a
// (client, round) pair are derived from the run seed via substream(), which
// makes results independent of thread interleaving or client iteration order.
// We deliberately avoid std::uniform_*_distribution: its output is
// implementation-defined and would break byte-identical reruns across
// standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(scramble(seed + kGolden)) {}

  // Derives an independent stream from (seed, path...). Same path, same stream.
  static RngStream substream(std::uint64_t seed,
                             std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = scramble(seed + kGolden);
    for (std::uint64_t p : path) h = scramble(h ^ scramble(p + kGolden));
    RngStream s(0);
    s.state_ = h;
    return s;
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return scramble_final(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Unbiased uniform integer in [0, n) by rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Standard normal via Box-Muller (one value per pair of uniforms; the
  // second is discarded so draws never depend on call history).
  double next_gaussian() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t scramble(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t scramble_final(std::uint64_t z) { return scramble(z); }

  std::uint64_t state_;
};

}  // namespace lceme
