#pragma once

#include <cstdint>
#include <random>

namespace ppoue {

/// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/*!
 * Seeded random source. Only the raw mt19937_64 output is used; uniform and
 * normal variates are derived here so that streams are identical across
 * standard library implementations.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent generator for a named sub-stream of `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(mix_seed(seed ^ mix_seed(stream_id)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller; consumes exactly two raw draws.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace ppoue
