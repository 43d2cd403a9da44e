#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace skillgp {

/// Deterministic random source. Wraps mt19937_64 but derives uniforms and
/// normals by hand (53-bit scaling, Box-Muller) so the produced values do
/// not depend on which standard library the project is built against;
/// byte-identical outputs are part of the contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double gauss() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double gauss(double mean, double stddev) { return mean + stddev * gauss(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t integer(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 mixer: spreads consecutive counters into independent seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic Fisher-Yates shuffle (std::shuffle's draw sequence is
/// implementation-defined, which would break run-to-run reproducibility
/// across toolchains). Accepts anything with size() and operator[].
template <typename Seq>
void shuffle(Seq&& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.integer(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace skillgp
