#pragma once

#include <cmath>
#include <cstdint>

namespace colgrade {

// splitmix64 finalizer. Used both as the core PRNG step and as a stateless
// integer hash for lattice noise.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic splitmix64 stream. Self-contained so that every output is
// reproducible bit-for-bit regardless of standard library version; the
// <random> distributions make no such guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Standard normal via Box-Muller (no spare caching, keeps the state a
  // single word).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Derive an independent child seed; used to fan a master seed out over
  // samples, trees, folds, etc.
  std::uint64_t derive(std::uint64_t index) const {
    return mix64(state_ ^ mix64(index + 0x51ed2701a9c53a1dULL));
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates shuffle driven by the deterministic stream above.
template <class Vec>
void shuffle(Vec& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.next_u64() % i;
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace colgrade
