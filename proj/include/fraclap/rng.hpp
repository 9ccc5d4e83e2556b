#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace fraclap {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so parallel evaluation order never changes
// the values and runs are reproducible from a single 64-bit seed.
namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

struct Rng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::uint64_t bits(std::uint64_t counter) const {
    std::uint64_t h = detail::mix64(seed ^ 0x2545f4914f6cdd1dULL);
    h = detail::mix64(h ^ stream);
    return detail::mix64(h ^ (counter * 0xd1b54a32d192ed03ULL));
  }

  /// uniform in [0,1)
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// uniform in (-1,1)
  double symmetric(std::uint64_t counter) const { return 2.0 * uniform(counter) - 1.0; }

  /// standard normal (Box-Muller on two derived counters)
  double normal(std::uint64_t counter) const {
    double u1 = uniform(counter * 2 + 1);
    double u2 = uniform(counter * 2 + 2);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Rng fork(std::uint64_t substream) const { return Rng{seed, detail::mix64(stream ^ substream)}; }
};

/// vector of iid symmetric uniforms, one per node
inline std::vector<double> random_vector(const Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.symmetric(i);
  return v;
}

}  // namespace fraclap
