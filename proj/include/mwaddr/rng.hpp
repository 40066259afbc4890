#pragma once

#include <cstdint>
#include <cmath>

#include "mwaddr/units.hpp"

// Deterministic random streams.  A Substream is keyed by (seed, index), so
// Monte-Carlo trials can be evaluated in any order (or in parallel) and
// still reproduce bit-for-bit.  Gaussians come from an explicit Box-Muller
// transform; the standard library's normal_distribution is implementation
// defined and would tie outputs to one libstdc++ version.

namespace mwaddr::rng {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Substream {
 public:
  Substream(uint64_t seed, uint64_t index) : state_(seed) {
    (void)splitmix64(state_);
    state_ ^= 0x9e3779b97f4a7c15ULL * (index + 1);
    (void)splitmix64(state_);
  }

  uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // standard normal via Box-Muller, one cached value
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(units::two_pi * u2);
    have_cached_ = true;
    return r * std::cos(units::two_pi * u2);
  }

 private:
  uint64_t state_;
  double cached_ = 0;
  bool have_cached_ = false;
};

} // namespace mwaddr::rng
