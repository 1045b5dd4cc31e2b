#pragma once

#include <cstdint>
#include <random>

#include "gecco/tensor.hpp"

namespace gecco {

// All randomness flows through mt19937_64 plus the hand-rolled draws below.
// The std:: distributions are implementation-defined, these are not, so a
// seed pins the exact same stream everywhere.
using Rng = std::mt19937_64;

// Uniform in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& g) {
  return static_cast<double>(g() >> 11) * (1.0 / 9007199254740992.0);
}

inline real uniform_real(Rng& g, real lo, real hi) {
  return static_cast<real>(lo + (hi - lo) * uniform_unit(g));
}

// Uniform integer in [0, n). Modulo bias is irrelevant at our scales and the
// draw stays portable.
inline std::uint64_t uniform_index(Rng& g, std::uint64_t n) {
  return g() % n;
}

// Standard normal via Box-Muller (single value, second discarded).
inline real normal_real(Rng& g) {
  double u1 = uniform_unit(g);
  double u2 = uniform_unit(g);
  if (u1 <= 0.0) u1 = 1e-300;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return static_cast<real>(r * std::cos(6.283185307179586 * u2));
}

// Seeded in-place Fisher-Yates.
template <typename T>
void shuffle_indices(std::vector<T>& v, Rng& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_index(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace gecco
