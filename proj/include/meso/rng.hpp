#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace meso {

// All stochastic code draws from one mt19937_64 per run through the helpers
// below. The helpers avoid std distribution objects on purpose: their output
// is implementation-defined, and we want bit-identical runs for a given seed
// on any standard library.
using Rng = std::mt19937_64;

// Uniform double in [0, 1), 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Index in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  std::size_t i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// Inverse-CDF draw from unnormalized non-negative weights. Consumes exactly
// one uniform variate.
inline int sample_categorical(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;  // u == total edge case
}

// Fisher-Yates; same caveat as above about std::shuffle portability.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace meso
