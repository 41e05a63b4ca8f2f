#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "exprfuse/errors.hpp"

namespace exprfuse {

// Small sampling helpers on top of mt19937_64. The raw engine sequence is
// pinned by the standard, and these transforms avoid std::*_distribution,
// whose algorithms are implementation-defined; artifacts generated from a
// seed are therefore byte-identical across standard libraries.

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) {
    x = rng();
  }
  return x % n;
}

inline double standard_normal(std::mt19937_64& rng) {
  // Box-Muller, one value per draw.
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void shuffle_in_place(std::vector<T>& items, std::mt19937_64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// Samples an index from an unnormalized non-negative weight vector.
inline size_t sample_discrete(std::span<const double> weights,
                              std::mt19937_64& rng) {
  double total = 0.0;
  for (const double w : weights) {
    total += w;
  }
  if (!(total > 0.0)) {
    throw InternalError("sample_discrete: weights sum to zero");
  }
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) {
      return i;
    }
  }
  return weights.size() - 1;
}

}  // namespace exprfuse
