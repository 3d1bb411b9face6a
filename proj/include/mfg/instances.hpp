#pragma once

#include <cstdint>
#include <random>

#include "mfg/config_space.hpp"
#include "mfg/mean_field.hpp"

namespace mfg {

/// Reproducible uniform stream: std::mt19937_64 seeded with `seed`, and
/// uniform() = (next() >> 11) * 2^-53 in [0, 1). Every random instance in
/// the tools and tests is drawn from this stream in a fixed order, so other
/// implementations can regenerate the same suites.
class InstanceRng {
 public:
  explicit InstanceRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  int below(int n) { return static_cast<int>(uniform() * n); }

 private:
  std::mt19937_64 engine_;
};

/// Modes k in {-2..2}^d, k != 0, whose first nonzero entry is positive,
/// in lexicographic order. Each gets a = c * r_a / (2 pi |k|)^2 with r_a
/// uniform in [-1, 1) and, unless even, b drawn the same way after a.
TrigSeries random_series(int dim, bool even, double scale, InstanceRng& rng);

/// phi, u0, u1 drawn in that order with unit-scale second derivatives.
PotentialSet random_potentials(int dim, InstanceRng& rng);

/// N cells uniform in [0, 1)^d, cell by cell, coordinates in order.
Parametrization random_parametrization(int dim, int n, InstanceRng& rng);

/// Random permutation (Fisher-Yates from the last index) and shifts in {-2..2}.
GroupElement random_group_element(int dim, int n, InstanceRng& rng);

}  // namespace mfg
