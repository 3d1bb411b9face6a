#include "mfg/instances.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace mfg {

namespace {

std::vector<Eigen::VectorXi> half_space_modes(int dim) {
  std::vector<Eigen::VectorXi> modes;
  Eigen::VectorXi k = Eigen::VectorXi::Constant(dim, -2);
  while (true) {
    int lead = 0;
    for (int i = 0; i < dim && lead == 0; ++i) lead = k[i];
    if (lead > 0) modes.push_back(k);
    int i = dim - 1;
    while (i >= 0 && k[i] == 2) k[i--] = -2;
    if (i < 0) break;
    ++k[i];
  }
  return modes;
}

}  // namespace

TrigSeries random_series(int dim, bool even, double scale, InstanceRng& rng) {
  std::vector<TrigTerm> terms;
  for (const auto& k : half_space_modes(dim)) {
    const double w = 2.0 * std::numbers::pi * k.cast<double>().norm();
    TrigTerm term{k, scale * rng.uniform(-1.0, 1.0) / (w * w), 0.0};
    if (!even) term.b = scale * rng.uniform(-1.0, 1.0) / (w * w);
    terms.push_back(std::move(term));
  }
  return TrigSeries(dim, std::move(terms), even);
}

PotentialSet random_potentials(int dim, InstanceRng& rng) {
  TrigSeries phi = random_series(dim, true, 1.0, rng);
  TrigSeries u0 = random_series(dim, false, 1.0, rng);
  TrigSeries u1 = random_series(dim, true, 1.0, rng);
  return PotentialSet(std::move(phi), std::move(u0), std::move(u1));
}

Parametrization random_parametrization(int dim, int n, InstanceRng& rng) {
  Eigen::MatrixXd m(dim, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) m(k, i) = rng.uniform();
  }
  return Parametrization(std::move(m));
}

GroupElement random_group_element(int dim, int n, InstanceRng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  Eigen::MatrixXi shifts(dim, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) shifts(k, i) = rng.below(5) - 2;
  }
  return GroupElement(std::move(perm), std::move(shifts));
}

}  // namespace mfg
