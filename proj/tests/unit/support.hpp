#pragma once

#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Dense>

#include "mfg/instances.hpp"
#include "mfg/kernels.hpp"
#include "mfg/mean_field.hpp"

namespace testing {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline Eigen::VectorXi mode(std::initializer_list<int> k) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(k.size()));
  int i = 0;
  for (int x : k) v[i++] = x;
  return v;
}

inline Eigen::VectorXd point(std::initializer_list<double> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  int i = 0;
  for (double c : x) v[i++] = c;
  return v;
}

inline mfg::Parametrization cells_1d(std::initializer_list<double> x) {
  return mfg::Parametrization(point(x).transpose());
}

/// u0(q) = amplitude * cos(2 pi q) in d = 1, everything else zero.
inline mfg::PotentialSet single_cosine(double amplitude) {
  mfg::TrigSeries u0(1, {mfg::TrigTerm{mode({1}), amplitude, 0.0}}, false);
  return mfg::PotentialSet(mfg::TrigSeries::zero(1), u0, mfg::TrigSeries::zero(1));
}

/// Central differences of a scalar function, step h per coordinate.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd p = x, m = x;
    p[k] += h;
    m[k] -= h;
    g[k] = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing
