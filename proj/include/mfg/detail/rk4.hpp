#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfg/error.hpp"

namespace mfg::detail {

/// Nodes 0 = tau_0 > tau_1 > ... > tau_m = s, spaced by h except for a
/// shortened final step. Node k < m is exactly -k*h, so grids for
/// different end times share their interior nodes.
inline std::vector<double> backward_grid(double s, double h) {
  if (!(h > 0.0) || !std::isfinite(s) || s > 0.0) {
    throw Error(ErrorKind::config, "backward grid needs s <= 0 and h > 0");
  }
  std::vector<double> grid{0.0};
  const double span = -s;
  for (long k = 1; static_cast<double>(k) * h < span - 1e-9 * h; ++k) {
    grid.push_back(-static_cast<double>(k) * h);
  }
  if (span > 0.0) grid.push_back(s);
  return grid;
}

/// Classical RK4 along `grid` (any direction). rhs(tau, y, dy) fills dy;
/// observe(k, tau, y) sees every node including the first.
template <class Rhs, class Observer>
void rk4_along(const std::vector<double>& grid, Eigen::VectorXd& y, Rhs&& rhs,
               Observer&& observe) {
  const auto n = y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), stage(n);
  observe(std::size_t{0}, grid.front(), y);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double tau = grid[k];
    const double h = grid[k + 1] - tau;
    rhs(tau, y, k1);
    stage = y + 0.5 * h * k1;
    rhs(tau + 0.5 * h, stage, k2);
    stage = y + 0.5 * h * k2;
    rhs(tau + 0.5 * h, stage, k3);
    stage = y + h * k3;
    rhs(grid[k + 1], stage, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite()) {
      throw Error(ErrorKind::blow_up,
                  "integrator state became non-finite at time " + format_double(grid[k + 1]));
    }
    observe(k + 1, grid[k + 1], y);
  }
}

/// Cubic Hermite interpolation on [t0, t1] from endpoint values and slopes.
template <class A, class B, class C, class D>
auto hermite(double t0, double t1, double t, const A& p0, const B& v0, const C& p1,
             const D& v1) {
  const double h = t1 - t0;
  const double u = (t - t0) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  return (h00 * p0 + (h10 * h) * v0 + h01 * p1 + (h11 * h) * v1).eval();
}

}  // namespace mfg::detail
