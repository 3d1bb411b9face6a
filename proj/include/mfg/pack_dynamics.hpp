#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfg/config_space.hpp"
#include "mfg/mean_field.hpp"

namespace mfg {

enum class ShootingMethod { picard, newton_fd };

std::string to_string(ShootingMethod method);
ShootingMethod shooting_method_from_string(const std::string& name);

/// Integrator and shooting controls shared by the pack and particle solvers.
struct SolveOptions {
  double h_step = 1e-3;
  double tol = 1e-13;
  int max_iter = 200;
  ShootingMethod method = ShootingMethod::picard;
};

/// Finite-difference steps used by the residual certificates.
struct FdSteps {
  double delta_t = 1e-4;
  double delta_q = 1e-5;
  double delta_psi = 1e-5;  ///< scaled by (1 + |psi|_M) at use
};

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;  ///< M-norm of Sigma(t, anchor) - psi
  ShootingMethod method = ShootingMethod::picard;
  double contraction_estimate = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
};

/// The pack curve s -> sigma_s on the integrator grid, times increasing
/// from the start time to 0.
class PackTrajectory {
 public:
  PackTrajectory() = default;
  PackTrajectory(std::vector<double> times, std::vector<Parametrization> positions,
                 std::vector<TangentField> velocities, std::vector<double> cost_to_go);

  std::size_t node_count() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const Parametrization& position(std::size_t k) const { return positions_[k]; }
  const TangentField& velocity(std::size_t k) const { return velocities_[k]; }
  /// Integral of 1/2 |sigma_dot|_M^2 - cal_F_hat(sigma) from times()[k] to 0.
  double cost_to_go(std::size_t k) const { return cost_to_go_[k]; }

  double start_time() const { return times_.front(); }
  const Parametrization& initial() const { return positions_.front(); }
  const Parametrization& terminal() const { return positions_.back(); }

  /// Positions at any tau in [start_time(), 0] by cubic Hermite
  /// interpolation between nodes; exact at nodes.
  Parametrization position_at(double tau) const;
  void position_at(double tau, Eigen::MatrixXd& out) const;

  /// 1/2 |sigma_dot|_M^2 + cal_F_hat(sigma): conserved along the exact flow.
  double energy(std::size_t k, const PotentialSet& P) const;

 private:
  std::vector<double> times_;
  std::vector<Parametrization> positions_;
  std::vector<TangentField> velocities_;
  std::vector<double> cost_to_go_;
};

struct PackState {
  Parametrization position;
  TangentField velocity;
};

/// Cauchy flow anchored at time 0: sigma_0 = anchor,
/// sigma_dot_0 = -grad u0_hat(anchor_i, anchor), sigma_ddot = -grad F_hat(sigma_i, sigma),
/// integrated backward to s <= 0 with fixed-step RK4.
PackState sigma_flow(double s, const Parametrization& anchor, const PotentialSet& P, double h_step);

/// The same flow with every node recorded, over [s, 0].
PackTrajectory integrate_pack(double s, const Parametrization& anchor, const PotentialSet& P,
                              double h_step);

struct PackSolution {
  double t = 0.0;
  Parametrization psi;     ///< prescribed state at time t
  Parametrization anchor;  ///< terminal state sigma_0 solving Sigma(t, anchor) = psi
  PackTrajectory trajectory;
  SolveReport report;
};

/// Shooting solve of Sigma(t, anchor) = psi, starting from anchor = psi.
/// Throws no_convergence when the residual does not reach opts.tol
/// within opts.max_iter iterations (|t| outside the contraction regime).
PackSolution solve_pack(double t, const Parametrization& psi, const PotentialSet& P,
                        const SolveOptions& opts);

/// Value of the pack problem along the shooting solution:
/// integral of 1/2 |sigma_dot|^2 - cal_F_hat over [t,0] plus cal_U0_hat(sigma_0).
double value_V(const PackSolution& solution, const PotentialSet& P);
double value_V(double t, const Parametrization& psi, const PotentialSet& P,
               const SolveOptions& opts);

/// Representer of DV(t, psi): minus the initial pack velocity.
TangentField grad_V(const PackSolution& solution);
TangentField grad_V(double t, const Parametrization& psi, const PotentialSet& P,
                    const SolveOptions& opts);
/// Central-difference gradient of value_V, scaled by N to a representer.
TangentField grad_V_fd(double t, const Parametrization& psi, const PotentialSet& P,
                       const SolveOptions& opts, double delta_psi);

/// Central difference in t of g, one-sided second order when t + delta > 0.
template <class F>
double time_derivative(F&& g, double t, double delta) {
  if (t + delta <= 0.0) return (g(t + delta) - g(t - delta)) / (2.0 * delta);
  return (3.0 * g(t) - 4.0 * g(t - delta) + g(t - 2.0 * delta)) / (2.0 * delta);
}

struct HjResidual {
  double residual = 0.0;      ///< |-dV/dt + 1/2 |DV|_M^2 + cal_F_hat(psi)|
  double terminal_gap = 0.0;  ///< |V(0, psi) - cal_U0_hat(psi)|
  double dt_value = 0.0;
  double half_grad_sq = 0.0;
  double potential = 0.0;
};

HjResidual hj_residual(double t, const Parametrization& psi, const PotentialSet& P,
                       const SolveOptions& opts, double delta_t);

/// M-norm gap between sigma_tau^{(t,psi)} and sigma_tau^{(s, sigma_s^{(t,psi)})}.
double flow_property_gap(double t, double s, double tau, const Parametrization& psi,
                         const PotentialSet& P, const SolveOptions& opts);

/// A pack path sampled on increasing times from t to 0.
struct DiscretePath {
  std::vector<double> times;
  std::vector<Parametrization> nodes;
};

/// Action with piecewise-linear velocities and trapezoid potential:
/// sum_k [ |sigma_{k+1}-sigma_k|_M^2 / (2 dt_k) - dt_k (F_k + F_{k+1}) / 2 ] + cal_U0_hat(sigma_last).
double action_of_path(const DiscretePath& path, const PotentialSet& P);

struct DescentOptions {
  int nodes = 40;
  double grad_tol = 1e-10;
  int max_iter = 20000;
};

struct DirectMinimum {
  DiscretePath path;
  double value = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
};

/// Minimizes action_of_path over all nodes but the first (fixed at psi) by
/// gradient descent in the discrete H^1 metric with Armijo backtracking,
/// starting from the straight line with velocity -D cal_U0_hat(psi).
DirectMinimum direct_minimize_action(double t, const Parametrization& psi, const PotentialSet& P,
                                     const DescentOptions& opts);

/// Smooth variation eta(s) = linear * w + quadratic * w^2, w = (s - t) / (-t),
/// which vanishes at the fixed endpoint s = t.
struct PathPerturbation {
  Eigen::MatrixXd linear;
  Eigen::MatrixXd quadratic;
};

struct ActionVariation {
  double base = 0.0;        ///< action of the shooting trajectory
  double plus = 0.0;        ///< action of sigma + eps * eta
  double minus = 0.0;       ///< action of sigma - eps * eta
  double derivative = 0.0;  ///< (plus - minus) / (2 eps)
};

/// Continuous action of sigma^{(t,psi)} + eps*eta, with quadrature carried by
/// the integrator, probing first-order stationarity of the shooting solution.
ActionVariation action_variation(const PackSolution& solution, const PotentialSet& P,
                                 const PathPerturbation& eta, double eps, double h_step);

}  // namespace mfg
