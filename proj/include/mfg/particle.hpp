#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mfg/pack_dynamics.hpp"

namespace mfg {

/// Optimal single-agent path y(tau | s, q, t, psi) for tau in [s, 0], with
/// the pack frozen along sigma^{(t,psi)}.
struct ParticlePath {
  double s = 0.0;
  Eigen::VectorXd q;
  std::vector<double> times;  ///< increasing, s to 0
  Eigen::MatrixXd y;          ///< d x nodes
  Eigen::MatrixXd ydot;       ///< d x nodes
  std::vector<double> cost_to_go;
  Eigen::VectorXd terminal;  ///< y(0), the shooting unknown
  SolveReport report;
};

/// Pack trajectory for (t, psi) covering [min(t, earliest), 0], so that
/// single agents can start before the pack's own initial time.
PackTrajectory pack_covering(const PackSolution& pack, double earliest, const PotentialSet& P,
                             double h_step);

/// Shooting over the terminal position ytilde: integrate
/// y'' = -grad F_hat(y, sigma_tau), y(0) = ytilde, y'(0) = -grad u0_hat(ytilde, sigma_0)
/// back to s and match y(s) = q. `pack` must cover s.
ParticlePath solve_particle(double s, const Eigen::VectorXd& q, const PackTrajectory& pack,
                            const PotentialSet& P, const SolveOptions& opts);
ParticlePath solve_particle(double s, const Eigen::VectorXd& q, double t,
                            const Parametrization& psi, const PotentialSet& P,
                            const SolveOptions& opts);

/// Integral of 1/2 |y'|^2 - F_hat(y, sigma_tau) over [s, 0] plus u0_hat(y(0), sigma_0).
double value_v(const ParticlePath& path, const PackTrajectory& pack, const PotentialSet& P);
double value_v(double s, const Eigen::VectorXd& q, double t, const Parametrization& psi,
               const PotentialSet& P, const SolveOptions& opts);

/// u(t, q | psi) = v(t, q | t, psi).
double value_u(double t, const Eigen::VectorXd& q, const Parametrization& psi,
               const PotentialSet& P, const SolveOptions& opts);

/// grad u(t, q | psi) = -y'(t) along the optimal path from (t, q).
Eigen::VectorXd grad_u(double t, const Eigen::VectorXd& q, const Parametrization& psi,
                       const PotentialSet& P, const SolveOptions& opts);
Eigen::VectorXd grad_u(const PackSolution& pack, const Eigen::VectorXd& q, const PotentialSet& P,
                       const SolveOptions& opts);
/// Central difference of value_u in q.
Eigen::VectorXd grad_u_fd(double t, const Eigen::VectorXd& q, const Parametrization& psi,
                          const PotentialSet& P, const SolveOptions& opts, double delta_q);

/// Representer of the derivative of u in the population variable: central
/// differences over every coordinate of psi (each probe re-solves pack and
/// agent), multiplied by N. Probes run on parallel workers.
TangentField D_u(double t, const Eigen::VectorXd& q, const Parametrization& psi,
                 const PotentialSet& P, const SolveOptions& opts, const FdSteps& fd);

/// |-dv/ds + 1/2 |grad v|^2 + F_hat(q, sigma_s^{(t,psi)})| with dv/ds by
/// central differences at fixed pack and grad v = -y'(s).
double hj_v_residual(double s, const Eigen::VectorXd& q, double t, const Parametrization& psi,
                     const PotentialSet& P, const SolveOptions& opts, double delta_t);

struct MasterResidual {
  double residual = 0.0;
  double dt_u = 0.0;
  double half_grad_sq = 0.0;
  double potential = 0.0;
  double coupling = 0.0;  ///< <grad u(t, psi(.) | psi), D u(t, q | psi)>_M
  /// Error budget delta_t^2 + h^4 + N (delta_psi^2 + tol / delta_psi).
  double budget = 0.0;
};

MasterResidual master_residual(double t, const Eigen::VectorXd& q, const Parametrization& psi,
                               const PotentialSet& P, const SolveOptions& opts,
                               const FdSteps& fd);

struct FlowJacobian {
  Eigen::MatrixXd jacobian;  ///< dS/dq from the variational equation
  double det = 1.0;
  Eigen::MatrixXd fd_jacobian;  ///< central differences in q
  double fd_gap = 0.0;          ///< max abs entry of jacobian - fd_jacobian
};

/// Derivative in q of the characteristic flow S(s, q, tau | t, psi) = y(tau | s, q, t, psi).
FlowJacobian flow_jacobian(double s, const Eigen::VectorXd& q, double tau, double t,
                           const Parametrization& psi, const PotentialSet& P,
                           const SolveOptions& opts, double delta_q);

/// Largest nodewise gap between the agent path started at
/// sigma_s^{(t,psi)}(x_i) mod 1 and pack particle i (shifted by the same
/// integer vector), over all i.
double particle_pack_gap(double s, double t, const Parametrization& psi, const PotentialSet& P,
                         const SolveOptions& opts);

}  // namespace mfg
