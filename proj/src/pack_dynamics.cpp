#include "mfg/pack_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "mfg/detail/rk4.hpp"
#include "mfg/error.hpp"

namespace mfg {

std::string to_string(ShootingMethod method) {
  return method == ShootingMethod::picard ? "picard" : "newton-fd";
}

ShootingMethod shooting_method_from_string(const std::string& name) {
  if (name == "picard") return ShootingMethod::picard;
  if (name == "newton-fd" || name == "newton_fd") return ShootingMethod::newton_fd;
  throw Error(ErrorKind::config, "unknown shooting method '" + name + "'");
}

PackTrajectory::PackTrajectory(std::vector<double> times, std::vector<Parametrization> positions,
                               std::vector<TangentField> velocities,
                               std::vector<double> cost_to_go)
    : times_(std::move(times)),
      positions_(std::move(positions)),
      velocities_(std::move(velocities)),
      cost_to_go_(std::move(cost_to_go)) {}

void PackTrajectory::position_at(double tau, Eigen::MatrixXd& out) const {
  if (tau < times_.front() - 1e-12 || tau > times_.back() + 1e-12) {
    throw Error(ErrorKind::config, "time " + format_double(tau) + " outside the pack trajectory");
  }
  const auto it = std::lower_bound(times_.begin(), times_.end(), tau);
  if (it != times_.end() && *it == tau) {
    out = positions_[static_cast<std::size_t>(it - times_.begin())].matrix();
    return;
  }
  std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  hi = std::clamp<std::size_t>(hi, 1, times_.size() - 1);
  const std::size_t lo = hi - 1;
  out = detail::hermite(times_[lo], times_[hi], tau, positions_[lo].matrix(),
                        velocities_[lo].matrix(), positions_[hi].matrix(),
                        velocities_[hi].matrix());
}

Parametrization PackTrajectory::position_at(double tau) const {
  Eigen::MatrixXd out;
  position_at(tau, out);
  return Parametrization(std::move(out));
}

double PackTrajectory::energy(std::size_t k, const PotentialSet& P) const {
  return 0.5 * inner_M(velocities_[k], velocities_[k]) + cal_F_hat(positions_[k], P);
}

namespace {

// Running-cost rate L(tau, sigma, sigma_dot) given cal_F_hat(sigma).
using CostRate = std::function<double(double, const Eigen::Ref<const Eigen::MatrixXd>&,
                                      const Eigen::Ref<const Eigen::MatrixXd>&, double)>;

// State layout: positions (d*N, column-major), velocities (d*N), running cost.
template <class Observer>
void run_pack(double s, const Parametrization& anchor, const PotentialSet& P, double h_step,
              const CostRate* cost, Observer&& observe) {
  if (anchor.dim() != P.dim()) throw Error(ErrorKind::shape_mismatch, "pack dimension mismatch");
  const int d = anchor.dim();
  const int n = anchor.size();
  const Eigen::Index nd = static_cast<Eigen::Index>(d) * n;
  Eigen::VectorXd y(2 * nd + 1);
  Eigen::Map<Eigen::MatrixXd>(y.data(), d, n) = anchor.matrix();
  Eigen::Map<Eigen::MatrixXd>(y.data() + nd, d, n) = -D_cal_U0_hat(anchor, P).matrix();
  y[2 * nd] = 0.0;

  Eigen::MatrixXd force(d, n);
  auto rhs = [&](double tau, const Eigen::VectorXd& state, Eigen::VectorXd& dy) {
    const Eigen::Map<const Eigen::MatrixXd> sigma(state.data(), d, n);
    const Eigen::Map<const Eigen::MatrixXd> vel(state.data() + nd, d, n);
    const double cal_f = detail::pair_potential_and_representer(P.phi(), sigma, force);
    dy.head(nd) = state.segment(nd, nd);
    Eigen::Map<Eigen::MatrixXd>(dy.data() + nd, d, n) = -force;
    dy[2 * nd] = cost ? (*cost)(tau, sigma, vel, cal_f)
                      : 0.5 * vel.squaredNorm() / n - cal_f;
  };
  detail::rk4_along(detail::backward_grid(s, h_step), y, rhs, observe);
}

Parametrization positions_of(const Eigen::VectorXd& y, int d, int n) {
  return Parametrization(Eigen::Map<const Eigen::MatrixXd>(y.data(), d, n));
}

TangentField velocities_of(const Eigen::VectorXd& y, int d, int n) {
  return TangentField(
      Eigen::Map<const Eigen::MatrixXd>(y.data() + static_cast<Eigen::Index>(d) * n, d, n));
}

Eigen::MatrixXd flow_end_positions(double s, const Parametrization& anchor,
                                   const PotentialSet& P, double h_step) {
  return sigma_flow(s, anchor, P, h_step).position.matrix();
}

double m_norm(const Eigen::MatrixXd& m) {
  return m.cols() == 0 ? 0.0 : std::sqrt(m.squaredNorm() / m.cols());
}

}  // namespace

PackState sigma_flow(double s, const Parametrization& anchor, const PotentialSet& P,
                     double h_step) {
  Eigen::VectorXd last;
  run_pack(s, anchor, P, h_step, nullptr,
           [&](std::size_t, double, const Eigen::VectorXd& y) { last = y; });
  return {positions_of(last, anchor.dim(), anchor.size()),
          velocities_of(last, anchor.dim(), anchor.size())};
}

PackTrajectory integrate_pack(double s, const Parametrization& anchor, const PotentialSet& P,
                              double h_step) {
  const int d = anchor.dim();
  const int n = anchor.size();
  const Eigen::Index cost_slot = 2 * static_cast<Eigen::Index>(d) * n;
  std::vector<double> times;
  std::vector<Parametrization> positions;
  std::vector<TangentField> velocities;
  std::vector<double> cost;
  run_pack(s, anchor, P, h_step, nullptr, [&](std::size_t, double tau, const Eigen::VectorXd& y) {
    times.push_back(tau);
    positions.push_back(positions_of(y, d, n));
    velocities.push_back(velocities_of(y, d, n));
    // The state accumulates the integral from 0 to tau; store the one from tau to 0.
    cost.push_back(-y[cost_slot]);
  });
  std::reverse(times.begin(), times.end());
  std::reverse(positions.begin(), positions.end());
  std::reverse(velocities.begin(), velocities.end());
  std::reverse(cost.begin(), cost.end());
  return {std::move(times), std::move(positions), std::move(velocities), std::move(cost)};
}

PackSolution solve_pack(double t, const Parametrization& psi, const PotentialSet& P,
                        const SolveOptions& opts) {
  if (t > 0.0 || !std::isfinite(t)) throw Error(ErrorKind::config, "solve_pack needs t <= 0");
  if (!(opts.tol > 0.0) || opts.max_iter < 1) {
    throw Error(ErrorKind::config, "solver needs tol > 0 and max_iter >= 1");
  }
  if (psi.dim() != P.dim()) throw Error(ErrorKind::shape_mismatch, "pack dimension mismatch");

  SolveReport report;
  report.method = opts.method;
  Parametrization anchor = psi;
  const double ratio_floor = 1e-11 * (1.0 + m_norm(psi.matrix()));
  const auto nd = psi.matrix().size();

  try {
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
      const Eigen::MatrixXd end = flow_end_positions(t, anchor, P, opts.h_step);
      const Eigen::MatrixXd residual = end - psi.matrix();
      const double res = m_norm(residual);
      if (!std::isfinite(res)) break;
      if (!report.residual_history.empty()) {
        const double prev = report.residual_history.back();
        if (prev > ratio_floor) {
          report.contraction_estimate = std::max(report.contraction_estimate, res / prev);
        }
      }
      report.residual_history.push_back(res);
      report.iterations = iter;
      report.final_residual = res;
      if (res <= opts.tol) {
        report.converged = true;
        break;
      }
      if (res > 1e6 * (1.0 + report.residual_history.front())) break;  // diverging

      if (opts.method == ShootingMethod::picard) {
        anchor.matrix() -= residual;
      } else {
        // Forward-difference Jacobian of the shooting map.
        const double step = 1e-6 * (1.0 + m_norm(anchor.matrix()));
        Eigen::MatrixXd jac(nd, nd);
        for (Eigen::Index k = 0; k < nd; ++k) {
          Parametrization probe = anchor;
          probe.matrix().data()[k] += step;
          const Eigen::MatrixXd diff = flow_end_positions(t, probe, P, opts.h_step) - end;
          jac.col(k) = Eigen::Map<const Eigen::VectorXd>(diff.data(), nd) / step;
        }
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) {
          throw Error(ErrorKind::linear_solve_failure, "shooting Jacobian is singular");
        }
        const Eigen::VectorXd correction =
            lu.solve(Eigen::Map<const Eigen::VectorXd>(residual.data(), nd));
        if (!correction.allFinite()) {
          throw Error(ErrorKind::linear_solve_failure, "Newton correction is not finite");
        }
        Eigen::Map<Eigen::VectorXd>(anchor.matrix().data(), nd) -= correction;
      }
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::blow_up) throw;
    throw Error(ErrorKind::no_convergence,
                "shooting iterate blew up at t=" + format_double(t) + ": " + e.what());
  }
  if (!report.converged) {
    throw Error(ErrorKind::no_convergence,
                "shooting did not reach tol=" + format_double(opts.tol) + " at t=" +
                    format_double(t) + " after " + std::to_string(report.iterations) +
                    " iterations (last residual " + format_double(report.final_residual) +
                    ", contraction " + format_double(report.contraction_estimate) + ")");
  }
  PackSolution solution;
  solution.t = t;
  solution.psi = psi;
  solution.trajectory = integrate_pack(t, anchor, P, opts.h_step);
  solution.anchor = std::move(anchor);
  solution.report = std::move(report);
  return solution;
}

double value_V(const PackSolution& solution, const PotentialSet& P) {
  return solution.trajectory.cost_to_go(0) + cal_U0_hat(solution.trajectory.terminal(), P);
}

double value_V(double t, const Parametrization& psi, const PotentialSet& P,
               const SolveOptions& opts) {
  return value_V(solve_pack(t, psi, P, opts), P);
}

TangentField grad_V(const PackSolution& solution) {
  TangentField out = solution.trajectory.velocity(0);
  out.matrix() = -out.matrix();
  return out;
}

TangentField grad_V(double t, const Parametrization& psi, const PotentialSet& P,
                    const SolveOptions& opts) {
  return grad_V(solve_pack(t, psi, P, opts));
}

TangentField grad_V_fd(double t, const Parametrization& psi, const PotentialSet& P,
                       const SolveOptions& opts, double delta_psi) {
  const double step = delta_psi * (1.0 + m_norm(psi.matrix()));
  TangentField out(psi.dim(), psi.size());
  for (Eigen::Index k = 0; k < psi.matrix().size(); ++k) {
    Parametrization plus = psi;
    Parametrization minus = psi;
    plus.matrix().data()[k] += step;
    minus.matrix().data()[k] -= step;
    const double diff = value_V(t, plus, P, opts) - value_V(t, minus, P, opts);
    out.matrix().data()[k] = psi.size() * diff / (2.0 * step);
  }
  return out;
}

HjResidual hj_residual(double t, const Parametrization& psi, const PotentialSet& P,
                       const SolveOptions& opts, double delta_t) {
  if (!(delta_t > 0.0)) throw Error(ErrorKind::config, "delta_t must be positive");
  HjResidual out;
  const PackSolution at_t = solve_pack(t, psi, P, opts);
  const TangentField grad = grad_V(at_t);
  out.dt_value = time_derivative(
      [&](double tau) { return tau == t ? value_V(at_t, P) : value_V(tau, psi, P, opts); }, t,
      delta_t);
  out.half_grad_sq = 0.5 * inner_M(grad, grad);
  out.potential = cal_F_hat(psi, P);
  out.residual = std::abs(-out.dt_value + out.half_grad_sq + out.potential);
  out.terminal_gap = std::abs(value_V(0.0, psi, P, opts) - cal_U0_hat(psi, P));
  return out;
}

double flow_property_gap(double t, double s, double tau, const Parametrization& psi,
                         const PotentialSet& P, const SolveOptions& opts) {
  if (s < t || tau < t || tau > 0.0 || s > 0.0) {
    throw Error(ErrorKind::config, "flow property needs t <= s <= 0 and t <= tau <= 0");
  }
  const PackSolution outer = solve_pack(t, psi, P, opts);
  if (s == t) return 0.0;
  const Parametrization lhs = sigma_flow(tau, outer.anchor, P, opts.h_step).position;
  const Parametrization mid = sigma_flow(s, outer.anchor, P, opts.h_step).position;
  const PackSolution inner = solve_pack(s, mid, P, opts);
  const Parametrization rhs = sigma_flow(tau, inner.anchor, P, opts.h_step).position;
  return distance_M(lhs, rhs);
}

double action_of_path(const DiscretePath& path, const PotentialSet& P) {
  if (path.times.size() != path.nodes.size() || path.nodes.empty()) {
    throw Error(ErrorKind::shape_mismatch, "path needs one node per time");
  }
  double total = 0.0;
  double f_prev = cal_F_hat(path.nodes.front(), P);
  for (std::size_t k = 0; k + 1 < path.nodes.size(); ++k) {
    const double dt = path.times[k + 1] - path.times[k];
    if (!(dt > 0.0)) throw Error(ErrorKind::config, "path times must increase");
    const double f_next = cal_F_hat(path.nodes[k + 1], P);
    const double dist = distance_M(path.nodes[k + 1], path.nodes[k]);
    total += dist * dist / (2.0 * dt) - 0.5 * dt * (f_prev + f_next);
    f_prev = f_next;
  }
  return total + cal_U0_hat(path.nodes.back(), P);
}

namespace {

// Representer gradient of action_of_path with respect to nodes 1..m on a
// uniform grid; nodes[0] is fixed.
void action_gradient(const std::vector<Parametrization>& nodes, double dt, const PotentialSet& P,
                     std::vector<Eigen::MatrixXd>& grad) {
  const std::size_t m = nodes.size() - 1;
  grad.resize(m + 1);
  grad[0].setZero(nodes[0].dim(), nodes[0].size());
  for (std::size_t k = 1; k <= m; ++k) {
    const double weight = (k == m) ? 0.5 * dt : dt;
    Eigen::MatrixXd g = (nodes[k].matrix() - nodes[k - 1].matrix()) / dt;
    if (k < m) g += (nodes[k].matrix() - nodes[k + 1].matrix()) / dt;
    g -= weight * D_cal_F_hat(nodes[k], P).matrix();
    if (k == m) g += D_cal_U0_hat(nodes[k], P).matrix();
    grad[k] = std::move(g);
  }
}

// Solves K p = g for the kinetic form K = (1/dt) tridiag(-1, 2, -1) with the
// last diagonal entry 1/dt (free right end), independently per coordinate.
void kinetic_solve(const std::vector<Eigen::MatrixXd>& g, double dt,
                   std::vector<Eigen::MatrixXd>& p) {
  const std::size_t m = g.size() - 1;
  p.assign(m + 1, Eigen::MatrixXd::Zero(g[0].rows(), g[0].cols()));
  std::vector<double> c_prime(m + 1, 0.0);
  std::vector<Eigen::MatrixXd> d_prime(m + 1);
  const double off = -1.0 / dt;
  for (std::size_t k = 1; k <= m; ++k) {
    const double diag = (k == m ? 1.0 : 2.0) / dt;
    const double denom = (k == 1) ? diag : diag - off * c_prime[k - 1];
    c_prime[k] = (k < m) ? off / denom : 0.0;
    d_prime[k] = (k == 1) ? Eigen::MatrixXd(g[k] / denom)
                          : Eigen::MatrixXd((g[k] - off * d_prime[k - 1]) / denom);
  }
  p[m] = d_prime[m];
  for (std::size_t k = m - 1; k >= 1; --k) p[k] = d_prime[k] - c_prime[k] * p[k + 1];
}

}  // namespace

DirectMinimum direct_minimize_action(double t, const Parametrization& psi, const PotentialSet& P,
                                     const DescentOptions& opts) {
  if (!(t < 0.0)) throw Error(ErrorKind::config, "direct minimization needs t < 0");
  if (opts.nodes < 3) throw Error(ErrorKind::config, "direct minimization needs >= 3 nodes");
  const std::size_t m = static_cast<std::size_t>(opts.nodes) - 1;
  const double dt = -t / static_cast<double>(m);

  DiscretePath path;
  const Eigen::MatrixXd slope = -D_cal_U0_hat(psi, P).matrix();
  for (std::size_t k = 0; k <= m; ++k) {
    const double elapsed = static_cast<double>(k) * dt;
    path.times.push_back(k == m ? 0.0 : t + elapsed);
    path.nodes.emplace_back(Eigen::MatrixXd(psi.matrix() + elapsed * slope));
  }

  std::vector<Eigen::MatrixXd> grad, dir;
  double value = action_of_path(path, P);
  const int n = psi.size();
  DirectMinimum out;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    action_gradient(path.nodes, dt, P, grad);
    kinetic_solve(grad, dt, dir);
    double slope_sq = 0.0;  // <g, K^{-1} g>_M summed over nodes
    for (std::size_t k = 1; k <= m; ++k) slope_sq += grad[k].cwiseProduct(dir[k]).sum() / n;
    out.grad_norm = std::sqrt(std::max(0.0, slope_sq));
    out.iterations = iter;
    if (out.grad_norm <= opts.grad_tol) break;

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      DiscretePath trial = path;
      for (std::size_t k = 1; k <= m; ++k) trial.nodes[k].matrix() -= alpha * dir[k];
      const double trial_value = action_of_path(trial, P);
      const double roundoff = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
      if (trial_value <= value - 1e-4 * alpha * slope_sq + roundoff) {
        path = std::move(trial);
        value = trial_value;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No representable decrease left: accept if already near stationarity.
      if (out.grad_norm <= 1e3 * opts.grad_tol) break;
      throw Error(ErrorKind::descent_failure,
                  "line search failed at gradient norm " + format_double(out.grad_norm));
    }
    if (iter + 1 == opts.max_iter) {
      throw Error(ErrorKind::descent_failure,
                  "descent did not reach grad_tol within max_iter (gradient norm " +
                      format_double(out.grad_norm) + ")");
    }
  }
  out.path = std::move(path);
  out.value = value;
  return out;
}

ActionVariation action_variation(const PackSolution& solution, const PotentialSet& P,
                                 const PathPerturbation& eta, double eps, double h_step) {
  const double t = solution.t;
  if (!(t < 0.0)) throw Error(ErrorKind::config, "action variation needs t < 0");
  const Parametrization& anchor = solution.anchor;
  const int d = anchor.dim();
  const int n = anchor.size();
  if (eta.linear.rows() != d || eta.linear.cols() != n || eta.quadratic.rows() != d ||
      eta.quadratic.cols() != n) {
    throw Error(ErrorKind::shape_mismatch, "perturbation shape mismatch");
  }
  const Eigen::Index cost_slot = 2 * static_cast<Eigen::Index>(d) * n;

  auto action = [&](double e) {
    Eigen::MatrixXd shifted(d, n);
    CostRate rate = [&](double tau, const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                        const Eigen::Ref<const Eigen::MatrixXd>& vel, double cal_f) {
      if (e == 0.0) return 0.5 * vel.squaredNorm() / n - cal_f;
      const double w = (tau - t) / (-t);
      const Eigen::MatrixXd eta_dot = (eta.linear + 2.0 * w * eta.quadratic) / (-t);
      shifted = sigma + e * (w * eta.linear + w * w * eta.quadratic);
      return 0.5 * (vel + e * eta_dot).squaredNorm() / n -
             cal_F_hat(Parametrization(shifted), P);
    };
    double accumulated = 0.0;
    run_pack(t, anchor, P, h_step, &rate,
             [&](std::size_t, double, const Eigen::VectorXd& y) { accumulated = y[cost_slot]; });
    const Parametrization terminal(anchor.matrix() + e * (eta.linear + eta.quadratic));
    return -accumulated + cal_U0_hat(terminal, P);
  };

  ActionVariation out;
  out.base = action(0.0);
  out.plus = action(eps);
  out.minus = action(-eps);
  out.derivative = (out.plus - out.minus) / (2.0 * eps);
  return out;
}

}  // namespace mfg
