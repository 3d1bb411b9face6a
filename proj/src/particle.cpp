#include "mfg/particle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mfg/detail/rk4.hpp"
#include "mfg/error.hpp"
#include "mfg/parallel.hpp"

namespace mfg {

namespace {

// Agent dynamics against a frozen pack. State layout: y (d), y' (d),
// running cost (1), and when tracking variations J (d*d), J' (d*d).
class AgentFlow {
 public:
  AgentFlow(const PackTrajectory& pack, const PotentialSet& P, bool variational)
      : pack_(pack), P_(P), d_(P.dim()), variational_(variational) {
    if (pack.terminal().dim() != d_) throw Error(ErrorKind::shape_mismatch, "agent dimension mismatch");
  }

  Eigen::Index state_size() const { return 2 * d_ + 1 + (variational_ ? 2 * d_ * d_ : 0); }
  Eigen::Index cost_slot() const { return 2 * d_; }

  Eigen::VectorXd initial(const Eigen::VectorXd& terminal) const {
    const Parametrization& sigma0 = pack_.terminal();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(state_size());
    y.head(d_) = terminal;
    y.segment(d_, d_) = -grad_u0_hat(terminal, sigma0, P_);
    if (variational_) {
      Eigen::Map<Eigen::MatrixXd>(y.data() + 2 * d_ + 1, d_, d_).setIdentity();
      Eigen::Map<Eigen::MatrixXd>(y.data() + 2 * d_ + 1 + d_ * d_, d_, d_) =
          -hess_u0_hat(terminal, sigma0, P_);
    }
    return y;
  }

  void rhs(double tau, const Eigen::VectorXd& state, Eigen::VectorXd& dy) {
    if (tau != cached_tau_ || sigma_.size() == 0) {
      pack_.position_at(tau, sigma_);
      cached_tau_ = tau;
    }
    Eigen::VectorXd force = Eigen::VectorXd::Zero(d_);
    const double potential = detail::convolve_at(P_.phi(), state.data(), sigma_, force.data());
    dy.head(d_) = state.segment(d_, d_);
    dy.segment(d_, d_) = -force;
    dy[2 * d_] = 0.5 * state.segment(d_, d_).squaredNorm() - potential;
    if (variational_) {
      const Eigen::Index j0 = 2 * d_ + 1;
      const Eigen::Index jd0 = j0 + d_ * d_;
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(d_, d_);
      Eigen::VectorXd diff(d_);
      const auto n = sigma_.cols();
      for (Eigen::Index j = 0; j < n; ++j) {
        diff = state.head(d_) - sigma_.col(j);
        P_.phi().add_hess(diff.data(), 1.0 / static_cast<double>(n), hess.data());
      }
      const Eigen::Map<const Eigen::MatrixXd> jac(state.data() + j0, d_, d_);
      Eigen::Map<Eigen::MatrixXd>(dy.data() + j0, d_, d_) =
          Eigen::Map<const Eigen::MatrixXd>(state.data() + jd0, d_, d_);
      Eigen::Map<Eigen::MatrixXd>(dy.data() + jd0, d_, d_) = -hess * jac;
    }
  }

  template <class Observer>
  void run(double s, const Eigen::VectorXd& terminal, double h_step, Observer&& observe) {
    if (s < pack_.start_time() - 1e-12) {
      throw Error(ErrorKind::config, "agent start time precedes the pack trajectory");
    }
    Eigen::VectorXd y = initial(terminal);
    detail::rk4_along(
        detail::backward_grid(s, h_step), y,
        [this](double tau, const Eigen::VectorXd& st, Eigen::VectorXd& dy) { rhs(tau, st, dy); },
        observe);
  }

  Eigen::VectorXd end_state(double s, const Eigen::VectorXd& terminal, double h_step) {
    Eigen::VectorXd last;
    run(s, terminal, h_step, [&](std::size_t, double, const Eigen::VectorXd& y) { last = y; });
    return last;
  }

  int dim() const { return d_; }

 private:
  const PackTrajectory& pack_;
  const PotentialSet& P_;
  int d_;
  bool variational_;
  Eigen::MatrixXd sigma_;
  double cached_tau_ = 1.0;
};

Eigen::VectorXd shoot_terminal(AgentFlow& flow, double s, const Eigen::VectorXd& q,
                               const SolveOptions& opts, SolveReport& report) {
  const int d = flow.dim();
  report = SolveReport{};
  report.method = opts.method;
  Eigen::VectorXd terminal = q;
  const double ratio_floor = 1e-11 * (1.0 + q.norm());
  try {
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
      const Eigen::VectorXd end = flow.end_state(s, terminal, opts.h_step).head(d);
      const Eigen::VectorXd residual = end - q;
      const double res = residual.norm();
      if (!std::isfinite(res)) break;
      if (!report.residual_history.empty() && report.residual_history.back() > ratio_floor) {
        report.contraction_estimate =
            std::max(report.contraction_estimate, res / report.residual_history.back());
      }
      report.residual_history.push_back(res);
      report.iterations = iter;
      report.final_residual = res;
      if (res <= opts.tol) {
        report.converged = true;
        break;
      }
      if (res > 1e6 * (1.0 + report.residual_history.front())) break;
      if (opts.method == ShootingMethod::picard) {
        terminal -= residual;
      } else {
        const double step = 1e-6 * (1.0 + terminal.norm());
        Eigen::MatrixXd jac(d, d);
        for (int k = 0; k < d; ++k) {
          Eigen::VectorXd probe = terminal;
          probe[k] += step;
          jac.col(k) = (flow.end_state(s, probe, opts.h_step).head(d) - end) / step;
        }
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) {
          throw Error(ErrorKind::linear_solve_failure, "agent shooting Jacobian is singular");
        }
        terminal -= lu.solve(residual);
      }
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::blow_up) throw;
    throw Error(ErrorKind::no_convergence, std::string("agent shooting blew up: ") + e.what());
  }
  if (!report.converged) {
    throw Error(ErrorKind::no_convergence,
                "agent shooting did not reach tol at s=" + format_double(s) + " (residual " +
                    format_double(report.final_residual) + ")");
  }
  return terminal;
}

double m_norm(const Eigen::MatrixXd& m) {
  return m.cols() == 0 ? 0.0 : std::sqrt(m.squaredNorm() / m.cols());
}

}  // namespace

PackTrajectory pack_covering(const PackSolution& pack, double earliest, const PotentialSet& P,
                             double h_step) {
  if (earliest >= pack.t) return pack.trajectory;
  return integrate_pack(earliest, pack.anchor, P, h_step);
}

ParticlePath solve_particle(double s, const Eigen::VectorXd& q, const PackTrajectory& pack,
                            const PotentialSet& P, const SolveOptions& opts) {
  if (s > 0.0) throw Error(ErrorKind::config, "agent start time must be <= 0");
  if (q.size() != P.dim()) throw Error(ErrorKind::shape_mismatch, "agent position dimension mismatch");
  AgentFlow flow(pack, P, false);
  ParticlePath path;
  path.s = s;
  path.q = q;
  path.terminal = shoot_terminal(flow, s, q, opts, path.report);

  const int d = P.dim();
  std::vector<Eigen::VectorXd> states;
  flow.run(s, path.terminal, opts.h_step, [&](std::size_t, double tau, const Eigen::VectorXd& y) {
    path.times.push_back(tau);
    states.push_back(y);
  });
  std::reverse(path.times.begin(), path.times.end());
  std::reverse(states.begin(), states.end());
  const auto m = static_cast<Eigen::Index>(states.size());
  path.y.resize(d, m);
  path.ydot.resize(d, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    path.y.col(k) = states[k].head(d);
    path.ydot.col(k) = states[k].segment(d, d);
    path.cost_to_go.push_back(-states[k][2 * d]);
  }
  // The shooting condition holds to tol; pin the left end to q exactly.
  path.y.col(0) = q;
  return path;
}

ParticlePath solve_particle(double s, const Eigen::VectorXd& q, double t,
                            const Parametrization& psi, const PotentialSet& P,
                            const SolveOptions& opts) {
  const PackSolution pack = solve_pack(t, psi, P, opts);
  return solve_particle(s, q, pack_covering(pack, s, P, opts.h_step), P, opts);
}

double value_v(const ParticlePath& path, const PackTrajectory& pack, const PotentialSet& P) {
  return path.cost_to_go.front() + u0_hat(path.terminal, pack.terminal(), P);
}

double value_v(double s, const Eigen::VectorXd& q, double t, const Parametrization& psi,
               const PotentialSet& P, const SolveOptions& opts) {
  const PackSolution pack = solve_pack(t, psi, P, opts);
  const PackTrajectory covering = pack_covering(pack, s, P, opts.h_step);
  return value_v(solve_particle(s, q, covering, P, opts), covering, P);
}

double value_u(double t, const Eigen::VectorXd& q, const Parametrization& psi,
               const PotentialSet& P, const SolveOptions& opts) {
  return value_v(t, q, t, psi, P, opts);
}

Eigen::VectorXd grad_u(const PackSolution& pack, const Eigen::VectorXd& q, const PotentialSet& P,
                       const SolveOptions& opts) {
  const ParticlePath path = solve_particle(pack.t, q, pack.trajectory, P, opts);
  return -path.ydot.col(0);
}

Eigen::VectorXd grad_u(double t, const Eigen::VectorXd& q, const Parametrization& psi,
                       const PotentialSet& P, const SolveOptions& opts) {
  return grad_u(solve_pack(t, psi, P, opts), q, P, opts);
}

Eigen::VectorXd grad_u_fd(double t, const Eigen::VectorXd& q, const Parametrization& psi,
                          const PotentialSet& P, const SolveOptions& opts, double delta_q) {
  const PackSolution pack = solve_pack(t, psi, P, opts);
  Eigen::VectorXd out(q.size());
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    Eigen::VectorXd plus = q;
    Eigen::VectorXd minus = q;
    plus[k] += delta_q;
    minus[k] -= delta_q;
    const double vp = value_v(solve_particle(t, plus, pack.trajectory, P, opts), pack.trajectory, P);
    const double vm = value_v(solve_particle(t, minus, pack.trajectory, P, opts), pack.trajectory, P);
    out[k] = (vp - vm) / (2.0 * delta_q);
  }
  return out;
}

TangentField D_u(double t, const Eigen::VectorXd& q, const Parametrization& psi,
                 const PotentialSet& P, const SolveOptions& opts, const FdSteps& fd) {
  const double step = fd.delta_psi * (1.0 + m_norm(psi.matrix()));
  const auto coords = static_cast<std::size_t>(psi.matrix().size());
  // Probe 2k perturbs coordinate k upward, probe 2k+1 downward.
  const std::vector<double> values = parallel_map<double>(2 * coords, [&](std::size_t probe) {
    Parametrization moved = psi;
    moved.matrix().data()[probe / 2] += (probe % 2 == 0) ? step : -step;
    return value_u(t, q, moved, P, opts);
  });
  TangentField out(psi.dim(), psi.size());
  for (std::size_t k = 0; k < coords; ++k) {
    out.matrix().data()[k] = psi.size() * (values[2 * k] - values[2 * k + 1]) / (2.0 * step);
  }
  return out;
}

double hj_v_residual(double s, const Eigen::VectorXd& q, double t, const Parametrization& psi,
                     const PotentialSet& P, const SolveOptions& opts, double delta_t) {
  if (!(delta_t > 0.0)) throw Error(ErrorKind::config, "delta_t must be positive");
  const PackSolution pack = solve_pack(t, psi, P, opts);
  const PackTrajectory covering = pack_covering(pack, s - 2.0 * delta_t, P, opts.h_step);
  auto v_at = [&](double tau) {
    return value_v(solve_particle(tau, q, covering, P, opts), covering, P);
  };
  const double dv_ds = time_derivative(v_at, s, delta_t);
  const ParticlePath path = solve_particle(s, q, covering, P, opts);
  const Eigen::VectorXd grad = -path.ydot.col(0);
  const Parametrization sigma_s = sigma_flow(s, pack.anchor, P, opts.h_step).position;
  return std::abs(-dv_ds + 0.5 * grad.squaredNorm() + F_hat(q, sigma_s, P));
}

MasterResidual master_residual(double t, const Eigen::VectorXd& q, const Parametrization& psi,
                               const PotentialSet& P, const SolveOptions& opts,
                               const FdSteps& fd) {
  MasterResidual out;
  const PackSolution pack = solve_pack(t, psi, P, opts);
  out.dt_u = time_derivative(
      [&](double tau) {
        if (tau == t) {
          return value_v(solve_particle(t, q, pack.trajectory, P, opts), pack.trajectory, P);
        }
        return value_u(tau, q, psi, P, opts);
      },
      t, fd.delta_t);
  const Eigen::VectorXd grad = grad_u(pack, q, P, opts);
  out.half_grad_sq = 0.5 * grad.squaredNorm();
  out.potential = F_hat(q, psi, P);

  const TangentField du = D_u(t, q, psi, P, opts, fd);
  const int n = psi.size();
  const std::vector<Eigen::VectorXd> field = parallel_map<Eigen::VectorXd>(
      static_cast<std::size_t>(n), [&](std::size_t i) {
        return grad_u(pack, psi.point(static_cast<int>(i)), P, opts);
      });
  double coupling = 0.0;
  for (int i = 0; i < n; ++i) coupling += field[i].dot(du.vector(i));
  out.coupling = n > 0 ? coupling / n : 0.0;

  out.residual = std::abs(-out.dt_u + out.half_grad_sq + out.potential + out.coupling);
  const double h = opts.h_step;
  out.budget = fd.delta_t * fd.delta_t + h * h * h * h +
               n * (fd.delta_psi * fd.delta_psi + opts.tol / fd.delta_psi);
  return out;
}

FlowJacobian flow_jacobian(double s, const Eigen::VectorXd& q, double tau, double t,
                           const Parametrization& psi, const PotentialSet& P,
                           const SolveOptions& opts, double delta_q) {
  if (tau > 0.0) throw Error(ErrorKind::config, "flow time must be <= 0");
  const PackSolution pack = solve_pack(t, psi, P, opts);
  const PackTrajectory covering = pack_covering(pack, std::min(s, tau), P, opts.h_step);
  const int d = P.dim();

  auto flow_to = [&](double s0, const Eigen::VectorXd& q0, double tau0) -> Eigen::VectorXd {
    const ParticlePath path = solve_particle(s0, q0, covering, P, opts);
    if (tau0 == s0) return q0;
    AgentFlow plain(covering, P, false);
    return plain.end_state(tau0, path.terminal, opts.h_step).head(d);
  };

  FlowJacobian out;
  if (tau == s) {
    out.jacobian = Eigen::MatrixXd::Identity(d, d);
  } else {
    const ParticlePath path = solve_particle(s, q, covering, P, opts);
    AgentFlow varied(covering, P, true);
    auto jacobian_at = [&](double when) {
      const Eigen::VectorXd end = varied.end_state(when, path.terminal, opts.h_step);
      return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(end.data() + 2 * d + 1, d, d));
    };
    const Eigen::MatrixXd at_s = jacobian_at(s);
    const Eigen::MatrixXd at_tau = jacobian_at(tau);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(at_s);
    if (!lu.isInvertible()) throw Error(ErrorKind::linear_solve_failure, "variational matrix is singular");
    out.jacobian = at_tau * lu.inverse();
  }
  out.det = out.jacobian.determinant();

  out.fd_jacobian.resize(d, d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd plus = q;
    Eigen::VectorXd minus = q;
    plus[k] += delta_q;
    minus[k] -= delta_q;
    out.fd_jacobian.col(k) = (flow_to(s, plus, tau) - flow_to(s, minus, tau)) / (2.0 * delta_q);
  }
  out.fd_gap = (out.jacobian - out.fd_jacobian).cwiseAbs().maxCoeff();
  return out;
}

double particle_pack_gap(double s, double t, const Parametrization& psi, const PotentialSet& P,
                         const SolveOptions& opts) {
  const PackSolution pack = solve_pack(t, psi, P, opts);
  const PackTrajectory covering = pack_covering(pack, s, P, opts.h_step);
  const Parametrization sigma_s = covering.position_at(s);
  double worst = 0.0;
  Eigen::MatrixXd sigma_tau;
  for (int i = 0; i < psi.size(); ++i) {
    const Eigen::VectorXd lifted = sigma_s.point(i);
    const Eigen::VectorXd shift = lifted.array().floor().matrix();
    const ParticlePath path = solve_particle(s, lifted - shift, covering, P, opts);
    for (std::size_t k = 0; k < path.times.size(); ++k) {
      covering.position_at(path.times[k], sigma_tau);
      const Eigen::VectorXd pack_i = sigma_tau.col(i) - shift;
      worst = std::max(worst, (path.y.col(static_cast<Eigen::Index>(k)) - pack_i).norm());
    }
  }
  return worst;
}

}  // namespace mfg
