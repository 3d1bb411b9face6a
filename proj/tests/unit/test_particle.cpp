#include <doctest.h>

#include "mfg/config_space.hpp"
#include "mfg/error.hpp"
#include "mfg/instances.hpp"
#include "mfg/particle.hpp"
#include "support.hpp"

using namespace mfg;
using testing::point;

namespace {

struct Instance {
  PotentialSet P;
  Parametrization psi;
};

Instance generic(std::uint64_t seed, int d, int n) {
  InstanceRng rng(seed);
  PotentialSet P = random_potentials(d, rng);
  return {P, random_parametrization(d, n, rng)};
}

}  // namespace

TEST_CASE("free agents") {
  const PotentialSet P = PotentialSet::zero(1);
  const Parametrization psi = testing::cells_1d({0.1, 0.5});
  const SolveOptions opts;
  CHECK(value_u(-0.2, point({0.3}), psi, P, opts) == 0.0);
  CHECK(testing::max_abs(grad_u(-0.2, point({0.3}), psi, P, opts)) == 0.0);
  const ParticlePath path = solve_particle(-0.2, point({0.3}), -0.2, psi, P, opts);
  CHECK(testing::max_abs(path.y.array() - 0.3) == 0.0);
}

TEST_CASE("decoupled agent value in closed form") {
  const double A = 0.08;
  const PotentialSet P = testing::single_cosine(A);
  const Parametrization psi = testing::cells_1d({0.1, 0.7, 0.4});
  const SolveOptions opts;
  const double t = -0.15;
  const double q = 0.62;
  // agent solves y - t U0'(y) = q, independent of the pack
  const ParticlePath path = solve_particle(t, point({q}), t, psi, P, opts);
  const double y = path.terminal[0];
  const double slope = -A * testing::two_pi * std::sin(testing::two_pi * y);
  CHECK(std::abs(y - t * slope - q) <= 1e-12);
  const double expected = -t / 2.0 * slope * slope + A * std::cos(testing::two_pi * y);
  CHECK(std::abs(value_u(t, point({q}), psi, P, opts) - expected) <= 1e-10);
  CHECK(std::abs(grad_u(t, point({q}), psi, P, opts)[0] - slope) <= 1e-12);
  // the population does not enter
  CHECK(testing::max_abs(D_u(t, point({q}), psi, P, opts, FdSteps{}).matrix()) <= 1e-8);
}

TEST_CASE("agent gradient agrees with central differences") {
  for (int d : {1, 2}) {
    const Instance inst = generic(101 + d, d, 6);
    const SolveOptions opts;
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(d, 0.37);
    const Eigen::VectorXd g = grad_u(-0.05, q, inst.psi, inst.P, opts);
    const Eigen::VectorXd fd = grad_u_fd(-0.05, q, inst.psi, inst.P, opts, 1e-5);
    CHECK(testing::max_abs(g - fd) <= 1e-8);
  }
}

TEST_CASE("agent value at the pack cells") {
  // u(t, psi_i | psi) relates to the pack value through the representer
  const Instance inst = generic(104, 1, 6);
  const SolveOptions opts;
  const PackSolution pack = solve_pack(-0.05, inst.psi, inst.P, opts);
  for (int i = 0; i < inst.psi.size(); ++i) {
    const Eigen::VectorXd g = grad_u(pack, inst.psi.point(i), inst.P, opts);
    CHECK(testing::max_abs(g - grad_V(pack).vector(i)) <= 1e-10);
  }
}

TEST_CASE("agents started on pack particles follow them") {
  for (int d : {1, 2}) {
    const Instance inst = generic(105 + d, d, 6);
    const SolveOptions opts;
    CHECK(particle_pack_gap(-0.05, -0.05, inst.psi, inst.P, opts) <= 10 * opts.tol);
    CHECK(particle_pack_gap(-0.02, -0.05, inst.psi, inst.P, opts) <= 10 * opts.tol);
  }
}

TEST_CASE("agent Hamilton-Jacobi residual") {
  const Instance inst = generic(108, 1, 8);
  const SolveOptions opts;
  for (double s : {-0.08, -0.05, -0.02}) {
    CHECK(hj_v_residual(s, point({0.44}), -0.05, inst.psi, inst.P, opts, 1e-4) <= 1e-6);
  }
}

TEST_CASE("flow Jacobian") {
  const Instance inst = generic(109, 2, 6);
  const SolveOptions opts;
  const Eigen::VectorXd q = point({0.2, 0.7});
  const FlowJacobian same = flow_jacobian(-0.05, q, -0.05, -0.05, inst.psi, inst.P, opts, 1e-5);
  CHECK(testing::max_abs(same.jacobian - Eigen::MatrixXd::Identity(2, 2)) == 0.0);
  CHECK(same.det == 1.0);
  for (double tau : {-0.08, -0.03, 0.0}) {
    const FlowJacobian J = flow_jacobian(-0.06, q, tau, -0.05, inst.psi, inst.P, opts, 1e-5);
    CHECK(J.fd_gap <= 1e-5);
    CHECK(J.det > 0.5);
    CHECK(J.det < 2.0);
  }
}

TEST_CASE("agent functions are invariant under relabeling the population") {
  const Instance inst = generic(110, 1, 6);
  InstanceRng rng(111);
  const GroupElement e = random_group_element(1, 6, rng);
  const SolveOptions opts;
  const Eigen::VectorXd q = point({0.3});
  CHECK(std::abs(value_u(-0.05, q, act(inst.psi, e), inst.P, opts) - value_u(-0.05, q, inst.psi, inst.P, opts)) <=
        1e-10);
  const TangentField du = D_u(-0.05, q, inst.psi, inst.P, opts, FdSteps{});
  const TangentField du_moved = D_u(-0.05, q, act(inst.psi, e), inst.P, opts, FdSteps{});
  CHECK(testing::max_abs(act(du, e).matrix() - du_moved.matrix()) <= 1e-8);
}

TEST_CASE("master equation residual") {
  const Instance inst = generic(112, 1, 8);
  const MasterResidual r = master_residual(-0.05, point({0.25}), inst.psi, inst.P, SolveOptions{}, FdSteps{});
  CHECK(r.residual <= 1e-3);
  CHECK(r.residual <= r.budget);
  CHECK(r.budget > 0.0);
  CHECK(r.potential == doctest::Approx(F_hat(point({0.25}), inst.psi, inst.P)));
}

TEST_CASE("agent start must not precede the pack trajectory") {
  const Instance inst = generic(113, 1, 4);
  const PackSolution pack = solve_pack(-0.05, inst.psi, inst.P, SolveOptions{});
  CHECK_THROWS_AS(solve_particle(-0.1, point({0.2}), pack.trajectory, inst.P, SolveOptions{}), Error);
  const PackTrajectory longer = pack_covering(pack, -0.1, inst.P, 1e-3);
  CHECK(longer.start_time() == -0.1);
  CHECK(distance_M(longer.position_at(-0.05), inst.psi) <= 1e-12);
}
