#include <doctest.h>

#include <numeric>

#include "mfg/config_space.hpp"
#include "mfg/error.hpp"
#include "mfg/instances.hpp"
#include "support.hpp"

using namespace mfg;

TEST_CASE("M inner product weights each cell by 1/N") {
  TangentField f(Eigen::MatrixXd{{1.0, 2.0, 0.0, -1.0}});
  TangentField g(Eigen::MatrixXd{{3.0, 1.0, 5.0, 1.0}});
  CHECK(inner_M(f, g) == doctest::Approx((3.0 + 2.0 + 0.0 - 1.0) / 4.0));
  CHECK(norm_M(f) == doctest::Approx(std::sqrt(6.0 / 4.0)));
  CHECK_THROWS_AS(inner_M(f, TangentField(1, 3)), Error);
}

TEST_CASE("group action applies the relabeling then the shifts") {
  const Parametrization psi(Eigen::MatrixXd{{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}});
  const GroupElement e({2, 0, 1}, Eigen::MatrixXi{{1, 0, 0}, {0, 0, -1}});
  const Parametrization moved = act(psi, e);
  CHECK(moved.matrix()(0, 0) == doctest::Approx(1.3));
  CHECK(moved.matrix()(1, 0) == doctest::Approx(0.6));
  CHECK(moved.matrix()(0, 1) == doctest::Approx(0.1));
  CHECK(moved.matrix()(1, 2) == doctest::Approx(-0.5));
}

TEST_CASE("composition is the action of the product") {
  InstanceRng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 3;
    const int n = 2 + trial % 6;
    const Parametrization psi = random_parametrization(d, n, rng);
    const GroupElement a = random_group_element(d, n, rng);
    const GroupElement b = random_group_element(d, n, rng);
    const Parametrization two_steps = act(act(psi, b), a);
    const Parametrization one_step = act(psi, compose(a, b));
    CHECK(testing::max_abs(two_steps.matrix() - one_step.matrix()) < 1e-15);
  }
}

TEST_CASE("relabeling preserves the M-norm and inner products") {
  InstanceRng rng(22);
  const int n = 7;
  const GroupElement e = random_group_element(2, n, rng);
  const TangentField f(random_parametrization(2, n, rng).matrix());
  const TangentField g(random_parametrization(2, n, rng).matrix());
  CHECK(inner_M(act(f, e), act(g, e)) == doctest::Approx(inner_M(f, g)).epsilon(1e-14));
}

TEST_CASE("group elements must be bijections with matching shifts") {
  CHECK(is_permutation({2, 0, 1}));
  CHECK_FALSE(is_permutation({0, 0, 1}));
  CHECK_FALSE(is_permutation({0, 3, 1}));
  CHECK_THROWS_AS(GroupElement({0, 0}, Eigen::MatrixXi::Zero(1, 2)), Error);
  CHECK_THROWS_AS(GroupElement({0, 1}, Eigen::MatrixXi::Zero(1, 3)), Error);
  CHECK_THROWS_AS(act(Parametrization(1, 3), GroupElement::identity(1, 2)), Error);
}

TEST_CASE("torus distance") {
  using testing::point;
  CHECK(torus_dist(point({0.0}), point({0.9})) == doctest::Approx(0.1));
  CHECK(torus_dist(point({0.25, 3.0}), point({-0.25, 0.0})) == doctest::Approx(0.5));
  CHECK(torus_dist(point({0.2, 0.7}), point({2.2, -1.3})) == doctest::Approx(0.0).epsilon(1e-15));
  InstanceRng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd x = point({rng.uniform(-3, 3), rng.uniform(-3, 3)});
    const Eigen::VectorXd y = point({rng.uniform(-3, 3), rng.uniform(-3, 3)});
    const Eigen::VectorXd z = point({rng.uniform(-3, 3), rng.uniform(-3, 3)});
    const double dxy = torus_dist(x, y);
    CHECK(dxy <= std::sqrt(2.0) / 2.0 + 1e-15);
    CHECK(dxy == doctest::Approx(torus_dist(y, x)));
    CHECK(torus_dist(x, z) <= dxy + torus_dist(y, z) + 1e-14);
  }
}

TEST_CASE("empirical measure is invariant under the group") {
  InstanceRng rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const Parametrization psi = random_parametrization(2, 6, rng);
    const GroupElement e = random_group_element(2, 6, rng);
    CHECK(testing::max_abs(empirical_measure(psi) - empirical_measure(act(psi, e))) < 1e-15);
  }
  const Parametrization a = testing::cells_1d({0.5, 0.1});
  const Parametrization b = testing::cells_1d({0.5, 0.2});
  CHECK(testing::max_abs(empirical_measure(a) - empirical_measure(b)) > 0.05);
}

TEST_CASE("parametrizations reject non-finite points") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(1, 2);
  m(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Parametrization{m}, Error);
}
