#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "mfg/config_space.hpp"
#include "mfg/error.hpp"
#include "mfg/instances.hpp"
#include "mfg/transport.hpp"
#include "support.hpp"

using namespace mfg;

namespace {

double torus_sq(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double sq = 0.0;
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    double diff = x[c] - y[c];
    diff -= std::round(diff);
    sq += diff * diff;
  }
  return sq;
}

// Minimum over all N! relabelings of (1/N) sum_i |mu_pi(i) - nu_i|^2 on the torus.
double brute_force_w2(const Parametrization& mu, const Parametrization& nu) {
  std::vector<int> perm(mu.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < mu.size(); ++i) total += torus_sq(mu.point(perm[i]), nu.point(i));
    best = std::min(best, total / mu.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// #{x : psi1(h(x)) in cubes_a[r] and psi2(x) in cubes_b[c]}.
Eigen::MatrixXi count_pairs(const Parametrization& psi1, const Parametrization& psi2,
                            const std::vector<int>& h, const Coupling& g, const CubeGrid& grid) {
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(g.mass.rows(), g.mass.cols());
  for (int x = 0; x < psi2.size(); ++x) {
    const int qa = grid.cube_of(psi1.point(h[x]));
    const int qb = grid.cube_of(psi2.point(x));
    const auto r = std::find(g.cubes_a.begin(), g.cubes_a.end(), qa) - g.cubes_a.begin();
    const auto c = std::find(g.cubes_b.begin(), g.cubes_b.end(), qb) - g.cubes_b.begin();
    if (r < counts.rows() && c < counts.cols()) ++counts(r, c);
  }
  return counts;
}

}  // namespace

TEST_CASE("assignment equals the factorial brute force") {
  InstanceRng rng(51);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 7;
    const int d = 1 + trial % 2;
    const Parametrization mu = random_parametrization(d, n, rng);
    const Parametrization nu = random_parametrization(d, n, rng);
    const auto result = wasserstein2(mu, nu);
    CHECK(result.squared == brute_force_w2(mu, nu));
    CHECK(is_permutation(result.perm.perm()));
    double realized = 0.0;
    for (int i = 0; i < n; ++i) realized += torus_sq(mu.point(result.perm.perm()[i]), nu.point(i));
    CHECK(realized / n == doctest::Approx(result.squared).epsilon(1e-15));
  }
}

TEST_CASE("two-point instance picks the swap") {
  const auto r = wasserstein2(testing::cells_1d({0.0, 0.3}), testing::cells_1d({0.1, 0.9}));
  CHECK(r.squared == doctest::Approx(0.025).epsilon(1e-14));
  CHECK(r.perm.perm() == std::vector<int>{1, 0});
  const auto lifted = wasserstein2(testing::cells_1d({0.0, 0.3}), testing::cells_1d({0.1, 0.9}),
                                   GroundMetric::euclidean);
  CHECK(lifted.squared == doctest::Approx((0.01 + 0.36) / 2.0));
}

TEST_CASE("identical inputs cost nothing") {
  InstanceRng rng(52);
  const Parametrization mu = random_parametrization(2, 9, rng);
  const auto r = wasserstein2(mu, mu);
  CHECK(r.squared == 0.0);
  std::vector<int> id(9);
  std::iota(id.begin(), id.end(), 0);
  CHECK(r.perm.perm() == id);
}

TEST_CASE("transport cost is invariant under the group on either side") {
  InstanceRng rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const Parametrization mu = random_parametrization(2, 8, rng);
    const Parametrization nu = random_parametrization(2, 8, rng);
    const GroupElement e = random_group_element(2, 8, rng);
    const double base = wasserstein2(mu, nu).squared;
    CHECK(std::abs(wasserstein2(act(mu, e), nu).squared - base) <= 1e-12);
    CHECK(std::abs(wasserstein2(mu, act(nu, e)).squared - base) <= 1e-12);
  }
}

TEST_CASE("square root of the cost satisfies the triangle inequality") {
  InstanceRng rng(54);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 2;
    const Parametrization a = random_parametrization(d, 6, rng);
    const Parametrization b = random_parametrization(d, 6, rng);
    const Parametrization c = random_parametrization(d, 6, rng);
    const double ab = std::sqrt(wasserstein2(a, b).squared);
    const double bc = std::sqrt(wasserstein2(b, c).squared);
    const double ac = std::sqrt(wasserstein2(a, c).squared);
    CHECK(ac <= ab + bc + 1e-10);
  }
}

TEST_CASE("zero cost exactly when the empirical measures agree") {
  InstanceRng rng(55);
  const Parametrization mu = random_parametrization(2, 6, rng);
  const Parametrization same = act(mu, random_group_element(2, 6, rng));
  CHECK(testing::max_abs(empirical_measure(mu) - empirical_measure(same)) < 1e-15);
  CHECK(wasserstein2(mu, same).squared < 1e-28);
  Parametrization other = mu;
  other.matrix()(0, 3) += 0.01;
  CHECK(wasserstein2(mu, other).squared > 1e-6);
}

TEST_CASE("assignment on a hand-made matrix") {
  const Eigen::MatrixXd cost{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  const auto match = solve_assignment(cost);
  double total = 0.0;
  for (int c = 0; c < 3; ++c) total += cost(match[c], c);
  CHECK(total == 5.0);
  CHECK_THROWS_AS(solve_assignment(Eigen::MatrixXd::Zero(2, 3)), Error);
}

TEST_CASE("cube grid indexing") {
  const CubeGrid grid = CubeGrid::unit(2, 2);
  CHECK(grid.cube_count() == 16);
  CHECK(grid.cube_diameter() == doctest::Approx(std::sqrt(2.0) / 4.0));
  CHECK(grid.cube_of(testing::point({0.0, 0.0})) == 0);
  CHECK(grid.cube_of(testing::point({0.0, 0.3})) == 1);
  CHECK(grid.cube_of(testing::point({0.3, 0.0})) == 4);
  CHECK(grid.cube_of(testing::point({0.99, 0.99})) == 15);
  CHECK(grid.cube_of(testing::point({1.5, -0.2})) == 12);
  InstanceRng rng(56);
  const auto hist = grid.histogram(random_parametrization(2, 50, rng));
  CHECK(std::accumulate(hist.begin(), hist.end(), 0) == 50);
}

TEST_CASE("diagonal coupling of equal histograms") {
  InstanceRng rng(57);
  const Parametrization psi = random_parametrization(1, 8, rng);
  const CubeGrid grid = CubeGrid::unit(1, 1);
  const auto hist = grid.histogram(psi);
  Coupling g{{0, 1}, {0, 1}, Eigen::MatrixXd::Zero(2, 2)};
  g.mass(0, 0) = hist[0] / 8.0;
  g.mass(1, 1) = hist[1] / 8.0;
  const GroupElement h = rearrange(psi, psi, g, grid);
  CHECK(is_permutation(h.perm()));
  CHECK(count_pairs(psi, psi, h.perm(), g, grid) == coupling_counts(g, 8));
  CHECK(realized_counts(psi, psi, h, g, grid) == coupling_counts(g, 8));
}

TEST_CASE("uniform coupling on two cubes, checked against all relabelings") {
  const Parametrization psi1 = testing::cells_1d({0.1, 0.6, 0.2, 0.9});
  const Parametrization psi2 = testing::cells_1d({0.7, 0.3, 0.8, 0.4});
  const CubeGrid grid = CubeGrid::unit(1, 1);
  const Coupling g{{0, 1}, {0, 1}, Eigen::MatrixXd::Constant(2, 2, 0.25)};
  const Eigen::MatrixXi target = Eigen::MatrixXi::Ones(2, 2);

  std::vector<int> perm{0, 1, 2, 3};
  int feasible = 0;
  do {
    feasible += count_pairs(psi1, psi2, perm, g, grid) == target;
  } while (std::next_permutation(perm.begin(), perm.end()));
  // each of the two cells of psi2 in a cube must draw one cell from each cube of psi1
  CHECK(feasible == 16);

  const GroupElement h = rearrange(psi1, psi2, g, grid);
  CHECK(count_pairs(psi1, psi2, h.perm(), g, grid) == target);
}

TEST_CASE("random dyadic couplings are realized exactly") {
  InstanceRng rng(58);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 2;
    const int n = 32;
    const Parametrization psi1 = random_parametrization(d, n, rng);
    const Parametrization psi2 = random_parametrization(d, n, rng);
    const CubeGrid grid = CubeGrid::unit(d, 1 + trial % 2);
    // a random cell matching induces an integral cube coupling
    std::vector<int> match(n);
    std::iota(match.begin(), match.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(match[i], match[rng.below(i + 1)]);
    CellCoupling cells;
    for (int i = 0; i < n; ++i) {
      cells.a.push_back(match[i]);
      cells.b.push_back(i);
      cells.mass.push_back(1.0 / n);
    }
    const Coupling g = project_coupling(psi1, psi2, cells, grid);
    const GroupElement h = rearrange(psi1, psi2, g, grid);
    CHECK(is_permutation(h.perm()));
    CHECK(count_pairs(psi1, psi2, h.perm(), g, grid) == coupling_counts(g, n));
  }
}

TEST_CASE("infeasible couplings are rejected") {
  const Parametrization psi = testing::cells_1d({0.1, 0.6, 0.2, 0.9});
  const CubeGrid grid = CubeGrid::unit(1, 1);
  auto kind_of = [&](const Coupling& g) {
    try {
      rearrange(psi, psi, g, grid);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  Coupling wrong_marginal{{0, 1}, {0, 1}, Eigen::MatrixXd{{0.75, 0.0}, {0.0, 0.25}}};
  CHECK(kind_of(wrong_marginal) == ErrorKind::marginal_mismatch);
  Coupling fractional{{0, 1}, {0, 1}, Eigen::MatrixXd{{0.3, 0.2}, {0.2, 0.3}}};
  CHECK(kind_of(fractional) == ErrorKind::non_integral_mass);
  Coupling negative{{0, 1}, {0, 1}, Eigen::MatrixXd{{0.75, -0.25}, {-0.25, 0.75}}};
  CHECK(kind_of(negative) != ErrorKind::io);
}

TEST_CASE("rounding keeps the margins") {
  InstanceRng rng(59);
  for (int trial = 0; trial < 30; ++trial) {
    const int rows = 2 + trial % 4, cols = 2 + trial % 3;
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform();
    const int n = 40;
    const Eigen::MatrixXd target = n * w / w.sum();
    std::vector<int> row_sums(rows), col_sums(cols);
    // margins of an integer matrix near the target
    Eigen::MatrixXi base = target.array().round().cast<int>();
    for (int r = 0; r < rows; ++r) row_sums[r] = base.row(r).sum();
    for (int c = 0; c < cols; ++c) col_sums[c] = base.col(c).sum();
    const Eigen::MatrixXi counts = round_counts(target, row_sums, col_sums);
    CHECK(counts.minCoeff() >= 0);
    for (int r = 0; r < rows; ++r) CHECK(counts.row(r).sum() == row_sums[r]);
    for (int c = 0; c < cols; ++c) CHECK(counts.col(c).sum() == col_sums[c]);
  }
}

TEST_CASE("coupling integral check") {
  const int n = 256;
  InstanceRng rng(60);
  Eigen::MatrixXd a(1, n), b(1, n);
  std::vector<int> label(n);
  std::iota(label.begin(), label.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(label[i], label[rng.below(i + 1)]);
  CellCoupling cells;
  for (int i = 0; i < n; ++i) {
    a(0, i) = rng.uniform();
    b(0, label[i]) = a(0, i) + 0.2 * rng.uniform(-1, 1);
    cells.a.push_back(i);
    cells.b.push_back(label[i]);
    cells.mass.push_back(1.0 / n);
  }
  const Parametrization psi1(a), psi2(b);
  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(1, -0.5);
  const std::vector<int> levels{1, 2, 3, 4, 5};

  SUBCASE("constant function has no gap") {
    const auto rows = coupling_integral_check(
        psi1, psi2, cells, [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 1.0; }, levels, lower, 2.0);
    for (const auto& r : rows) CHECK(r.gap < 1e-14);
  }
  SUBCASE("squared displacement stays within the cube-diameter bound") {
    double avg_v = 0.0;
    for (int i = 0; i < n; ++i) avg_v += std::abs(b(0, label[i]) - a(0, i)) / n;
    const auto rows = coupling_integral_check(
        psi1, psi2, cells, [](const Eigen::VectorXd&, const Eigen::VectorXd& v) { return v.squaredNorm(); },
        levels, lower, 2.0);
    for (const auto& r : rows) {
      const double diam = r.cube_diameter;
      CHECK(r.gap <= 2.0 * diam * (avg_v + diam) + diam * diam);
    }
  }
  SUBCASE("position-only functions are unchanged by relabeling") {
    const auto rows = coupling_integral_check(
        psi1, psi2, cells,
        [](const Eigen::VectorXd& x, const Eigen::VectorXd&) { return std::cos(testing::two_pi * x[0]); }, levels,
        lower, 2.0);
    for (const auto& r : rows) CHECK(r.gap <= testing::two_pi * r.cube_diameter);
  }
  SUBCASE("cells must carry mass 1/N") {
    CellCoupling bad = cells;
    bad.mass[0] *= 2.0;
    CHECK_THROWS_AS(coupling_integral_check(
                        psi1, psi2, bad, [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 1.0; },
                        levels, lower, 2.0),
                    Error);
  }
}
