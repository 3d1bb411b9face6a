#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mfg/config_space.hpp"

namespace mfg {

/// Minimum-cost perfect matching on a square cost matrix (shortest
/// augmenting path with dual potentials, O(n^3)). Returns `match` with
/// match[col] = row assigned to that column.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

enum class GroundMetric { torus, euclidean };

struct Wasserstein2Result {
  double squared = 0.0;  ///< W2^2 = (1/N) sum_i |mu_perm(i) - nu_i|^2
  GroupElement perm;     ///< act(mu, perm) is matched cell-by-cell to nu
};

/// Squared cost matrix C(a, b) = |mu_a - nu_b|^2 (torus or lifted metric).
Eigen::MatrixXd transport_cost_matrix(const Parametrization& mu, const Parametrization& nu,
                                      GroundMetric metric = GroundMetric::torus);

/// Cost (1/N) sum_i C(perm[i], i), summed in index order.
double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& perm);

Wasserstein2Result wasserstein2(const Parametrization& mu, const Parametrization& nu,
                                GroundMetric metric = GroundMetric::torus);

/// Dyadic partition of the box [lower, lower + side)^d into 2^level cubes
/// per axis. Cube ids are lexicographic with the first coordinate slowest.
class CubeGrid {
 public:
  CubeGrid(int dim, int level, Eigen::VectorXd lower, double side);
  /// Unit box [0,1)^d, for points already reduced mod 1.
  static CubeGrid unit(int dim, int level);

  int dim() const { return dim_; }
  int level() const { return level_; }
  int cubes_per_axis() const { return 1 << level_; }
  int cube_count() const;
  double cube_diameter() const;

  /// Cube containing x. Points outside the box are clamped to the
  /// boundary cubes.
  int cube_of(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Cube id per cell of psi.
  std::vector<int> assign(const Parametrization& psi) const;
  std::vector<int> histogram(const Parametrization& psi) const;

 private:
  int dim_;
  int level_;
  Eigen::VectorXd lower_;
  double side_;
};

/// Discrete transfer plan between the cube histograms of two
/// parametrizations. Row r refers to cube cubes_a[r] (first marginal),
/// column c to cube cubes_b[c] (second marginal). Masses sum to one.
struct Coupling {
  std::vector<int> cubes_a;
  std::vector<int> cubes_b;
  Eigen::MatrixXd mass;
};

/// Cell counts N * mass, validated to be nonnegative integers.
Eigen::MatrixXi coupling_counts(const Coupling& gamma, int cell_count);

/// Relabeling h (perm only) such that, for every (i, j),
/// #{x : psi1(h(x)) in Q_i and psi2(x) in Q_j} = N * gamma_ij exactly.
/// Throws marginal_mismatch when the histograms disagree with gamma, and
/// non_integral_mass when some N * gamma_ij is not an integer.
GroupElement rearrange(const Parametrization& psi1, const Parametrization& psi2,
                       const Coupling& gamma, const CubeGrid& grid);

/// Count table #{x : psi1(h(x)) in Q_i, psi2(x) in Q_j} over the coupling's
/// row/column cubes, for checking a relabeling against gamma.
Eigen::MatrixXi realized_counts(const Parametrization& psi1, const Parametrization& psi2,
                                const GroupElement& h, const Coupling& gamma, const CubeGrid& grid);

/// Integer matrix with the given row and column sums, close to `target`
/// (largest-remainder rounding followed by marginal repair).
Eigen::MatrixXi round_counts(const Eigen::MatrixXd& target, const std::vector<int>& row_sums,
                             const std::vector<int>& col_sums);

/// A coupling of the two empirical measures given at cell resolution:
/// atom k pairs cell a[k] of psi1 with cell b[k] of psi2 and carries
/// mass[k]. Every cell of either side must receive total mass 1/N.
struct CellCoupling {
  std::vector<int> a;
  std::vector<int> b;
  std::vector<double> mass;
};

/// Cube-level projection of a cell coupling on a grid, rounded to
/// multiples of 1/N with the cube histograms as marginals.
Coupling project_coupling(const Parametrization& psi1, const Parametrization& psi2,
                          const CellCoupling& gamma, const CubeGrid& grid);

struct ConvergenceRow {
  int level = 0;
  double discrete_sum = 0.0;
  double reference = 0.0;
  double gap = 0.0;
  double cube_diameter = 0.0;
};

using CouplingTestFunction =
    std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& v)>;

/// For each level n, rearranges psi1 against psi2 at that level and compares
/// (1/N) sum_x f(psi1(h_n x), psi2(x) - psi1(h_n x)) with the exact
/// integral of f(a, b - a) against gamma.
std::vector<ConvergenceRow> coupling_integral_check(const Parametrization& psi1,
                                                    const Parametrization& psi2,
                                                    const CellCoupling& gamma,
                                                    const CouplingTestFunction& f,
                                                    const std::vector<int>& levels,
                                                    const Eigen::VectorXd& lower, double side);

}  // namespace mfg
