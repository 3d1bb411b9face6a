#include "mfg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mfg/error.hpp"

namespace mfg {

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw Error(ErrorKind::shape_mismatch, "assignment cost must be square");
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; row 0 / column 0 are the virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> row_of(n + 1, 0), way(n + 1, 0);
  for (int r = 1; r <= n; ++r) {
    row_of[0] = r;
    int col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const int r0 = row_of[col0];
      double delta = inf;
      int col1 = 0;
      for (int c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double reduced = cost(r0 - 1, c - 1) - u[r0] - v[c];
        if (reduced < minv[c]) {
          minv[c] = reduced;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (int c = 0; c <= n; ++c) {
        if (used[c]) {
          u[row_of[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (row_of[col0] != 0);
    do {
      const int col1 = way[col0];
      row_of[col0] = row_of[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> match(n);
  for (int c = 1; c <= n; ++c) match[c - 1] = row_of[c] - 1;
  return match;
}

Eigen::MatrixXd transport_cost_matrix(const Parametrization& mu, const Parametrization& nu,
                                      GroundMetric metric) {
  if (mu.dim() != nu.dim() || mu.size() != nu.size()) {
    throw Error(ErrorKind::shape_mismatch, "transport inputs must have equal N and d");
  }
  const int n = mu.size();
  Eigen::MatrixXd cost(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (metric == GroundMetric::torus) {
        double sq = 0.0;
        for (int c = 0; c < mu.dim(); ++c) {
          double diff = mu.matrix()(c, a) - nu.matrix()(c, b);
          diff -= std::round(diff);
          sq += diff * diff;
        }
        cost(a, b) = sq;
      } else {
        cost(a, b) = (mu.point(a) - nu.point(b)).squaredNorm();
      }
    }
  }
  return cost;
}

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& perm) {
  if (perm.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) total += cost(perm[i], static_cast<Eigen::Index>(i));
  return total / static_cast<double>(perm.size());
}

Wasserstein2Result wasserstein2(const Parametrization& mu, const Parametrization& nu,
                                GroundMetric metric) {
  const Eigen::MatrixXd cost = transport_cost_matrix(mu, nu, metric);
  std::vector<int> perm = solve_assignment(cost);
  const double value = assignment_cost(cost, perm);
  return {value, GroupElement::permutation(mu.dim(), std::move(perm))};
}

CubeGrid::CubeGrid(int dim, int level, Eigen::VectorXd lower, double side)
    : dim_(dim), level_(level), lower_(std::move(lower)), side_(side) {
  if (dim_ <= 0 || level_ < 0 || level_ > 20 || lower_.size() != dim_ || !(side_ > 0.0)) {
    throw Error(ErrorKind::config, "invalid cube grid");
  }
}

CubeGrid CubeGrid::unit(int dim, int level) {
  return {dim, level, Eigen::VectorXd::Zero(dim), 1.0};
}

int CubeGrid::cube_count() const {
  int total = 1;
  for (int c = 0; c < dim_; ++c) total *= cubes_per_axis();
  return total;
}

double CubeGrid::cube_diameter() const {
  return side_ / cubes_per_axis() * std::sqrt(static_cast<double>(dim_));
}

int CubeGrid::cube_of(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const int per_axis = cubes_per_axis();
  int id = 0;
  for (int c = 0; c < dim_; ++c) {
    const double scaled = (x[c] - lower_[c]) / side_ * per_axis;
    int slot = static_cast<int>(std::floor(scaled));
    slot = std::clamp(slot, 0, per_axis - 1);
    id = id * per_axis + slot;
  }
  return id;
}

std::vector<int> CubeGrid::assign(const Parametrization& psi) const {
  if (psi.dim() != dim_) throw Error(ErrorKind::shape_mismatch, "grid dimension mismatch");
  std::vector<int> ids(psi.size());
  for (int i = 0; i < psi.size(); ++i) ids[i] = cube_of(psi.point(i));
  return ids;
}

std::vector<int> CubeGrid::histogram(const Parametrization& psi) const {
  std::vector<int> counts(cube_count(), 0);
  for (int id : assign(psi)) ++counts[id];
  return counts;
}

Eigen::MatrixXi coupling_counts(const Coupling& gamma, int cell_count) {
  if (gamma.mass.rows() != static_cast<Eigen::Index>(gamma.cubes_a.size()) ||
      gamma.mass.cols() != static_cast<Eigen::Index>(gamma.cubes_b.size())) {
    throw Error(ErrorKind::shape_mismatch, "coupling mass shape does not match its cube lists");
  }
  Eigen::MatrixXi counts(gamma.mass.rows(), gamma.mass.cols());
  long total = 0;
  for (Eigen::Index r = 0; r < gamma.mass.rows(); ++r) {
    for (Eigen::Index c = 0; c < gamma.mass.cols(); ++c) {
      const double m = gamma.mass(r, c);
      if (!std::isfinite(m) || m < -1e-12) {
        throw Error(ErrorKind::marginal_mismatch, "coupling has a negative or non-finite mass");
      }
      const double scaled = m * cell_count;
      const double rounded = std::round(scaled);
      if (std::abs(scaled - rounded) > 1e-9 * std::max(1.0, scaled)) {
        throw Error(ErrorKind::non_integral_mass,
                    "N * gamma(" + std::to_string(r) + "," + std::to_string(c) +
                        ") is not an integer");
      }
      counts(r, c) = static_cast<int>(rounded);
      total += counts(r, c);
    }
  }
  if (total != cell_count) {
    throw Error(ErrorKind::marginal_mismatch, "coupling mass does not sum to one");
  }
  return counts;
}

namespace {

std::map<int, int> index_of(const std::vector<int>& cubes, const char* side) {
  std::map<int, int> index;
  for (std::size_t r = 0; r < cubes.size(); ++r) {
    if (!index.emplace(cubes[r], static_cast<int>(r)).second) {
      throw Error(ErrorKind::config, std::string("duplicate cube id in ") + side);
    }
  }
  return index;
}

// Cells of each row/column cube, in ascending cell order.
std::vector<std::vector<int>> cells_by_cube(const std::vector<int>& cube_ids,
                                            const std::map<int, int>& index, const char* side) {
  std::vector<std::vector<int>> cells(index.size());
  for (std::size_t x = 0; x < cube_ids.size(); ++x) {
    const auto it = index.find(cube_ids[x]);
    if (it == index.end()) {
      throw Error(ErrorKind::marginal_mismatch,
                  std::string("cell ") + std::to_string(x) + " of " + side +
                      " lies in a cube with no coupling mass");
    }
    cells[it->second].push_back(static_cast<int>(x));
  }
  return cells;
}

}  // namespace

GroupElement rearrange(const Parametrization& psi1, const Parametrization& psi2,
                       const Coupling& gamma, const CubeGrid& grid) {
  if (psi1.dim() != psi2.dim() || psi1.size() != psi2.size() || psi1.dim() != grid.dim()) {
    throw Error(ErrorKind::shape_mismatch, "rearrange inputs must share N and d with the grid");
  }
  const int n = psi1.size();
  const Eigen::MatrixXi counts = coupling_counts(gamma, n);
  const auto rows = index_of(gamma.cubes_a, "cubes_a");
  const auto cols = index_of(gamma.cubes_b, "cubes_b");
  const auto a_cells = cells_by_cube(grid.assign(psi1), rows, "psi1");
  const auto b_cells = cells_by_cube(grid.assign(psi2), cols, "psi2");

  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    if (counts.row(r).sum() != static_cast<int>(a_cells[r].size())) {
      throw Error(ErrorKind::marginal_mismatch,
                  "first marginal disagrees with the histogram of psi1 at cube " +
                      std::to_string(gamma.cubes_a[r]));
    }
  }
  for (Eigen::Index c = 0; c < counts.cols(); ++c) {
    if (counts.col(c).sum() != static_cast<int>(b_cells[c].size())) {
      throw Error(ErrorKind::marginal_mismatch,
                  "second marginal disagrees with the histogram of psi2 at cube " +
                      std::to_string(gamma.cubes_b[c]));
    }
  }

  // Column by column: cut B_c into consecutive blocks of size counts(r, c)
  // and fill each block with the next unused cells of A_r.
  std::vector<int> perm(n, -1);
  std::vector<std::size_t> cursor(a_cells.size(), 0);
  for (Eigen::Index c = 0; c < counts.cols(); ++c) {
    std::size_t next = 0;
    for (Eigen::Index r = 0; r < counts.rows(); ++r) {
      for (int k = 0; k < counts(r, c); ++k) {
        perm[b_cells[c][next++]] = a_cells[r][cursor[r]++];
      }
    }
  }
  return GroupElement::permutation(psi1.dim(), std::move(perm));
}

Eigen::MatrixXi realized_counts(const Parametrization& psi1, const Parametrization& psi2,
                                const GroupElement& h, const Coupling& gamma,
                                const CubeGrid& grid) {
  const auto rows = index_of(gamma.cubes_a, "cubes_a");
  const auto cols = index_of(gamma.cubes_b, "cubes_b");
  const Parametrization moved = act(psi1, h);
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(rows.size()),
                                                 static_cast<Eigen::Index>(cols.size()));
  for (int x = 0; x < psi2.size(); ++x) {
    const auto r = rows.find(grid.cube_of(moved.point(x)));
    const auto c = cols.find(grid.cube_of(psi2.point(x)));
    if (r == rows.end() || c == cols.end()) {
      throw Error(ErrorKind::marginal_mismatch, "cell lands outside the coupling support");
    }
    ++counts(r->second, c->second);
  }
  return counts;
}

Eigen::MatrixXi round_counts(const Eigen::MatrixXd& target, const std::vector<int>& row_sums,
                             const std::vector<int>& col_sums) {
  const auto nr = target.rows();
  const auto nc = target.cols();
  if (static_cast<Eigen::Index>(row_sums.size()) != nr ||
      static_cast<Eigen::Index>(col_sums.size()) != nc) {
    throw Error(ErrorKind::shape_mismatch, "marginal vectors do not match the target shape");
  }
  if (std::accumulate(row_sums.begin(), row_sums.end(), 0L) !=
      std::accumulate(col_sums.begin(), col_sums.end(), 0L)) {
    throw Error(ErrorKind::marginal_mismatch, "row and column totals differ");
  }
  Eigen::MatrixXi counts(nr, nc);
  Eigen::MatrixXd frac(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (Eigen::Index c = 0; c < nc; ++c) {
      const double t = std::max(0.0, target(r, c));
      counts(r, c) = static_cast<int>(std::floor(t));
      frac(r, c) = t - counts(r, c);
    }
  }
  // Marginal repair, removal side: drop units with the smallest remainder.
  auto trim = [&](bool by_row) {
    const auto outer = by_row ? nr : nc;
    const auto inner = by_row ? nc : nr;
    for (Eigen::Index o = 0; o < outer; ++o) {
      const int want = by_row ? row_sums[o] : col_sums[o];
      int have = by_row ? counts.row(o).sum() : counts.col(o).sum();
      while (have > want) {
        Eigen::Index best = -1;
        for (Eigen::Index i = 0; i < inner; ++i) {
          const int v = by_row ? counts(o, i) : counts(i, o);
          if (v <= 0) continue;
          const double f = by_row ? frac(o, i) : frac(i, o);
          if (best < 0 || f < (by_row ? frac(o, best) : frac(best, o))) best = i;
        }
        (by_row ? counts(o, best) : counts(best, o)) -= 1;
        --have;
      }
    }
  };
  trim(true);
  trim(false);

  std::vector<int> row_deficit(nr), col_deficit(nc);
  for (Eigen::Index r = 0; r < nr; ++r) row_deficit[r] = row_sums[r] - counts.row(r).sum();
  for (Eigen::Index c = 0; c < nc; ++c) col_deficit[c] = col_sums[c] - counts.col(c).sum();

  // Largest remainders first, then any cell whose row and column both lack mass.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> order;
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (Eigen::Index c = 0; c < nc; ++c) order.emplace_back(r, c);
  }
  std::stable_sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
    return frac(x.first, x.second) > frac(y.first, y.second);
  });
  for (const auto& [r, c] : order) {
    if (frac(r, c) > 0.0 && row_deficit[r] > 0 && col_deficit[c] > 0) {
      ++counts(r, c);
      --row_deficit[r];
      --col_deficit[c];
    }
  }
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (Eigen::Index c = 0; c < nc && row_deficit[r] > 0; ++c) {
      const int take = std::min(row_deficit[r], col_deficit[c]);
      counts(r, c) += take;
      row_deficit[r] -= take;
      col_deficit[c] -= take;
    }
  }
  return counts;
}

namespace {

void validate_cell_coupling(const CellCoupling& gamma, int n) {
  if (gamma.a.size() != gamma.b.size() || gamma.a.size() != gamma.mass.size()) {
    throw Error(ErrorKind::shape_mismatch, "cell coupling arrays differ in length");
  }
  std::vector<double> row(n, 0.0), col(n, 0.0);
  for (std::size_t k = 0; k < gamma.a.size(); ++k) {
    if (gamma.a[k] < 0 || gamma.a[k] >= n || gamma.b[k] < 0 || gamma.b[k] >= n) {
      throw Error(ErrorKind::config, "cell coupling refers to a cell out of range");
    }
    if (!(gamma.mass[k] >= 0.0)) throw Error(ErrorKind::marginal_mismatch, "negative atom mass");
    row[gamma.a[k]] += gamma.mass[k];
    col[gamma.b[k]] += gamma.mass[k];
  }
  for (int x = 0; x < n; ++x) {
    if (std::abs(row[x] - 1.0 / n) > 1e-12 || std::abs(col[x] - 1.0 / n) > 1e-12) {
      throw Error(ErrorKind::marginal_mismatch,
                  "cell " + std::to_string(x) + " does not carry mass 1/N in the coupling");
    }
  }
}

}  // namespace

Coupling project_coupling(const Parametrization& psi1, const Parametrization& psi2,
                          const CellCoupling& gamma, const CubeGrid& grid) {
  const int n = psi1.size();
  validate_cell_coupling(gamma, n);
  const auto ids_a = grid.assign(psi1);
  const auto ids_b = grid.assign(psi2);
  std::vector<int> cubes_a(ids_a), cubes_b(ids_b);
  std::sort(cubes_a.begin(), cubes_a.end());
  cubes_a.erase(std::unique(cubes_a.begin(), cubes_a.end()), cubes_a.end());
  std::sort(cubes_b.begin(), cubes_b.end());
  cubes_b.erase(std::unique(cubes_b.begin(), cubes_b.end()), cubes_b.end());
  const auto rows = index_of(cubes_a, "cubes_a");
  const auto cols = index_of(cubes_b, "cubes_b");

  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cubes_a.size()),
                                                 static_cast<Eigen::Index>(cubes_b.size()));
  for (std::size_t k = 0; k < gamma.a.size(); ++k) {
    target(rows.at(ids_a[gamma.a[k]]), cols.at(ids_b[gamma.b[k]])) += gamma.mass[k] * n;
  }
  std::vector<int> row_sums(cubes_a.size(), 0), col_sums(cubes_b.size(), 0);
  for (int id : ids_a) ++row_sums[rows.at(id)];
  for (int id : ids_b) ++col_sums[cols.at(id)];
  const Eigen::MatrixXi counts = round_counts(target, row_sums, col_sums);
  return {std::move(cubes_a), std::move(cubes_b), counts.cast<double>() / n};
}

std::vector<ConvergenceRow> coupling_integral_check(const Parametrization& psi1,
                                                    const Parametrization& psi2,
                                                    const CellCoupling& gamma,
                                                    const CouplingTestFunction& f,
                                                    const std::vector<int>& levels,
                                                    const Eigen::VectorXd& lower, double side) {
  if (psi1.dim() != psi2.dim() || psi1.size() != psi2.size()) {
    throw Error(ErrorKind::shape_mismatch, "coupling check inputs must share N and d");
  }
  const int n = psi1.size();
  validate_cell_coupling(gamma, n);
  double reference = 0.0;
  for (std::size_t k = 0; k < gamma.a.size(); ++k) {
    const Eigen::VectorXd x = psi1.point(gamma.a[k]);
    const Eigen::VectorXd v = psi2.point(gamma.b[k]) - x;
    reference += gamma.mass[k] * f(x, v);
  }
  std::vector<ConvergenceRow> table;
  for (int level : levels) {
    const CubeGrid grid(psi1.dim(), level, lower, side);
    const Coupling projected = project_coupling(psi1, psi2, gamma, grid);
    const GroupElement h = rearrange(psi1, psi2, projected, grid);
    const Parametrization moved = act(psi1, h);
    double sum = 0.0;
    for (int x = 0; x < n; ++x) {
      const Eigen::VectorXd a = moved.point(x);
      const Eigen::VectorXd v = psi2.point(x) - a;
      sum += f(a, v);
    }
    sum /= n;
    table.push_back({level, sum, reference, std::abs(sum - reference), grid.cube_diameter()});
  }
  return table;
}

}  // namespace mfg
