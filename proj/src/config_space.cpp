#include "mfg/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfg/error.hpp"

namespace mfg {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorKind::shape_mismatch, std::string(what) + " has non-finite entries");
}

void require_same_shape(int d1, int n1, int d2, int n2) {
  if (d1 != d2 || n1 != n2) {
    throw Error(ErrorKind::shape_mismatch,
                "shape mismatch: (" + std::to_string(d1) + "x" + std::to_string(n1) + ") vs (" +
                    std::to_string(d2) + "x" + std::to_string(n2) + ")");
  }
}

}  // namespace

Parametrization::Parametrization(int dim, int n) : points_(Eigen::MatrixXd::Zero(dim, n)) {}

Parametrization::Parametrization(Eigen::MatrixXd points) : points_(std::move(points)) {
  require_finite(points_, "parametrization");
}

TangentField::TangentField(int dim, int n) : vectors_(Eigen::MatrixXd::Zero(dim, n)) {}

TangentField::TangentField(Eigen::MatrixXd vectors) : vectors_(std::move(vectors)) {
  require_finite(vectors_, "tangent field");
}

bool is_permutation(const std::vector<int>& perm) {
  std::vector<char> hit(perm.size(), 0);
  for (int p : perm) {
    if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || hit[p]) return false;
    hit[p] = 1;
  }
  return true;
}

GroupElement::GroupElement(std::vector<int> perm, Eigen::MatrixXi shifts)
    : perm_(std::move(perm)), shifts_(std::move(shifts)) {
  if (!is_permutation(perm_)) {
    throw Error(ErrorKind::invalid_group_element, "perm is not a bijection");
  }
  if (shifts_.cols() != static_cast<Eigen::Index>(perm_.size())) {
    throw Error(ErrorKind::invalid_group_element, "shifts must have one column per cell");
  }
}

GroupElement GroupElement::identity(int dim, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  return {std::move(perm), Eigen::MatrixXi::Zero(dim, n)};
}

GroupElement GroupElement::permutation(int dim, std::vector<int> perm) {
  const auto n = static_cast<Eigen::Index>(perm.size());
  return {std::move(perm), Eigen::MatrixXi::Zero(dim, n)};
}

double inner_M(const TangentField& f, const TangentField& g) {
  require_same_shape(f.dim(), f.size(), g.dim(), g.size());
  if (f.size() == 0) return 0.0;
  return f.matrix().cwiseProduct(g.matrix()).sum() / f.size();
}

double norm_M(const TangentField& f) { return std::sqrt(inner_M(f, f)); }

double distance_M(const Parametrization& a, const Parametrization& b) {
  require_same_shape(a.dim(), a.size(), b.dim(), b.size());
  if (a.size() == 0) return 0.0;
  return std::sqrt((a.matrix() - b.matrix()).squaredNorm() / a.size());
}

Parametrization act(const Parametrization& psi, const GroupElement& e) {
  require_same_shape(psi.dim(), psi.size(), e.dim(), e.size());
  Eigen::MatrixXd out(psi.dim(), psi.size());
  for (int i = 0; i < psi.size(); ++i) {
    out.col(i) = psi.point(e.perm()[i]) + e.shifts().col(i).cast<double>();
  }
  return Parametrization(std::move(out));
}

TangentField act(const TangentField& field, const GroupElement& e) {
  require_same_shape(field.dim(), field.size(), e.dim(), e.size());
  Eigen::MatrixXd out(field.dim(), field.size());
  for (int i = 0; i < field.size(); ++i) out.col(i) = field.vector(e.perm()[i]);
  return TangentField(std::move(out));
}

GroupElement compose(const GroupElement& outer, const GroupElement& inner) {
  require_same_shape(outer.dim(), outer.size(), inner.dim(), inner.size());
  const int n = outer.size();
  std::vector<int> perm(n);
  Eigen::MatrixXi shifts(outer.dim(), n);
  for (int i = 0; i < n; ++i) {
    const int j = outer.perm()[i];
    perm[i] = inner.perm()[j];
    shifts.col(i) = inner.shifts().col(j) + outer.shifts().col(i);
  }
  return {std::move(perm), std::move(shifts)};
}

double torus_dist(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::shape_mismatch, "point dimension mismatch");
  double sq = 0.0;
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    double diff = x[c] - y[c];
    diff -= std::round(diff);
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

Eigen::MatrixXd empirical_measure(const Parametrization& psi) {
  Eigen::MatrixXd reduced = psi.matrix();
  for (Eigen::Index i = 0; i < reduced.size(); ++i) {
    double r = reduced.data()[i] - std::floor(reduced.data()[i]);
    if (r >= 1.0) r = 0.0;  // floor rounding at -tiny
    reduced.data()[i] = r;
  }
  std::vector<int> order(psi.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index c = 0; c < reduced.rows(); ++c) {
      if (reduced(c, a) != reduced(c, b)) return reduced(c, a) < reduced(c, b);
    }
    return false;
  });
  Eigen::MatrixXd out(reduced.rows(), reduced.cols());
  for (int i = 0; i < psi.size(); ++i) out.col(i) = reduced.col(order[i]);
  return out;
}

}  // namespace mfg
