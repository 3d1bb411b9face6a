#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mfg {

/// N equally weighted points of R^d: the discrete element of
/// M = L^2([0,1)^d, R^d). Cell i carries weight 1/N. Points are stored as
/// the columns of a d x N matrix and are never reduced mod 1.
class Parametrization {
 public:
  Parametrization() = default;
  Parametrization(int dim, int n);
  explicit Parametrization(Eigen::MatrixXd points);

  int dim() const { return static_cast<int>(points_.rows()); }
  int size() const { return static_cast<int>(points_.cols()); }

  auto point(int i) const { return points_.col(i); }
  auto point(int i) { return points_.col(i); }

  const Eigen::MatrixXd& matrix() const { return points_; }
  Eigen::MatrixXd& matrix() { return points_; }

  friend bool operator==(const Parametrization& a, const Parametrization& b) {
    return a.points_.rows() == b.points_.rows() && a.points_.cols() == b.points_.cols() &&
           a.points_ == b.points_;
  }

 private:
  Eigen::MatrixXd points_;
};

/// Element of M read as a tangent vector: velocities, variations and
/// representers of derivatives.
class TangentField {
 public:
  TangentField() = default;
  TangentField(int dim, int n);
  explicit TangentField(Eigen::MatrixXd vectors);

  int dim() const { return static_cast<int>(vectors_.rows()); }
  int size() const { return static_cast<int>(vectors_.cols()); }

  auto vector(int i) const { return vectors_.col(i); }
  auto vector(int i) { return vectors_.col(i); }

  const Eigen::MatrixXd& matrix() const { return vectors_; }
  Eigen::MatrixXd& matrix() { return vectors_; }

 private:
  Eigen::MatrixXd vectors_;
};

/// A relabeling of cells (discrete H = S_N) together with an integer
/// shift per cell (discrete L^2_Z). Acts by (psi o h + z)_i = psi_perm(i) + z_i.
/// Permutations are 0-based.
class GroupElement {
 public:
  GroupElement(std::vector<int> perm, Eigen::MatrixXi shifts);

  static GroupElement identity(int dim, int n);
  static GroupElement permutation(int dim, std::vector<int> perm);

  int dim() const { return static_cast<int>(shifts_.rows()); }
  int size() const { return static_cast<int>(perm_.size()); }
  const std::vector<int>& perm() const { return perm_; }
  const Eigen::MatrixXi& shifts() const { return shifts_; }

 private:
  std::vector<int> perm_;
  Eigen::MatrixXi shifts_;
};

/// True when `perm` is a bijection of {0..n-1}.
bool is_permutation(const std::vector<int>& perm);

/// (1/N) sum_i <f_i, g_i>.
double inner_M(const TangentField& f, const TangentField& g);
double norm_M(const TangentField& f);
/// M-norm of the difference of two parametrizations.
double distance_M(const Parametrization& a, const Parametrization& b);

Parametrization act(const Parametrization& psi, const GroupElement& e);
/// Tangent fields transform by the relabeling only; shifts drop out.
TangentField act(const TangentField& field, const GroupElement& e);

/// Group element with act(psi, compose(outer, inner)) == act(act(psi, inner), outer).
GroupElement compose(const GroupElement& outer, const GroupElement& inner);

/// min over z in Z^d of |x - y - z|.
double torus_dist(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y);

/// Points reduced to [0,1)^d, sorted lexicographically (ties keep index
/// order). Returned as a d x N matrix.
Eigen::MatrixXd empirical_measure(const Parametrization& psi);

}  // namespace mfg
