#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mfg {

/// One mode a*cos(2 pi <k,x>) + b*sin(2 pi <k,x>).
struct TrigTerm {
  Eigen::VectorXi k;
  double a = 0.0;
  double b = 0.0;
};

/// Finite trigonometric polynomial on the torus T^d, lifted to a 1-periodic
/// function on R^d. Immutable after construction.
///
/// Construction rejects duplicate frequency vectors, frequencies of the
/// wrong dimension, non-finite coefficients, and (for even series) any
/// nonzero sine coefficient.
class TrigSeries {
 public:
  TrigSeries(int dim, std::vector<TrigTerm> terms, bool even);

  /// The zero series in dimension `dim`.
  static TrigSeries zero(int dim, bool even = true);

  int dim() const { return dim_; }
  bool even() const { return even_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }
  bool is_zero() const;

  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd grad(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd hess(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Allocation-free kernels for the particle loops. `x` points at dim()
  // doubles; results are scaled by `scale` and added into the outputs.
  double eval_raw(const double* x) const;
  void add_grad(const double* x, double scale, double* grad_out) const;
  /// Adds scale*value to *value_out and scale*grad to grad_out in one pass.
  void add_value_and_grad(const double* x, double scale, double* value_out,
                          double* grad_out) const;
  void add_hess(const double* x, double scale, double* hess_out) const;

 private:
  int dim_;
  bool even_;
  std::vector<TrigTerm> terms_;
  // 2*pi*k per term, flattened term-major.
  std::vector<double> freq_;
  std::vector<double> a_;
  std::vector<double> b_;
};

}  // namespace mfg
