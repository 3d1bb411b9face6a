#pragma once

#include <Eigen/Dense>

#include "mfg/config_space.hpp"
#include "mfg/kernels.hpp"

namespace mfg {

/// The three generating functions of the game: interaction kernel phi,
/// terminal potential U0 and terminal interaction U1. phi and U1 must be
/// even; all three share one dimension.
class PotentialSet {
 public:
  PotentialSet(TrigSeries phi, TrigSeries u0, TrigSeries u1);

  static PotentialSet zero(int dim);

  int dim() const { return phi_.dim(); }
  const TrigSeries& phi() const { return phi_; }
  const TrigSeries& u0() const { return u0_; }
  const TrigSeries& u1() const { return u1_; }

 private:
  TrigSeries phi_;
  TrigSeries u0_;
  TrigSeries u1_;
};

using PointRef = Eigen::Ref<const Eigen::VectorXd>;

// Single-point potentials seen by an agent at q in a population sigma:
//   F_hat(q, sigma)  = (1/N) sum_j phi(q - sigma_j)
//   u0_hat(q, sigma) = U0(q) + (1/N) sum_j U1(q - sigma_j)
double F_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P);
Eigen::VectorXd grad_F_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P);
Eigen::MatrixXd hess_F_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P);

double u0_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P);
Eigen::VectorXd grad_u0_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P);
Eigen::MatrixXd hess_u0_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P);

// Population functionals on M:
//   cal_F_hat(sigma)  = 1/(2N^2) sum_{i,j} phi(sigma_i - sigma_j)     (diagonal included)
//   cal_U0_hat(sigma) = (1/N) sum_i U0(sigma_i) + 1/(2N^2) sum_{i,j} U1(sigma_i - sigma_j)
double cal_F_hat(const Parametrization& sigma, const PotentialSet& P);
double cal_U0_hat(const Parametrization& sigma, const PotentialSet& P);

/// Representers of the M-gradients: component i is grad_F_hat(sigma_i, sigma)
/// (resp. grad_u0_hat). A raw partial derivative in coordinate (i, alpha)
/// is 1/N times the representer entry.
TangentField D_cal_F_hat(const Parametrization& sigma, const PotentialSet& P);
TangentField D_cal_U0_hat(const Parametrization& sigma, const PotentialSet& P);

/// cal_F_hat and its representer in one O(N^2) pass (hot path of the pack ODE).
double cal_F_hat_with_gradient(const Parametrization& sigma, const PotentialSet& P,
                               TangentField& representer);

namespace detail {
/// 1/(2N^2) sum_{i,j} k(sigma_i - sigma_j) for an even kernel k, with its
/// representer (1/N) sum_j grad k(sigma_i - sigma_j) written to `representer`.
double pair_potential_and_representer(const TrigSeries& kernel,
                                      const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                      Eigen::Ref<Eigen::MatrixXd> representer);
/// (1/N) sum_j grad k(q - sigma_j) added into grad_out; returns the value
/// (1/N) sum_j k(q - sigma_j).
double convolve_at(const TrigSeries& kernel, const double* q,
                   const Eigen::Ref<const Eigen::MatrixXd>& sigma, double* grad_out);
}  // namespace detail

}  // namespace mfg
