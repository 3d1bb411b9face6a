#include "mfg/mean_field.hpp"

#include "mfg/error.hpp"

namespace mfg {

namespace {

void require_dim(int got, int want) {
  if (got != want) {
    throw Error(ErrorKind::shape_mismatch,
                "dimension mismatch: " + std::to_string(got) + " vs " + std::to_string(want));
  }
}

void check(const PointRef& q, const Parametrization& sigma, const PotentialSet& P) {
  require_dim(static_cast<int>(q.size()), P.dim());
  require_dim(sigma.dim(), P.dim());
}

// (1/N) sum_j k(q - sigma_j), value and gradient.
double convolve(const TrigSeries& kernel, const PointRef& q, const Parametrization& sigma,
                double* grad_out) {
  const int d = sigma.dim();
  const int n = sigma.size();
  if (n == 0) return 0.0;
  Eigen::VectorXd diff(d);
  double value = 0.0;
  const double w = 1.0 / n;
  for (int j = 0; j < n; ++j) {
    diff = q - sigma.point(j);
    if (grad_out) {
      kernel.add_value_and_grad(diff.data(), w, &value, grad_out);
    } else {
      value += w * kernel.eval_raw(diff.data());
    }
  }
  return value;
}

void convolve_hess(const TrigSeries& kernel, const PointRef& q, const Parametrization& sigma,
                   double* hess_out) {
  const int n = sigma.size();
  Eigen::VectorXd diff(sigma.dim());
  for (int j = 0; j < n; ++j) {
    diff = q - sigma.point(j);
    kernel.add_hess(diff.data(), 1.0 / n, hess_out);
  }
}

double pair_sum(const TrigSeries& kernel, const Parametrization& sigma) {
  const int n = sigma.size();
  if (n == 0) return 0.0;
  Eigen::VectorXd diff(sigma.dim());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      diff = sigma.point(i) - sigma.point(j);
      total += kernel.eval_raw(diff.data());
    }
  }
  return total / (2.0 * n * n);
}

}  // namespace

PotentialSet::PotentialSet(TrigSeries phi, TrigSeries u0, TrigSeries u1)
    : phi_(std::move(phi)), u0_(std::move(u0)), u1_(std::move(u1)) {
  if (!phi_.even()) throw Error(ErrorKind::invalid_series, "phi must be an even series");
  if (!u1_.even()) throw Error(ErrorKind::invalid_series, "u1 must be an even series");
  if (phi_.dim() != u0_.dim() || phi_.dim() != u1_.dim()) {
    throw Error(ErrorKind::invalid_series, "phi, u0 and u1 must share one dimension");
  }
}

PotentialSet PotentialSet::zero(int dim) {
  return {TrigSeries::zero(dim), TrigSeries::zero(dim, false), TrigSeries::zero(dim)};
}

double F_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P) {
  check(q, sigma, P);
  return convolve(P.phi(), q, sigma, nullptr);
}

Eigen::VectorXd grad_F_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P) {
  check(q, sigma, P);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(P.dim());
  convolve(P.phi(), q, sigma, g.data());
  return g;
}

Eigen::MatrixXd hess_F_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P) {
  check(q, sigma, P);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(P.dim(), P.dim());
  convolve_hess(P.phi(), q, sigma, h.data());
  return h;
}

double u0_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P) {
  check(q, sigma, P);
  return P.u0().eval_raw(q.data()) + convolve(P.u1(), q, sigma, nullptr);
}

Eigen::VectorXd grad_u0_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P) {
  check(q, sigma, P);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(P.dim());
  P.u0().add_grad(q.data(), 1.0, g.data());
  convolve(P.u1(), q, sigma, g.data());
  return g;
}

Eigen::MatrixXd hess_u0_hat(const PointRef& q, const Parametrization& sigma, const PotentialSet& P) {
  check(q, sigma, P);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(P.dim(), P.dim());
  P.u0().add_hess(q.data(), 1.0, h.data());
  convolve_hess(P.u1(), q, sigma, h.data());
  return h;
}

double cal_F_hat(const Parametrization& sigma, const PotentialSet& P) {
  require_dim(sigma.dim(), P.dim());
  return pair_sum(P.phi(), sigma);
}

double cal_U0_hat(const Parametrization& sigma, const PotentialSet& P) {
  require_dim(sigma.dim(), P.dim());
  const int n = sigma.size();
  if (n == 0) return 0.0;
  double single = 0.0;
  for (int i = 0; i < n; ++i) single += P.u0().eval_raw(sigma.point(i).data());
  return single / n + pair_sum(P.u1(), sigma);
}

TangentField D_cal_F_hat(const Parametrization& sigma, const PotentialSet& P) {
  TangentField out(sigma.dim(), sigma.size());
  cal_F_hat_with_gradient(sigma, P, out);
  return out;
}

TangentField D_cal_U0_hat(const Parametrization& sigma, const PotentialSet& P) {
  require_dim(sigma.dim(), P.dim());
  TangentField out(sigma.dim(), sigma.size());
  for (int i = 0; i < sigma.size(); ++i) out.vector(i) = grad_u0_hat(sigma.point(i), sigma, P);
  return out;
}

double cal_F_hat_with_gradient(const Parametrization& sigma, const PotentialSet& P,
                               TangentField& representer) {
  require_dim(sigma.dim(), P.dim());
  if (representer.dim() != sigma.dim() || representer.size() != sigma.size()) {
    representer = TangentField(sigma.dim(), sigma.size());
  }
  return detail::pair_potential_and_representer(P.phi(), sigma.matrix(), representer.matrix());
}

namespace detail {

double pair_potential_and_representer(const TrigSeries& kernel,
                                      const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                      Eigen::Ref<Eigen::MatrixXd> representer) {
  const auto d = sigma.rows();
  const auto n = sigma.cols();
  representer.setZero();
  if (n == 0) return 0.0;
  // The kernel is even, so the (i,j) and (j,i) terms share a value and have
  // opposite gradients: visit each unordered pair once.
  Eigen::VectorXd diff(d);
  Eigen::VectorXd g(d);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(d);
  double total = static_cast<double>(n) * kernel.eval_raw(origin.data());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      diff = sigma.col(i) - sigma.col(j);
      g.setZero();
      double value = 0.0;
      kernel.add_value_and_grad(diff.data(), 1.0, &value, g.data());
      total += 2.0 * value;
      representer.col(i) += g;
      representer.col(j) -= g;
    }
  }
  representer /= static_cast<double>(n);
  return total / (2.0 * static_cast<double>(n) * static_cast<double>(n));
}

double convolve_at(const TrigSeries& kernel, const double* q,
                   const Eigen::Ref<const Eigen::MatrixXd>& sigma, double* grad_out) {
  const auto d = sigma.rows();
  const auto n = sigma.cols();
  if (n == 0) return 0.0;
  Eigen::VectorXd diff(d);
  const Eigen::Map<const Eigen::VectorXd> qv(q, d);
  double value = 0.0;
  const double w = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    diff = qv - sigma.col(j);
    kernel.add_value_and_grad(diff.data(), w, &value, grad_out);
  }
  return value;
}

}  // namespace detail

}  // namespace mfg
