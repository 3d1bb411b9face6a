#include "mfg/kernels.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "mfg/error.hpp"

namespace mfg {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TrigSeries::TrigSeries(int dim, std::vector<TrigTerm> terms, bool even)
    : dim_(dim), even_(even), terms_(std::move(terms)) {
  if (dim_ <= 0) {
    throw Error(ErrorKind::invalid_series, "series dimension must be positive");
  }
  std::set<std::vector<int>> seen;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const auto& term = terms_[t];
    if (term.k.size() != dim_) {
      std::ostringstream msg;
      msg << "term " << t << ": frequency has " << term.k.size()
          << " components, expected " << dim_;
      throw Error(ErrorKind::invalid_series, msg.str());
    }
    if (!std::isfinite(term.a) || !std::isfinite(term.b)) {
      throw Error(ErrorKind::invalid_series,
                  "term " + std::to_string(t) + ": non-finite coefficient");
    }
    if (even_ && term.b != 0.0) {
      throw Error(ErrorKind::invalid_series,
                  "term " + std::to_string(t) +
                      ": even series must have zero sine coefficients");
    }
    std::vector<int> key(term.k.data(), term.k.data() + dim_);
    if (!seen.insert(key).second) {
      throw Error(ErrorKind::invalid_series,
                  "term " + std::to_string(t) + ": duplicate frequency vector");
    }
    for (int c = 0; c < dim_; ++c) freq_.push_back(kTwoPi * term.k[c]);
    a_.push_back(term.a);
    b_.push_back(term.b);
  }
}

TrigSeries TrigSeries::zero(int dim, bool even) { return TrigSeries(dim, {}, even); }

bool TrigSeries::is_zero() const {
  for (std::size_t t = 0; t < a_.size(); ++t) {
    if (a_[t] != 0.0 || b_[t] != 0.0) return false;
  }
  return true;
}

double TrigSeries::eval_raw(const double* x) const {
  double value = 0.0;
  const double* w = freq_.data();
  for (std::size_t t = 0; t < a_.size(); ++t, w += dim_) {
    double phase = 0.0;
    for (int c = 0; c < dim_; ++c) phase += w[c] * x[c];
    value += a_[t] * std::cos(phase);
    if (b_[t] != 0.0) value += b_[t] * std::sin(phase);
  }
  return value;
}

void TrigSeries::add_grad(const double* x, double scale, double* grad_out) const {
  const double* w = freq_.data();
  for (std::size_t t = 0; t < a_.size(); ++t, w += dim_) {
    double phase = 0.0;
    for (int c = 0; c < dim_; ++c) phase += w[c] * x[c];
    const double slope = scale * (-a_[t] * std::sin(phase) + b_[t] * std::cos(phase));
    for (int c = 0; c < dim_; ++c) grad_out[c] += slope * w[c];
  }
}

void TrigSeries::add_value_and_grad(const double* x, double scale, double* value_out,
                                    double* grad_out) const {
  const double* w = freq_.data();
  for (std::size_t t = 0; t < a_.size(); ++t, w += dim_) {
    double phase = 0.0;
    for (int c = 0; c < dim_; ++c) phase += w[c] * x[c];
    const double cs = std::cos(phase);
    const double sn = std::sin(phase);
    *value_out += scale * (a_[t] * cs + b_[t] * sn);
    const double slope = scale * (-a_[t] * sn + b_[t] * cs);
    for (int c = 0; c < dim_; ++c) grad_out[c] += slope * w[c];
  }
}

void TrigSeries::add_hess(const double* x, double scale, double* hess_out) const {
  // hess_out is dim x dim, column-major.
  const double* w = freq_.data();
  for (std::size_t t = 0; t < a_.size(); ++t, w += dim_) {
    double phase = 0.0;
    for (int c = 0; c < dim_; ++c) phase += w[c] * x[c];
    const double curv = -scale * (a_[t] * std::cos(phase) + b_[t] * std::sin(phase));
    for (int c = 0; c < dim_; ++c) {
      for (int r = 0; r < dim_; ++r) hess_out[c * dim_ + r] += curv * w[r] * w[c];
    }
  }
}

double TrigSeries::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw Error(ErrorKind::shape_mismatch, "point dimension mismatch");
  return eval_raw(x.data());
}

Eigen::VectorXd TrigSeries::grad(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw Error(ErrorKind::shape_mismatch, "point dimension mismatch");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  add_grad(x.data(), 1.0, g.data());
  return g;
}

Eigen::MatrixXd TrigSeries::hess(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw Error(ErrorKind::shape_mismatch, "point dimension mismatch");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
  add_hess(x.data(), 1.0, h.data());
  return h;
}

}  // namespace mfg
