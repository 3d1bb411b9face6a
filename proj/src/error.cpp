#include "mfg/error.hpp"

#include <charconv>

namespace mfg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config_error";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::invalid_series: return "invalid_series";
    case ErrorKind::invalid_group_element: return "invalid_group_element";
    case ErrorKind::blow_up: return "blow_up";
    case ErrorKind::no_convergence: return "no_convergence";
    case ErrorKind::linear_solve_failure: return "linear_solve_failure";
    case ErrorKind::descent_failure: return "descent_failure";
    case ErrorKind::marginal_mismatch: return "marginal_mismatch";
    case ErrorKind::non_integral_mass: return "non_integral_mass";
    case ErrorKind::io: return "io_error";
  }
  return "unknown";
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace mfg
