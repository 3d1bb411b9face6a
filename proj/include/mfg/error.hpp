#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfg {

enum class ErrorKind {
  config,
  shape_mismatch,
  invalid_series,
  invalid_group_element,
  blow_up,
  no_convergence,
  linear_solve_failure,
  descent_failure,
  marginal_mismatch,
  non_integral_mass,
  io,
};

/// Machine-readable name, used in error JSON emitted by the CLI.
std::string_view to_string(ErrorKind kind);

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mfg
