#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfg/config_space.hpp"
#include "mfg/mean_field.hpp"
#include "mfg/pack_dynamics.hpp"

namespace mfg {

/// Grid of (t, q) points for residual sweeps, plus the horizon scan used by
/// the contraction sweep.
struct SweepSpec {
  std::vector<double> times;            ///< empty: {t0}
  std::vector<Eigen::VectorXd> points;  ///< explicit agent positions
  int q_grid = 0;                       ///< adds the points k/q_grid on each axis
  double t_start = -0.0125;             ///< first horizon of the contraction sweep
  double t_factor = 2.0;
  int max_steps = 10;
  double contraction_limit = 0.9;
};

struct RunConfig {
  int dim = 1;
  int n_particles = 8;
  double t0 = -0.05;
  std::optional<PotentialSet> potentials;  ///< drawn from seed when absent
  SolveOptions solver;
  FdSteps fd;
  std::uint64_t seed = 0;
  std::string output = ".";
  std::optional<Parametrization> psi;  ///< drawn from seed when absent
  SweepSpec sweep;
  std::string base_dir = ".";  ///< resolves psi_file relative to the config
};

/// Parses and validates a config document. Errors name the offending path,
/// e.g. "solver.tol: must be > 0".
RunConfig parse_run_config(const nlohmann::json& doc, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

/// Re-checks the invariants after command-line overrides.
void validate(const RunConfig& config);

/// Potentials and psi with the seeded draws filled in. The stream draws
/// potentials first, then psi, so overriding either does not shift the other.
PotentialSet resolved_potentials(const RunConfig& config);
Parametrization resolved_psi(const RunConfig& config);

/// Sweep points: explicit points followed by the q_grid lattice
/// (lexicographic, first axis slowest).
std::vector<Eigen::VectorXd> sweep_points(const RunConfig& config);

TrigSeries series_from_json(const nlohmann::json& j, int dim, bool even, const std::string& where);
nlohmann::json to_json(const TrigSeries& series);
nlohmann::json to_json(const RunConfig& config);

}  // namespace mfg
