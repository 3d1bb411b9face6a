#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfg/config_space.hpp"
#include "mfg/pack_dynamics.hpp"
#include "mfg/transport.hpp"

namespace mfg {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// One cell per row, d comma-separated coordinates. Blank lines, lines
/// starting with '#', and a non-numeric header row are skipped.
Parametrization parse_parametrization_csv(const std::string& text, const std::string& origin);
Parametrization read_parametrization_csv(const std::string& path);
std::string parametrization_csv(const Parametrization& psi);

/// Accepts [[x1..xd], ...] or, for d = 1, a flat list of numbers.
Parametrization parametrization_from_json(const nlohmann::json& j, int dim,
                                          const std::string& where);
nlohmann::json to_json(const Parametrization& psi);

/// Columns time, particle, x1..xd, v1..vd; rows by node then particle.
std::string trajectory_csv(const PackTrajectory& trajectory);

nlohmann::json to_json(const SolveReport& report);
nlohmann::json to_json(const GroupElement& e);

Coupling coupling_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Coupling& gamma);

std::string convergence_csv(const std::vector<ConvergenceRow>& rows);

}  // namespace mfg
