#include "mfg/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mfg/error.hpp"

namespace mfg {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Parametrization parse_parametrization_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) numeric = numeric && parse_number(fields[k], row[k]);
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw Error(ErrorKind::config, origin + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::shape_mismatch,
                  origin + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::config, origin + ": no cells");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(k, i) = rows[i][k];
  }
  return Parametrization(std::move(m));
}

Parametrization read_parametrization_csv(const std::string& path) {
  return parse_parametrization_csv(read_text_file(path), path);
}

std::string parametrization_csv(const Parametrization& psi) {
  std::string out;
  for (int k = 0; k < psi.dim(); ++k) out += (k ? ",x" : "x") + std::to_string(k + 1);
  out += '\n';
  for (int i = 0; i < psi.size(); ++i) {
    for (int k = 0; k < psi.dim(); ++k) {
      if (k) out += ',';
      out += format_double(psi.matrix()(k, i));
    }
    out += '\n';
  }
  return out;
}

Parametrization parametrization_from_json(const json& j, int dim, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::config, where + ": expected a nonempty array");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& cell = j[i];
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (cell.is_number() && dim == 1) {
      m(0, i) = cell.get<double>();
      continue;
    }
    if (!cell.is_array() || static_cast<int>(cell.size()) != dim) {
      throw Error(ErrorKind::shape_mismatch, at + ": expected " + std::to_string(dim) + " coordinates");
    }
    for (int k = 0; k < dim; ++k) {
      if (!cell[k].is_number()) throw Error(ErrorKind::config, at + "[" + std::to_string(k) + "]: not a number");
      m(k, i) = cell[k].get<double>();
    }
  }
  return Parametrization(std::move(m));
}

json to_json(const Parametrization& psi) {
  json out = json::array();
  for (int i = 0; i < psi.size(); ++i) {
    json cell = json::array();
    for (int k = 0; k < psi.dim(); ++k) cell.push_back(psi.matrix()(k, i));
    out.push_back(std::move(cell));
  }
  return out;
}

std::string trajectory_csv(const PackTrajectory& trajectory) {
  std::string out = "time,particle";
  const int d = trajectory.terminal().dim();
  for (int k = 0; k < d; ++k) out += ",x" + std::to_string(k + 1);
  for (int k = 0; k < d; ++k) out += ",v" + std::to_string(k + 1);
  out += '\n';
  for (std::size_t node = 0; node < trajectory.node_count(); ++node) {
    const auto& x = trajectory.position(node).matrix();
    const auto& v = trajectory.velocity(node).matrix();
    const std::string time = format_double(trajectory.times()[node]);
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      out += time;
      out += ',' + std::to_string(i);
      for (int k = 0; k < d; ++k) out += ',' + format_double(x(k, i));
      for (int k = 0; k < d; ++k) out += ',' + format_double(v(k, i));
      out += '\n';
    }
  }
  return out;
}

json to_json(const SolveReport& report) {
  return json{{"iterations", report.iterations},
              {"final_residual", report.final_residual},
              {"method", to_string(report.method)},
              {"contraction_estimate", report.contraction_estimate},
              {"converged", report.converged},
              {"residual_history", report.residual_history}};
}

json to_json(const GroupElement& e) {
  json shifts = json::array();
  for (Eigen::Index i = 0; i < e.shifts().cols(); ++i) {
    json s = json::array();
    for (Eigen::Index k = 0; k < e.shifts().rows(); ++k) s.push_back(e.shifts()(k, i));
    shifts.push_back(std::move(s));
  }
  return json{{"perm", e.perm()}, {"shifts", std::move(shifts)}};
}

Coupling coupling_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::config, "coupling: expected an object");
  for (const char* key : {"cubes_a", "cubes_b", "mass"}) {
    if (!j.contains(key)) throw Error(ErrorKind::config, std::string("coupling.") + key + ": missing");
  }
  Coupling gamma;
  try {
    gamma.cubes_a = j.at("cubes_a").get<std::vector<int>>();
    gamma.cubes_b = j.at("cubes_b").get<std::vector<int>>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::config, "coupling.cubes_a/cubes_b: expected integer arrays");
  }
  const json& mass = j.at("mass");
  const auto rows = static_cast<Eigen::Index>(gamma.cubes_a.size());
  const auto cols = static_cast<Eigen::Index>(gamma.cubes_b.size());
  if (!mass.is_array() || static_cast<Eigen::Index>(mass.size()) != rows) {
    throw Error(ErrorKind::shape_mismatch, "coupling.mass: expected " + std::to_string(rows) + " rows");
  }
  gamma.mass.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = mass[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorKind::shape_mismatch, "coupling.mass[" + std::to_string(r) + "]: expected " +
                                                 std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw Error(ErrorKind::config,
                    "coupling.mass[" + std::to_string(r) + "][" + std::to_string(c) + "]: not a number");
      }
      gamma.mass(r, c) = row[c].get<double>();
    }
  }
  return gamma;
}

json to_json(const Coupling& gamma) {
  json mass = json::array();
  for (Eigen::Index r = 0; r < gamma.mass.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < gamma.mass.cols(); ++c) row.push_back(gamma.mass(r, c));
    mass.push_back(std::move(row));
  }
  return json{{"cubes_a", gamma.cubes_a}, {"cubes_b", gamma.cubes_b}, {"mass", std::move(mass)}};
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::string out = "level,discrete_sum,reference,gap,cube_diameter\n";
  for (const auto& r : rows) {
    out += std::to_string(r.level) + ',' + format_double(r.discrete_sum) + ',' +
           format_double(r.reference) + ',' + format_double(r.gap) + ',' +
           format_double(r.cube_diameter) + '\n';
  }
  return out;
}

}  // namespace mfg
