#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfg/error.hpp"
#include "mfg/instances.hpp"
#include "mfg/io.hpp"
#include "mfg/parallel.hpp"
#include "mfg/particle.hpp"
#include "mfg/run_config.hpp"
#include "mfg/transport.hpp"

namespace {

using nlohmann::json;
using namespace mfg;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitTransport = 4;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::blow_up:
    case ErrorKind::no_convergence:
    case ErrorKind::linear_solve_failure:
    case ErrorKind::descent_failure:
      return kExitSolver;
    case ErrorKind::marginal_mismatch:
    case ErrorKind::non_integral_mass:
      return kExitTransport;
    default:
      return kExitConfig;
  }
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

int report_error(const std::string& kind, const std::string& message, int code) {
  emit(json{{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}});
  std::cerr << "mfg_master: " << kind << ": " << message << '\n';
  return code;
}

// Command-line values that override the config file when given.
struct Overrides {
  std::string config;
  std::optional<int> dim, n_particles, max_iter;
  std::optional<long long> seed;
  std::optional<double> t0, h_step, tol, delta_t, delta_q, delta_psi;
  std::optional<std::string> method, output, psi_file;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--dim", o.dim, "space dimension d");
  cmd->add_option("--n-particles", o.n_particles, "number of cells N (random psi only)");
  cmd->add_option("--t0", o.t0, "initial time, <= 0");
  cmd->add_option("--h-step", o.h_step, "integrator step");
  cmd->add_option("--tol", o.tol, "shooting tolerance");
  cmd->add_option("--max-iter", o.max_iter, "shooting iteration cap");
  cmd->add_option("--method", o.method, "picard or newton-fd");
  cmd->add_option("--delta-t", o.delta_t, "finite-difference step in time");
  cmd->add_option("--delta-q", o.delta_q, "finite-difference step in q");
  cmd->add_option("--delta-psi", o.delta_psi, "finite-difference step in psi");
  cmd->add_option("--seed", o.seed, "seed for random potentials and psi");
  cmd->add_option("--output", o.output, "output directory");
  cmd->add_option("--psi-file", o.psi_file, "CSV parametrization, one cell per row");
}

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? parse_run_config(json::object()) : load_run_config(o.config);
  if (o.dim) {
    if (c.potentials && c.potentials->dim() != *o.dim) {
      throw Error(ErrorKind::config, "--dim: differs from the configured potentials");
    }
    c.dim = *o.dim;
  }
  if (o.n_particles) c.n_particles = *o.n_particles;
  if (o.t0) c.t0 = *o.t0;
  if (o.h_step) c.solver.h_step = *o.h_step;
  if (o.tol) c.solver.tol = *o.tol;
  if (o.max_iter) c.solver.max_iter = *o.max_iter;
  if (o.method) c.solver.method = shooting_method_from_string(*o.method);
  if (o.delta_t) c.fd.delta_t = *o.delta_t;
  if (o.delta_q) c.fd.delta_q = *o.delta_q;
  if (o.delta_psi) c.fd.delta_psi = *o.delta_psi;
  if (o.seed) {
    if (*o.seed < 0) throw Error(ErrorKind::config, "--seed: must be >= 0");
    c.seed = static_cast<std::uint64_t>(*o.seed);
  }
  if (o.output) c.output = *o.output;
  if (o.psi_file) {
    c.psi = read_parametrization_csv(*o.psi_file);
    c.n_particles = c.psi->size();
  }
  validate(c);
  return c;
}

std::filesystem::path output_dir(const RunConfig& c) {
  std::filesystem::path dir(c.output);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

json options_json(const RunConfig& c) {
  return json{{"h_step", c.solver.h_step},
              {"tol", c.solver.tol},
              {"method", to_string(c.solver.method)},
              {"delta_t", c.fd.delta_t},
              {"delta_q", c.fd.delta_q},
              {"delta_psi", c.fd.delta_psi}};
}

int cmd_solve(const RunConfig& c) {
  const PotentialSet P = resolved_potentials(c);
  const Parametrization psi = resolved_psi(c);
  const PackSolution sol = solve_pack(c.t0, psi, P, c.solver);
  const auto dir = output_dir(c);
  write_text_file((dir / "trajectory.csv").string(), trajectory_csv(sol.trajectory));
  json report{{"t", c.t0},
              {"report", to_json(sol.report)},
              {"value", value_V(sol, P)},
              {"anchor", to_json(sol.anchor)},
              {"options", options_json(c)}};
  write_text_file((dir / "report.json").string(), report.dump(2) + "\n");
  emit(report);
  return kExitOk;
}

int cmd_residuals(RunConfig c, bool refine) {
  if (refine) {
    c.fd.delta_t /= 2.0;
    c.solver.h_step /= 2.0;
  }
  const PotentialSet P = resolved_potentials(c);
  const Parametrization psi = resolved_psi(c);
  const std::vector<double> times = c.sweep.times.empty() ? std::vector<double>{c.t0} : c.sweep.times;
  const std::vector<Eigen::VectorXd> points = sweep_points(c);

  struct Row {
    double hj = 0, hj_v = 0;
    MasterResidual master;
  };
  std::map<double, double> hj_by_time;
  for (double t : times) hj_by_time[t] = 0.0;
  const std::vector<double> distinct = [&] {
    std::vector<double> v;
    for (const auto& kv : hj_by_time) v.push_back(kv.first);
    return v;
  }();
  const auto hj = parallel_map<double>(distinct.size(), [&](std::size_t k) {
    return hj_residual(distinct[k], psi, P, c.solver, c.fd.delta_t).residual;
  });
  for (std::size_t k = 0; k < distinct.size(); ++k) hj_by_time[distinct[k]] = hj[k];

  const std::size_t count = times.size() * points.size();
  const auto rows = parallel_map<Row>(count, [&](std::size_t idx) {
    const double t = times[idx / points.size()];
    const Eigen::VectorXd& q = points[idx % points.size()];
    Row r;
    r.hj = hj_by_time.at(t);
    r.hj_v = hj_v_residual(t, q, t, psi, P, c.solver, c.fd.delta_t);
    r.master = master_residual(t, q, psi, P, c.solver, c.fd);
    return r;
  });

  std::string csv = "t";
  for (int k = 0; k < c.dim; ++k) csv += ",q" + std::to_string(k + 1);
  csv += ",hj_residual,hj_v_residual,master_residual,budget_hj,budget_master,delta_t,h_step,delta_psi,tol\n";
  const double h = c.solver.h_step;
  const double budget_hj = c.fd.delta_t * c.fd.delta_t + h * h * h * h;
  double worst_hj = 0, worst_v = 0, worst_master = 0;
  for (std::size_t idx = 0; idx < count; ++idx) {
    const Row& r = rows[idx];
    csv += format_double(times[idx / points.size()]);
    for (int k = 0; k < c.dim; ++k) csv += ',' + format_double(points[idx % points.size()][k]);
    for (double x : {r.hj, r.hj_v, r.master.residual, budget_hj, r.master.budget, c.fd.delta_t, h,
                     c.fd.delta_psi, c.solver.tol}) {
      csv += ',' + format_double(x);
    }
    csv += '\n';
    worst_hj = std::max(worst_hj, r.hj);
    worst_v = std::max(worst_v, r.hj_v);
    worst_master = std::max(worst_master, r.master.residual);
  }
  const auto dir = output_dir(c);
  const std::string name = refine ? "residuals_refined.csv" : "residuals.csv";
  write_text_file((dir / name).string(), csv);
  emit(json{{"rows", count},
            {"file", (dir / name).string()},
            {"max_hj_residual", worst_hj},
            {"max_hj_v_residual", worst_v},
            {"max_master_residual", worst_master},
            {"options", options_json(c)}});
  return kExitOk;
}

int cmd_sweep(const RunConfig& c) {
  const PotentialSet P = resolved_potentials(c);
  const Parametrization psi = resolved_psi(c);
  std::vector<double> times;
  double t = c.sweep.t_start;
  for (int k = 0; k < c.sweep.max_steps; ++k, t *= c.sweep.t_factor) times.push_back(t);

  struct Probe {
    bool converged = false;
    std::string failure;
    SolveReport report;
  };
  const auto probes = parallel_map<Probe>(times.size(), [&](std::size_t k) {
    Probe p;
    try {
      p.report = solve_pack(times[k], psi, P, c.solver).report;
      p.converged = true;
    } catch (const Error& e) {
      p.failure = to_string(e.kind());
    }
    return p;
  });

  std::string csv = "t,converged,iterations,final_residual,contraction_estimate\n";
  double horizon = 0.0;
  bool contracting = true;
  json rows = json::array();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Probe& p = probes[k];
    csv += format_double(times[k]) + ',' + (p.converged ? "1" : "0") + ',' +
           std::to_string(p.report.iterations) + ',' + format_double(p.report.final_residual) + ',' +
           format_double(p.report.contraction_estimate) + '\n';
    const bool ok = p.converged && c.solver.method == ShootingMethod::picard
                        ? p.report.contraction_estimate <= c.sweep.contraction_limit
                        : p.converged;
    if (contracting && ok) horizon = -times[k];
    contracting = contracting && ok;
    json row{{"t", times[k]}, {"converged", p.converged}};
    if (p.converged) {
      row["iterations"] = p.report.iterations;
      row["contraction_estimate"] = p.report.contraction_estimate;
    } else {
      row["error"] = p.failure;
    }
    rows.push_back(std::move(row));
  }
  const auto dir = output_dir(c);
  write_text_file((dir / "sweep.csv").string(), csv);
  emit(json{{"horizon", horizon},
            {"contraction_limit", c.sweep.contraction_limit},
            {"rows", std::move(rows)},
            {"options", options_json(c)}});
  return kExitOk;
}

struct TransportArgs {
  std::string mode = "w2";
  std::string psi1, psi2, coupling;
  std::string metric = "torus";
  std::string test_function = "cost";
  int level = 1;
  std::vector<int> levels{2, 3, 4, 5, 6};
  std::vector<double> lower;
  double side = 1.0;
  std::string out;
};

CouplingTestFunction named_test_function(const std::string& name) {
  if (name == "one") return [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 1.0; };
  if (name == "cost") {
    return [](const Eigen::VectorXd&, const Eigen::VectorXd& v) { return v.squaredNorm(); };
  }
  if (name == "cos") {
    return [](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
      return std::cos(2.0 * std::numbers::pi * x[0]);
    };
  }
  if (name == "mixed") {
    return [](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
      return std::sin(2.0 * std::numbers::pi * x[0]) * v[0];
    };
  }
  throw Error(ErrorKind::config, "--function: expected one, cost, cos or mixed");
}

CellCoupling cell_coupling_from_json(const json& j) {
  CellCoupling g;
  try {
    g.a = j.at("a").get<std::vector<int>>();
    g.b = j.at("b").get<std::vector<int>>();
    g.mass = j.at("mass").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::config, "cell coupling: expected {a: [int], b: [int], mass: [real]}");
  }
  return g;
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, path + ": invalid JSON: " + e.what());
  }
}

int cmd_transport(const TransportArgs& a) {
  if (a.psi1.empty() || a.psi2.empty()) throw Error(ErrorKind::config, "--psi1 and --psi2 are required");
  const Parametrization psi1 = read_parametrization_csv(a.psi1);
  const Parametrization psi2 = read_parametrization_csv(a.psi2);
  const int d = psi1.dim();
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(d);
  if (!a.lower.empty()) {
    if (static_cast<int>(a.lower.size()) != d) throw Error(ErrorKind::config, "--lower: wrong dimension");
    lower = Eigen::Map<const Eigen::VectorXd>(a.lower.data(), d);
  }
  json out;
  std::string csv;
  if (a.mode == "w2") {
    if (a.metric != "torus" && a.metric != "euclidean") {
      throw Error(ErrorKind::config, "--metric: expected torus or euclidean");
    }
    const auto r = wasserstein2(psi1, psi2, a.metric == "torus" ? GroundMetric::torus : GroundMetric::euclidean);
    out = json{{"w2_squared", r.squared}, {"w2", std::sqrt(r.squared)}, {"perm", r.perm.perm()}, {"metric", a.metric}};
  } else if (a.mode == "rearrange") {
    if (a.coupling.empty()) throw Error(ErrorKind::config, "--coupling is required for rearrange");
    const Coupling gamma = coupling_from_json(parse_json_file(a.coupling));
    const CubeGrid grid(d, a.level, lower, a.side);
    const GroupElement h = rearrange(psi1, psi2, gamma, grid);
    const Eigen::MatrixXi realized = realized_counts(psi1, psi2, h, gamma, grid);
    const Eigen::MatrixXi target = coupling_counts(gamma, psi1.size());
    json counts = json::array();
    for (Eigen::Index r = 0; r < realized.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index col = 0; col < realized.cols(); ++col) row.push_back(realized(r, col));
      counts.push_back(std::move(row));
    }
    out = json{{"perm", h.perm()}, {"counts", std::move(counts)}, {"counts_match", realized == target}, {"level", a.level}};
  } else if (a.mode == "check") {
    if (a.coupling.empty()) throw Error(ErrorKind::config, "--coupling is required for check");
    const CellCoupling gamma = cell_coupling_from_json(parse_json_file(a.coupling));
    const auto rows = coupling_integral_check(psi1, psi2, gamma, named_test_function(a.test_function),
                                              a.levels, lower, a.side);
    csv = convergence_csv(rows);
    json table = json::array();
    for (const auto& r : rows) {
      table.push_back(json{{"level", r.level}, {"discrete_sum", r.discrete_sum}, {"reference", r.reference},
                           {"gap", r.gap}, {"cube_diameter", r.cube_diameter}});
    }
    out = json{{"function", a.test_function}, {"rows", std::move(table)}};
  } else {
    throw Error(ErrorKind::config, "--mode: expected w2, rearrange or check");
  }
  if (!a.out.empty()) write_text_file(a.out, csv.empty() ? out.dump(2) + "\n" : csv);
  emit(out);
  return kExitOk;
}

// Quick built-in checks on cases with known answers.
int cmd_selftest() {
  json results = json::array();
  bool all = true;
  auto record = [&](const std::string& name, bool ok, double value) {
    results.push_back(json{{"check", name}, {"pass", ok}, {"value", value}});
    all = all && ok;
  };

  {
    Eigen::MatrixXd m(1, 3);
    m << 0.1, 0.4, 0.8;
    const Parametrization psi(m);
    const PotentialSet P = PotentialSet::zero(1);
    const PackSolution sol = solve_pack(-0.1, psi, P, SolveOptions{});
    record("free rest keeps psi", sol.anchor == psi && sol.report.iterations == 1, sol.report.final_residual);
  }
  {
    const double two_pi = 2.0 * std::numbers::pi;
    const TrigSeries u0(1, {TrigTerm{Eigen::VectorXi::Constant(1, 1), -1.0 / two_pi, 0.0}}, false);
    const PotentialSet P(TrigSeries::zero(1), u0, TrigSeries::zero(1));
    const PackState state = sigma_flow(-0.1, Parametrization(Eigen::MatrixXd::Constant(1, 1, 0.25)), P, 1e-3);
    const double gap = std::abs(state.position.matrix()(0, 0) - 0.35) + std::abs(state.velocity.matrix()(0, 0) + 1.0);
    record("straight line from 0.25", gap <= 1e-12, gap);
  }
  {
    Eigen::MatrixXd mu(1, 2), nu(1, 2);
    mu << 0.0, 0.3;
    nu << 0.1, 0.9;
    const double w = wasserstein2(Parametrization(mu), Parametrization(nu)).squared;
    record("two-point transport cost", std::abs(w - 0.025) <= 1e-15, w);
  }
  emit(json{{"pass", all}, {"checks", std::move(results)}});
  return all ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle solver for the short-time master equation of a potential mean field game"};
  app.require_subcommand(1);

  Overrides solve_o, residuals_o, sweep_o;
  bool refine = false;
  auto* solve = app.add_subcommand("solve", "solve the pack problem at t0 and write the trajectory");
  add_run_options(solve, solve_o);
  auto* residuals = app.add_subcommand("residuals", "HJ, agent HJ and master-equation residuals over the sweep grid");
  add_run_options(residuals, residuals_o);
  residuals->add_flag("--refine", refine, "halve delta_t and h_step");
  auto* sweep = app.add_subcommand("sweep", "contraction sweep over the horizon |t|");
  add_run_options(sweep, sweep_o);

  TransportArgs targs;
  auto* transport = app.add_subcommand("transport", "Wasserstein-2, rearrangement, or coupling convergence table");
  transport->add_option("--mode", targs.mode, "w2, rearrange or check");
  transport->add_option("--psi1", targs.psi1, "first parametrization (CSV)");
  transport->add_option("--psi2", targs.psi2, "second parametrization (CSV)");
  transport->add_option("--coupling", targs.coupling, "coupling JSON");
  transport->add_option("--metric", targs.metric, "torus or euclidean");
  transport->add_option("--level", targs.level, "dyadic level of the cube grid");
  transport->add_option("--levels", targs.levels, "levels for the convergence table");
  transport->add_option("--function", targs.test_function, "one, cost, cos or mixed");
  transport->add_option("--lower", targs.lower, "lower corner of the cube box");
  transport->add_option("--side", targs.side, "side of the cube box");
  transport->add_option("--out", targs.out, "also write the result to this file");

  auto* selftest = app.add_subcommand("selftest", "built-in checks with known answers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return report_error("config_error", e.what(), kExitConfig);
  }

  try {
    if (solve->parsed()) return cmd_solve(build_config(solve_o));
    if (residuals->parsed()) return cmd_residuals(build_config(residuals_o), refine);
    if (sweep->parsed()) return cmd_sweep(build_config(sweep_o));
    if (transport->parsed()) return cmd_transport(targs);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.kind())), e.what(), exit_code_for(e.kind()));
  } catch (const std::exception& e) {
    return report_error("internal_error", e.what(), kExitSolver);
  }
  return kExitConfig;
}
