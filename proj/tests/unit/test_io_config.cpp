#include <doctest.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>

#include "mfg/error.hpp"
#include "mfg/instances.hpp"
#include "mfg/io.hpp"
#include "mfg/parallel.hpp"
#include "mfg/run_config.hpp"
#include "support.hpp"

using namespace mfg;
using nlohmann::json;

namespace {

std::string config_error(const json& doc) {
  try {
    parse_run_config(doc);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("doubles print in shortest round-trip form") {
  InstanceRng rng(121);
  for (int k = 0; k < 200; ++k) {
    const double x = rng.uniform(-1, 1) * std::pow(10.0, rng.below(40) - 20);
    const std::string s = format_double(x);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-3.0) == "-3");
}

TEST_CASE("parametrization CSV round trip") {
  InstanceRng rng(122);
  const Parametrization psi = random_parametrization(3, 5, rng);
  const std::string csv = parametrization_csv(psi);
  CHECK(csv.rfind("x1,x2,x3\n", 0) == 0);
  CHECK(parse_parametrization_csv(csv, "mem") == psi);
  CHECK(parse_parametrization_csv("# cells\n0.5\n\n0.25\n", "mem") == testing::cells_1d({0.5, 0.25}));
  CHECK_THROWS_AS(parse_parametrization_csv("0.1,0.2\n0.3\n", "mem"), Error);
  CHECK_THROWS_AS(parse_parametrization_csv("0.1\nabc\n", "mem"), Error);
  CHECK_THROWS_AS(parse_parametrization_csv("", "mem"), Error);
}

TEST_CASE("trajectory CSV layout") {
  const PackTrajectory traj = integrate_pack(-0.002, testing::cells_1d({0.1, 0.2}), PotentialSet::zero(1), 1e-3);
  const std::string csv = trajectory_csv(traj);
  CHECK(csv.rfind("time,particle,x1,v1\n-0.002,0,0.1,0\n-0.002,1,0.2,0\n-0.001,0,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2);
}

TEST_CASE("coupling JSON round trip") {
  const Coupling g{{0, 3}, {1, 2}, Eigen::MatrixXd{{0.25, 0.25}, {0.5, 0.0}}};
  const Coupling back = coupling_from_json(to_json(g));
  CHECK(back.cubes_a == g.cubes_a);
  CHECK(back.cubes_b == g.cubes_b);
  CHECK(back.mass == g.mass);
  CHECK_THROWS_AS(coupling_from_json(json{{"cubes_a", {0}}, {"cubes_b", {0}}}), Error);
  CHECK_THROWS_AS(coupling_from_json(json{{"cubes_a", {0}}, {"cubes_b", {0}}, {"mass", {{0.5, 0.5}}}}), Error);
}

TEST_CASE("convergence table CSV") {
  const std::string csv = convergence_csv({ConvergenceRow{2, 0.5, 0.25, 0.25, 0.5}});
  CHECK(csv == "level,discrete_sum,reference,gap,cube_diameter\n2,0.5,0.25,0.25,0.5\n");
}

TEST_CASE("run config defaults and parsing") {
  const RunConfig c = parse_run_config(json::parse(R"({
    "dim": 1, "n_particles": 3, "t0": -0.1, "seed": 4,
    "potentials": {"phi": [{"k": [1], "a": 0.1}], "u0": [{"k": 2, "a": 0.2, "b": -0.1}]},
    "integrator": {"h_step": 0.002},
    "solver": {"tol": 1e-12, "max_iter": 50, "method": "newton-fd"},
    "fd": {"delta_t": 1e-3},
    "psi": [0.1, 0.5, 0.9],
    "sweep": {"times": [-0.1, -0.05], "q_grid": 8}
  })"));
  CHECK(c.n_particles == 3);
  CHECK(c.solver.h_step == 0.002);
  CHECK(c.solver.method == ShootingMethod::newton_fd);
  CHECK(c.fd.delta_t == 1e-3);
  CHECK(c.fd.delta_q == FdSteps{}.delta_q);
  REQUIRE(c.potentials.has_value());
  CHECK(c.potentials->u0().terms()[0].b == -0.1);
  CHECK(c.potentials->u1().is_zero());
  CHECK(sweep_points(c).size() == 8);
  CHECK(sweep_points(c)[3][0] == 3.0 / 8.0);
  CHECK(resolved_psi(c) == testing::cells_1d({0.1, 0.5, 0.9}));
}

TEST_CASE("config errors name the offending field") {
  CHECK(config_error(json{{"t0", 0.5}}).rfind("t0:", 0) == 0);
  CHECK(config_error(json{{"integrator", {{"h_step", 0.0}}}}).rfind("integrator.h_step:", 0) == 0);
  CHECK(config_error(json{{"solver", {{"tol", -1.0}}}}).rfind("solver.tol:", 0) == 0);
  CHECK(config_error(json{{"solver", {{"method", "bisection"}}}}).rfind("solver.method:", 0) == 0);
  CHECK(config_error(json{{"solver", {{"tolerance", 1.0}}}}).rfind("solver.tolerance: unknown key", 0) == 0);
  CHECK(config_error(json{{"potentials", {{"phi", {{{"k", {1}}, {"a", 0.1}, {"b", 0.2}}}}}}})
            .rfind("potentials.phi[0].b:", 0) == 0);
  CHECK(config_error(json{{"potentials", {{"u1", {{{"k", {1, 2}}, {"a", 0.1}}}}}}}).rfind("potentials.u1[0].k:", 0) == 0);
  CHECK(config_error(json{{"dim", 2}, {"psi", {{0.1, 0.2}, {0.3}}}}).rfind("psi:", 0) == 0);
  CHECK(config_error(json{{"n_particles", 0}}).rfind("n_particles:", 0) == 0);
  CHECK(config_error(json{{"seed", 1.5}}).rfind("seed:", 0) == 0);
}

TEST_CASE("config file with a relative parametrization file") {
  const auto dir = std::filesystem::temp_directory_path() / "mfg_config_test";
  std::filesystem::create_directories(dir);
  write_text_file((dir / "cells.csv").string(), "x1\n0.25\n0.75\n");
  write_text_file((dir / "run.json").string(), R"({"psi_file": "cells.csv", "t0": -0.01})");
  const RunConfig c = load_run_config((dir / "run.json").string());
  CHECK(c.n_particles == 2);
  CHECK(resolved_psi(c) == testing::cells_1d({0.25, 0.75}));
  write_text_file((dir / "broken.json").string(), "{\"t0\": ");
  CHECK_THROWS_AS(load_run_config((dir / "broken.json").string()), Error);
  CHECK_THROWS_AS(load_run_config((dir / "missing.json").string()), Error);
}

TEST_CASE("seeded instances are reproducible") {
  RunConfig c;
  c.seed = 17;
  c.dim = 2;
  c.n_particles = 5;
  CHECK(resolved_psi(c) == resolved_psi(c));
  const PotentialSet a = resolved_potentials(c);
  const PotentialSet b = resolved_potentials(c);
  CHECK(a.u0().terms().size() == 12);
  for (std::size_t k = 0; k < a.u0().terms().size(); ++k) CHECK(a.u0().terms()[k].b == b.u0().terms()[k].b);
  RunConfig other = c;
  other.seed = 18;
  CHECK_FALSE(resolved_psi(other) == resolved_psi(c));

  InstanceRng rng(0);
  for (int k = 0; k < 1000; ++k) {
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
}

TEST_CASE("parallel map keeps index order and rethrows") {
  const auto squares = parallel_map<int>(50, [](std::size_t i) { return static_cast<int>(i * i); });
  for (int i = 0; i < 50; ++i) CHECK(squares[i] == i * i);
  CHECK_THROWS_AS(parallel_map<int>(10,
                                    [](std::size_t i) -> int {
                                      if (i == 7) throw Error(ErrorKind::config, "seven");
                                      return 0;
                                    }),
                  Error);
  CHECK(worker_count() >= 1);
}
