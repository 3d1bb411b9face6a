#include <string>

#include <pybind11/eigen.h>
#include <pybind11/gil_safe_call_once.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mfg/error.hpp"
#include "mfg/instances.hpp"
#include "mfg/particle.hpp"
#include "mfg/transport.hpp"

namespace py = pybind11;
using namespace mfg;

namespace {

// Python sees configurations as (N, d) arrays, one row per cell.
using Rows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Parametrization to_psi(const Rows& rows) { return Parametrization(Eigen::MatrixXd(rows.transpose())); }
Rows rows_of(const Eigen::MatrixXd& cols) { return cols.transpose(); }

TrigSeries series_from_terms(int dim, const std::vector<std::tuple<std::vector<int>, double, double>>& terms,
                             bool even) {
  std::vector<TrigTerm> out;
  for (const auto& [k, a, b] : terms) {
    out.push_back(TrigTerm{Eigen::Map<const Eigen::VectorXi>(k.data(), static_cast<Eigen::Index>(k.size())), a, b});
  }
  return TrigSeries(dim, std::move(out), even);
}

py::dict report_dict(const SolveReport& r) {
  py::dict d;
  d["iterations"] = r.iterations;
  d["final_residual"] = r.final_residual;
  d["method"] = to_string(r.method);
  d["contraction_estimate"] = r.contraction_estimate;
  d["converged"] = r.converged;
  d["residual_history"] = r.residual_history;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Particle solver for the short-time master equation of a potential mean field game";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::object(py::reinterpret_steal<py::object>(
                  PyErr_NewException("mfg_master._core.MfgError", PyExc_RuntimeError, nullptr))); });
  m.attr("MfgError") = error_type.get_stored();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = error_type.get_stored();
      py::object instance = type(e.what());
      instance.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(type.ptr(), instance.ptr());
    }
  });

  py::class_<TrigSeries>(m, "TrigSeries")
      .def(py::init(&series_from_terms), py::arg("dim"), py::arg("terms"), py::arg("even") = false,
           "terms: list of (k, a, b), each contributing a cos(2 pi k.x) + b sin(2 pi k.x)")
      .def_static("zero", &TrigSeries::zero, py::arg("dim"), py::arg("even") = true)
      .def_property_readonly("dim", &TrigSeries::dim)
      .def("eval", &TrigSeries::eval)
      .def("grad", &TrigSeries::grad)
      .def("hess", &TrigSeries::hess);

  py::class_<PotentialSet>(m, "PotentialSet")
      .def(py::init<TrigSeries, TrigSeries, TrigSeries>(), py::arg("phi"), py::arg("u0"), py::arg("u1"))
      .def_static("zero", &PotentialSet::zero, py::arg("dim"))
      .def_property_readonly("dim", &PotentialSet::dim);

  py::class_<SolveOptions>(m, "SolveOptions")
      .def(py::init<>())
      .def_readwrite("h_step", &SolveOptions::h_step)
      .def_readwrite("tol", &SolveOptions::tol)
      .def_readwrite("max_iter", &SolveOptions::max_iter)
      .def_property(
          "method", [](const SolveOptions& o) { return to_string(o.method); },
          [](SolveOptions& o, const std::string& name) { o.method = shooting_method_from_string(name); });

  py::class_<FdSteps>(m, "FdSteps")
      .def(py::init<>())
      .def_readwrite("delta_t", &FdSteps::delta_t)
      .def_readwrite("delta_q", &FdSteps::delta_q)
      .def_readwrite("delta_psi", &FdSteps::delta_psi);

  m.def(
      "random_instance",
      [](int dim, int n, std::uint64_t seed) {
        InstanceRng rng(seed);
        PotentialSet P = random_potentials(dim, rng);
        const Parametrization psi = random_parametrization(dim, n, rng);
        return py::make_tuple(P, rows_of(psi.matrix()));
      },
      py::arg("dim"), py::arg("n"), py::arg("seed"), "Seeded random potentials and configuration.");

  m.def(
      "solve_pack",
      [](double t, const Rows& psi, const PotentialSet& P, const SolveOptions& opts) {
        const PackSolution sol = solve_pack(t, to_psi(psi), P, opts);
        const auto& traj = sol.trajectory;
        py::list positions, velocities;
        for (std::size_t k = 0; k < traj.node_count(); ++k) {
          positions.append(rows_of(traj.position(k).matrix()));
          velocities.append(rows_of(traj.velocity(k).matrix()));
        }
        py::dict out;
        out["anchor"] = rows_of(sol.anchor.matrix());
        out["times"] = traj.times();
        out["positions"] = positions;
        out["velocities"] = velocities;
        out["value"] = value_V(sol, P);
        out["report"] = report_dict(sol.report);
        return out;
      },
      py::arg("t"), py::arg("psi"), py::arg("P"), py::arg("opts") = SolveOptions{});

  m.def(
      "value_V", [](double t, const Rows& psi, const PotentialSet& P, const SolveOptions& opts) {
        return value_V(t, to_psi(psi), P, opts);
      },
      py::arg("t"), py::arg("psi"), py::arg("P"), py::arg("opts") = SolveOptions{});
  m.def(
      "grad_V", [](double t, const Rows& psi, const PotentialSet& P, const SolveOptions& opts) {
        return rows_of(grad_V(t, to_psi(psi), P, opts).matrix());
      },
      py::arg("t"), py::arg("psi"), py::arg("P"), py::arg("opts") = SolveOptions{});
  m.def(
      "hj_residual",
      [](double t, const Rows& psi, const PotentialSet& P, const SolveOptions& opts, double delta_t) {
        return hj_residual(t, to_psi(psi), P, opts, delta_t).residual;
      },
      py::arg("t"), py::arg("psi"), py::arg("P"), py::arg("opts") = SolveOptions{}, py::arg("delta_t") = 1e-4);
  m.def(
      "value_u",
      [](double t, const Eigen::VectorXd& q, const Rows& psi, const PotentialSet& P, const SolveOptions& opts) {
        return value_u(t, q, to_psi(psi), P, opts);
      },
      py::arg("t"), py::arg("q"), py::arg("psi"), py::arg("P"), py::arg("opts") = SolveOptions{});
  m.def(
      "grad_u",
      [](double t, const Eigen::VectorXd& q, const Rows& psi, const PotentialSet& P, const SolveOptions& opts) {
        return grad_u(t, q, to_psi(psi), P, opts);
      },
      py::arg("t"), py::arg("q"), py::arg("psi"), py::arg("P"), py::arg("opts") = SolveOptions{});
  m.def(
      "master_residual",
      [](double t, const Eigen::VectorXd& q, const Rows& psi, const PotentialSet& P, const SolveOptions& opts,
         const FdSteps& fd) {
        const MasterResidual r = master_residual(t, q, to_psi(psi), P, opts, fd);
        py::dict d;
        d["residual"] = r.residual;
        d["budget"] = r.budget;
        d["dt_u"] = r.dt_u;
        d["half_grad_sq"] = r.half_grad_sq;
        d["potential"] = r.potential;
        d["coupling"] = r.coupling;
        return d;
      },
      py::arg("t"), py::arg("q"), py::arg("psi"), py::arg("P"), py::arg("opts") = SolveOptions{},
      py::arg("fd") = FdSteps{});

  m.def(
      "wasserstein2",
      [](const Rows& mu, const Rows& nu, const std::string& metric) {
        GroundMetric g = GroundMetric::torus;
        if (metric == "euclidean") {
          g = GroundMetric::euclidean;
        } else if (metric != "torus") {
          throw Error(ErrorKind::config, "metric must be torus or euclidean, got " + metric);
        }
        const Wasserstein2Result r = wasserstein2(to_psi(mu), to_psi(nu), g);
        return py::make_tuple(r.squared, r.perm.perm());
      },
      py::arg("mu"), py::arg("nu"), py::arg("metric") = "torus",
      "Returns (W2 squared, perm) with mu[perm[i]] matched to nu[i].");
}
