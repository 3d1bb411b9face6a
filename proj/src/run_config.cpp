#include "mfg/run_config.hpp"

#include <cmath>
#include <filesystem>

#include "mfg/error.hpp"
#include "mfg/instances.hpp"
#include "mfg/io.hpp"

namespace mfg {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::config, path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double get_real(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(join(path, key), "must be finite");
  return x;
}

long long get_int(const json& obj, const std::string& path, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  return v.get<long long>();
}

Eigen::VectorXd point_from_json(const json& j, int dim, const std::string& where) {
  Eigen::VectorXd p(dim);
  if (j.is_number() && dim == 1) {
    p[0] = j.get<double>();
    return p;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    fail(where, "expected " + std::to_string(dim) + " coordinates");
  }
  for (int k = 0; k < dim; ++k) {
    if (!j[k].is_number()) fail(where + "[" + std::to_string(k) + "]", "expected a number");
    p[k] = j[k].get<double>();
  }
  return p;
}

}  // namespace

TrigSeries series_from_json(const json& j, int dim, bool even, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of {k, a, b} terms");
  std::vector<TrigTerm> terms;
  for (std::size_t t = 0; t < j.size(); ++t) {
    const std::string at = where + "[" + std::to_string(t) + "]";
    const json& term = j[t];
    check_keys(term, at, {"k", "a", "b"});
    if (!term.contains("k")) fail(at + ".k", "missing");
    TrigTerm out;
    const json& k = term.at("k");
    if (k.is_number_integer() && dim == 1) {
      out.k = Eigen::VectorXi::Constant(1, k.get<int>());
    } else {
      if (!k.is_array() || static_cast<int>(k.size()) != dim) {
        fail(at + ".k", "expected " + std::to_string(dim) + " integers");
      }
      out.k.resize(dim);
      for (int i = 0; i < dim; ++i) {
        if (!k[i].is_number_integer()) fail(at + ".k[" + std::to_string(i) + "]", "expected an integer");
        out.k[i] = k[i].get<int>();
      }
    }
    out.a = get_real(term, at, "a", 0.0);
    out.b = get_real(term, at, "b", 0.0);
    if (even && out.b != 0.0) fail(at + ".b", "must be 0 for an even series");
    terms.push_back(std::move(out));
  }
  try {
    return TrigSeries(dim, std::move(terms), even);
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

json to_json(const TrigSeries& series) {
  json out = json::array();
  for (const auto& term : series.terms()) {
    out.push_back(json{{"k", std::vector<int>(term.k.data(), term.k.data() + term.k.size())},
                       {"a", term.a},
                       {"b", term.b}});
  }
  return out;
}

RunConfig parse_run_config(const json& doc, const std::string& base_dir) {
  check_keys(doc, "", {"dim", "n_particles", "t0", "potentials", "integrator", "solver", "fd",
                       "seed", "output", "psi", "psi_file", "sweep"});
  RunConfig c;
  c.base_dir = base_dir;
  c.dim = static_cast<int>(get_int(doc, "", "dim", c.dim));
  if (c.dim < 1) fail("dim", "must be >= 1");
  c.n_particles = static_cast<int>(get_int(doc, "", "n_particles", c.n_particles));
  if (c.n_particles < 1) fail("n_particles", "must be >= 1");
  c.t0 = get_real(doc, "", "t0", c.t0);
  const long long seed = get_int(doc, "", "seed", 0);
  if (seed < 0) fail("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) fail("output", "expected a string");
    c.output = doc.at("output").get<std::string>();
  }

  if (doc.contains("potentials")) {
    const json& p = doc.at("potentials");
    if (p.is_string() && p.get<std::string>() == "random") {
      // drawn from the seed
    } else {
      check_keys(p, "potentials", {"phi", "u0", "u1"});
      const auto series = [&](const char* key, bool even) {
        return p.contains(key) ? series_from_json(p.at(key), c.dim, even, std::string("potentials.") + key)
                               : TrigSeries::zero(c.dim, even);
      };
      c.potentials = PotentialSet(series("phi", true), series("u0", false), series("u1", true));
    }
  }

  if (doc.contains("integrator")) {
    const json& in = doc.at("integrator");
    check_keys(in, "integrator", {"h_step"});
    c.solver.h_step = get_real(in, "integrator", "h_step", c.solver.h_step);
  }
  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    check_keys(s, "solver", {"tol", "max_iter", "method"});
    c.solver.tol = get_real(s, "solver", "tol", c.solver.tol);
    c.solver.max_iter = static_cast<int>(get_int(s, "solver", "max_iter", c.solver.max_iter));
    if (s.contains("method")) {
      if (!s.at("method").is_string()) fail("solver.method", "expected a string");
      try {
        c.solver.method = shooting_method_from_string(s.at("method").get<std::string>());
      } catch (const Error& e) {
        fail("solver.method", e.what());
      }
    }
  }
  if (doc.contains("fd")) {
    const json& f = doc.at("fd");
    check_keys(f, "fd", {"delta_t", "delta_q", "delta_psi"});
    c.fd.delta_t = get_real(f, "fd", "delta_t", c.fd.delta_t);
    c.fd.delta_q = get_real(f, "fd", "delta_q", c.fd.delta_q);
    c.fd.delta_psi = get_real(f, "fd", "delta_psi", c.fd.delta_psi);
  }

  if (doc.contains("psi") && doc.contains("psi_file")) fail("psi_file", "conflicts with psi");
  if (doc.contains("psi")) {
    try {
      c.psi = parametrization_from_json(doc.at("psi"), c.dim, "psi");
    } catch (const Error& e) {
      fail("psi", e.what());
    }
  } else if (doc.contains("psi_file")) {
    if (!doc.at("psi_file").is_string()) fail("psi_file", "expected a string");
    std::filesystem::path file = doc.at("psi_file").get<std::string>();
    if (file.is_relative()) file = std::filesystem::path(base_dir) / file;
    c.psi = read_parametrization_csv(file.string());
  }
  if (c.psi) c.n_particles = c.psi->size();

  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    check_keys(s, "sweep", {"times", "points", "q_grid", "t_start", "t_factor", "max_steps",
                            "contraction_limit"});
    if (s.contains("times")) {
      const json& ts = s.at("times");
      if (!ts.is_array()) fail("sweep.times", "expected an array");
      for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!ts[i].is_number()) fail("sweep.times[" + std::to_string(i) + "]", "expected a number");
        c.sweep.times.push_back(ts[i].get<double>());
      }
    }
    if (s.contains("points")) {
      const json& ps = s.at("points");
      if (!ps.is_array()) fail("sweep.points", "expected an array");
      for (std::size_t i = 0; i < ps.size(); ++i) {
        c.sweep.points.push_back(point_from_json(ps[i], c.dim, "sweep.points[" + std::to_string(i) + "]"));
      }
    }
    c.sweep.q_grid = static_cast<int>(get_int(s, "sweep", "q_grid", 0));
    c.sweep.t_start = get_real(s, "sweep", "t_start", c.sweep.t_start);
    c.sweep.t_factor = get_real(s, "sweep", "t_factor", c.sweep.t_factor);
    c.sweep.max_steps = static_cast<int>(get_int(s, "sweep", "max_steps", c.sweep.max_steps));
    c.sweep.contraction_limit = get_real(s, "sweep", "contraction_limit", c.sweep.contraction_limit);
  }

  validate(c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, path + ": invalid JSON: " + e.what());
  }
  return parse_run_config(doc, std::filesystem::path(path).parent_path().string());
}

void validate(const RunConfig& c) {
  if (c.dim < 1) fail("dim", "must be >= 1");
  if (c.n_particles < 1) fail("n_particles", "must be >= 1");
  if (!(c.t0 <= 0.0) || !std::isfinite(c.t0)) fail("t0", "must be <= 0");
  if (!(c.solver.h_step > 0.0)) fail("integrator.h_step", "must be > 0");
  if (!(c.solver.tol > 0.0)) fail("solver.tol", "must be > 0");
  if (c.solver.max_iter < 1) fail("solver.max_iter", "must be >= 1");
  if (!(c.fd.delta_t > 0.0)) fail("fd.delta_t", "must be > 0");
  if (!(c.fd.delta_q > 0.0)) fail("fd.delta_q", "must be > 0");
  if (!(c.fd.delta_psi > 0.0)) fail("fd.delta_psi", "must be > 0");
  if (c.potentials && c.potentials->dim() != c.dim) fail("potentials", "dimension differs from dim");
  if (c.psi && c.psi->dim() != c.dim) fail("psi", "dimension differs from dim");
  if (c.psi && c.psi->size() != c.n_particles) fail("n_particles", "differs from the number of psi cells");
  if (c.sweep.q_grid < 0) fail("sweep.q_grid", "must be >= 0");
  for (std::size_t i = 0; i < c.sweep.times.size(); ++i) {
    if (!(c.sweep.times[i] <= 0.0)) fail("sweep.times[" + std::to_string(i) + "]", "must be <= 0");
  }
  if (!(c.sweep.t_start < 0.0)) fail("sweep.t_start", "must be < 0");
  if (!(c.sweep.t_factor > 1.0)) fail("sweep.t_factor", "must be > 1");
  if (c.sweep.max_steps < 1) fail("sweep.max_steps", "must be >= 1");
}

PotentialSet resolved_potentials(const RunConfig& c) {
  if (c.potentials) return *c.potentials;
  InstanceRng rng(c.seed);
  return random_potentials(c.dim, rng);
}

Parametrization resolved_psi(const RunConfig& c) {
  if (c.psi) return *c.psi;
  InstanceRng rng(c.seed);
  random_potentials(c.dim, rng);
  return random_parametrization(c.dim, c.n_particles, rng);
}

std::vector<Eigen::VectorXd> sweep_points(const RunConfig& c) {
  std::vector<Eigen::VectorXd> points = c.sweep.points;
  if (c.sweep.q_grid > 0) {
    const int m = c.sweep.q_grid;
    Eigen::VectorXi idx = Eigen::VectorXi::Zero(c.dim);
    while (true) {
      points.push_back(idx.cast<double>() / static_cast<double>(m));
      int k = c.dim - 1;
      while (k >= 0 && idx[k] == m - 1) idx[k--] = 0;
      if (k < 0) break;
      ++idx[k];
    }
  }
  if (points.empty()) points.push_back(Eigen::VectorXd::Zero(c.dim));
  return points;
}

json to_json(const RunConfig& c) {
  json out{{"dim", c.dim},
           {"n_particles", c.n_particles},
           {"t0", c.t0},
           {"integrator", {{"h_step", c.solver.h_step}}},
           {"solver", {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}, {"method", to_string(c.solver.method)}}},
           {"fd", {{"delta_t", c.fd.delta_t}, {"delta_q", c.fd.delta_q}, {"delta_psi", c.fd.delta_psi}}},
           {"seed", c.seed},
           {"output", c.output}};
  const PotentialSet P = resolved_potentials(c);
  out["potentials"] = {{"phi", to_json(P.phi())}, {"u0", to_json(P.u0())}, {"u1", to_json(P.u1())}};
  out["psi"] = to_json(resolved_psi(c));
  return out;
}

}  // namespace mfg
