// Thin bindings. Instances and specs cross the boundary as JSON text; the
// Python package turns them into dicts.

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pzos/errors.hpp"
#include "pzos/estimators.hpp"
#include "pzos/goldstein1d.hpp"
#include "pzos/harness.hpp"
#include "pzos/io.hpp"
#include "pzos/optimizer.hpp"
#include "pzos/routing.hpp"
#include "pzos/security.hpp"

namespace py = pybind11;
using namespace pzos;
using nlohmann::json;

namespace {

goldstein::Example example_by_name(const std::string& name) {
  if (name == "abs_plus_quadratic") return goldstein::example_abs_plus_quadratic();
  if (name == "abs_minus_quadratic") return goldstein::example_abs_minus_quadratic();
  throw InvalidArgument("unknown example '" + name + "'");
}

py::dict trajectory_dict(const Trajectory& tr) {
  py::dict d;
  d["algorithm"] = std::string(to_string(tr.config.algorithm));
  d["q"] = tr.config.batch_q;
  d["objective"] = tr.objective_values;
  d["oracle_calls"] = tr.oracle_calls_cumulative;
  d["instrumentation_calls"] = tr.instrumentation_calls_cumulative;
  d["grad_norm"] = tr.gradient_norms;
  d["step_size"] = tr.step_sizes;
  d["projected"] = std::vector<bool>(tr.projected.begin(), tr.projected.end());
  d["x_final"] = tr.iterates.back();
  return d;
}

Problem problem_from_text(const std::string& text, double follower_tol) {
  const auto inst = io::instance_from_json(json::parse(text));
  if (const auto* r = std::get_if<routing::RoutingInstance>(&inst)) {
    routing::WardropOptions opts;
    opts.tol = follower_tol;
    return routing::make_routing_problem(std::make_shared<routing::RoutingInstance>(*r), opts);
  }
  security::BestResponseOptions opts;
  opts.tol = follower_tol;
  return security::make_security_problem(
      std::make_shared<security::SecurityInstance>(std::get<security::SecurityInstance>(inst)), opts);
}

RunConfig make_config(const std::string& algorithm, int iterations, double mu, double step,
                      const std::string& step_kind, int q, bool project, std::uint64_t seed, Sense sense,
                      const Vec& x0) {
  RunConfig cfg;
  cfg.algorithm = parse_algorithm(algorithm);
  cfg.batch_q = q;
  cfg.iterations = iterations;
  cfg.mu = mu;
  if (step_kind == "constant") {
    cfg.step = StepSchedule::constant(step);
  } else if (step_kind == "inverse_sqrt") {
    cfg.step = StepSchedule::inverse_sqrt(step);
  } else {
    throw InvalidArgument("step_kind must be 'constant' or 'inverse_sqrt'");
  }
  cfg.project_nonnegative = project;
  cfg.seed = seed;
  cfg.sense = sense;
  cfg.x0 = x0;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gradient-free bilevel optimization toolkit (compiled core)";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  m.def("clarke_interval", [](const std::string& example) {
    const auto ex = example_by_name(example);
    const auto iv = goldstein::clarke_interval(ex.composite, ex.x);
    return std::pair(iv.lo, iv.hi);
  });
  m.def(
      "goldstein_table",
      [](const std::string& example, std::vector<double> deltas) {
        if (deltas.empty()) deltas = goldstein::default_delta_grid();
        std::vector<py::dict> rows;
        for (const auto& r : goldstein::stationarity_table(example_by_name(example), deltas)) {
          py::dict d;
          d["delta"] = r.delta;
          d["full"] = std::pair(r.full.lo, r.full.hi);
          d["full_gap"] = r.full_gap;
          d["partial"] = std::pair(r.partial.lo, r.partial.hi);
          d["partial_gap"] = r.partial_gap;
          rows.push_back(d);
        }
        return rows;
      },
      py::arg("example"), py::arg("deltas") = std::vector<double>{});

  m.def(
      "generate_instance",
      [](const std::string& kind, std::uint64_t seed, std::uint64_t index, Index targets) {
        RngStream rng(seed, harness::instance_stream_id(seed, index));
        if (kind == "routing") return io::to_json(routing::generate_routing_instance(rng)).dump();
        if (kind == "security") return io::to_json(security::generate_security_instance(rng, targets)).dump();
        throw InvalidArgument("kind must be 'routing' or 'security'");
      },
      py::arg("kind"), py::arg("seed") = 1, py::arg("index") = 0, py::arg("targets") = 10);

  m.def(
      "wardrop_equilibrium",
      [](const std::string& instance, const Vec& tolls, double tol) {
        routing::WardropOptions opts;
        opts.tol = tol;
        const auto flow = routing::wardrop_equilibrium(io::routing_from_json(json::parse(instance)), tolls, opts);
        py::dict d;
        d["aggregate"] = flow.aggregate;
        d["per_class"] = flow.per_class;
        d["duality_gap"] = flow.duality_gap;
        d["iterations"] = flow.iterations;
        return d;
      },
      py::arg("instance"), py::arg("tolls"), py::arg("tol") = 1e-6);

  m.def(
      "attacker_best_response",
      [](const std::string& instance, const Vec& defense, double tol) {
        security::BestResponseOptions opts;
        opts.tol = tol;
        const auto r = security::attacker_best_response(io::security_from_json(json::parse(instance)), defense, opts);
        py::dict d;
        d["y"] = r.y;
        d["dual"] = r.dual_lambda;
        d["kkt_residual"] = r.kkt_residual;
        return d;
      },
      py::arg("instance"), py::arg("defense"), py::arg("tol") = 1e-8);

  m.def(
      "run",
      [](const std::string& instance, const std::string& algorithm, int iterations, double mu, double step,
         const std::string& step_kind, int q, bool project, std::uint64_t seed, double follower_tol) {
        const Problem p = problem_from_text(instance, follower_tol);
        const auto cfg = make_config(algorithm, iterations, mu, step, step_kind, q, project, seed,
                                     p.leader->sense(), p.x0);
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = run(p, cfg);
        }
        return trajectory_dict(tr);
      },
      py::arg("instance"), py::arg("algorithm") = "pzos", py::arg("iterations") = 150, py::arg("mu") = 0.5,
      py::arg("step") = 0.01, py::arg("step_kind") = "constant", py::arg("q") = 1, py::arg("project") = false,
      py::arg("seed") = 1, py::arg("follower_tol") = 1e-6);

  // Python callables as leader and follower. Runs with the GIL held.
  m.def(
      "run_callables",
      [](std::function<double(const Vec&, const Vec&)> value, std::function<Vec(const Vec&, const Vec&)> grad_x,
         std::function<Vec(const Vec&, const Vec&)> grad_y, std::function<Vec(const Vec&)> response, Index dy,
         const Vec& x0, const std::string& algorithm, int iterations, double mu, double step, int q,
         std::uint64_t seed) {
        FunctionObjective leader(value, grad_x, grad_y);
        FunctionOracle oracle(x0.size(), dy, response);
        const auto cfg = make_config(algorithm, iterations, mu, step, "constant", q, false, seed, Sense::minimize, x0);
        RngStream rng(cfg.seed, cfg.stream_id);
        return trajectory_dict(run(leader, oracle, cfg, rng));
      },
      py::arg("value"), py::arg("grad_x"), py::arg("grad_y"), py::arg("response"), py::arg("dy"), py::arg("x0"),
      py::arg("algorithm") = "pzos", py::arg("iterations") = 100, py::arg("mu") = 0.1, py::arg("step") = 0.01,
      py::arg("q") = 1, py::arg("seed") = 1);

  m.def(
      "variance_sweep",
      [](std::vector<Index> dims, std::int64_t samples, std::uint64_t seed, double mu) {
        std::vector<harness::VarianceRow> rows;
        {
          py::gil_scoped_release release;
          rows = harness::variance_sweep(dims, samples, seed, mu);
        }
        std::vector<py::dict> out;
        for (const auto& r : rows) {
          py::dict d;
          d["dx"] = r.dx;
          d["estimator"] = std::string(to_string(r.estimator));
          d["mean_sq_norm"] = r.mean_sq_norm;
          d["stderr"] = r.standard_error;
          d["n_samples"] = r.n_samples;
          out.push_back(d);
        }
        return out;
      },
      py::arg("dims"), py::arg("samples") = 3500, py::arg("seed") = 1, py::arg("mu") = 0.1);

  m.def("default_spec", [](const std::string& suite) {
    if (suite == "routing") return harness::dump_spec(harness::default_routing_spec());
    if (suite == "security") return harness::dump_spec(harness::default_security_spec());
    throw InvalidArgument("suite must be 'routing' or 'security'");
  });

  // Runs a paired suite; returns the summary document and both aggregate tables.
  m.def(
      "run_suite",
      [](const std::string& spec_text, const std::string& out_dir) {
        const auto spec = harness::parse_spec(spec_text);
        harness::SuiteResult r;
        {
          py::gil_scoped_release release;
          r = harness::run_paired_suite(spec);
          if (!out_dir.empty()) harness::write_suite(r, out_dir);
        }
        py::dict d;
        d["summary"] = harness::summary_json(r);
        d["aggregate"] = harness::aggregate_csv(r.by_iteration);
        d["aggregate_calls"] = harness::aggregate_csv(r.by_oracle_calls, "oracle_calls");
        d["trajectories"] = harness::trajectory_csv(r);
        return d;
      },
      py::arg("spec"), py::arg("out_dir") = "");

  m.def("git_blob_hash", [](const py::bytes& data) { return io::git_blob_hash(std::string(data)); });
}
