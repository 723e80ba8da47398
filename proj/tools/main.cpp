// Command-line front end: instance generation, single runs and the
// experiment suites. Exit codes: 0 ok, 1 usage, 2 solver failure, 3 check
// failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pzos/errors.hpp"
#include "pzos/goldstein1d.hpp"
#include "pzos/harness.hpp"
#include "pzos/io.hpp"

namespace fs = std::filesystem;
using namespace pzos;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;
constexpr int kExitCheck = 3;

struct SuiteOptions {
  std::string spec_path;
  std::string suite = "routing";
  std::optional<int> instances;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> iterations;
  std::string out;
  bool check = false;

  void attach(CLI::App* app, const char* default_suite) {
    suite = default_suite;
    app->add_option("--spec", spec_path, "JSON experiment spec");
    app->add_option("--suite", suite, "routing or security, when no spec is given")
        ->check(CLI::IsMember({"routing", "security"}));
    app->add_option("--instances", instances, "Override instance_count");
    app->add_option("--seed", seed, "Override master_seed");
    app->add_option("--workers", workers, "Override worker count");
    app->add_option("--iterations", iterations, "Override T");
    app->add_option("--out", out, "Output directory");
    app->add_flag("--check", check, "Evaluate the built-in acceptance check (exit 3 on failure)");
  }

  harness::ExperimentSpec spec() const {
    harness::ExperimentSpec s = !spec_path.empty()     ? harness::load_spec(spec_path)
                                : suite == "security" ? harness::default_security_spec()
                                                      : harness::default_routing_spec();
    if (instances) s.instance_count = *instances;
    if (seed) s.master_seed = *seed;
    if (workers) s.workers = *workers;
    if (iterations) {
      s.run.iterations = *iterations;
      std::erase_if(s.snapshots, [&](int t) { return t > *iterations; });
    }
    s.validate();
    return s;
  }
};

std::vector<std::string> pair_labels() {
  return {harness::AlgorithmEntry{Algorithm::pzos, 1}.label(),
          harness::AlgorithmEntry{Algorithm::zos, 1}.label()};
}

void print_exclusions(const harness::SuiteResult& r) {
  fmt::print("instances: {} included, {} excluded\n", r.included_count(), r.excluded_count());
  for (const auto& inst : r.instances) {
    if (!inst.included) fmt::print("  excluded {}: {}\n", inst.id, inst.reason);
  }
}

// Median of the first at least as good as the second at every row, plus an
// optional per-instance share.
bool print_dominance(const std::vector<harness::DominanceRow>& rows, const std::string& a,
                     const std::string& b, bool maximize, double min_fraction) {
  bool ok = true;
  for (const auto& row : rows) {
    const bool med = maximize ? row.median_first >= row.median_second
                              : row.median_first <= row.median_second;
    const bool frac = row.fraction >= min_fraction;
    ok = ok && med && frac;
    fmt::print("  at {:>5}: median {} {:.4f} vs {} {:.4f}, {} at least as good on {:.0f}% {}\n",
               row.index, a, row.median_first, b, row.median_second, a, 100.0 * row.fraction,
               med && frac ? "ok" : "FAIL");
  }
  return ok;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    fmt::print("{}", text);
  } else {
    io::write_text(path, text);
    fmt::print("wrote {}\n", path);
  }
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::string cell;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      if (!cell.empty()) {
        if constexpr (std::is_floating_point_v<T>) {
          out.push_back(static_cast<T>(std::stod(cell)));
        } else {
          out.push_back(static_cast<T>(std::stoll(cell)));
        }
      }
      cell.clear();
    } else {
      cell.push_back(text[i]);
    }
  }
  if (out.empty()) throw InvalidArgument(fmt::format("empty list '{}'", text));
  return out;
}

int cmd_gen(const std::string& kind, int count, std::uint64_t seed, const std::string& out,
            Index min_targets, Index max_targets) {
  for (int i = 0; i < count; ++i) {
    RngStream rng(seed, harness::instance_stream_id(seed, static_cast<std::uint64_t>(i)));
    io::AnyInstance inst;
    if (kind == "routing") {
      inst = routing::generate_routing_instance(rng);
    } else {
      const Index n = static_cast<Index>(rng.next_int(min_targets, max_targets));
      inst = security::generate_security_instance(rng, n);
    }
    const fs::path path = fs::path(out) / fmt::format("{}_{:03d}.json", kind, i);
    io::save_instance(path, inst);
    fmt::print("wrote {}\n", path.string());
  }
  return kExitOk;
}

struct RunOptions {
  std::string instance;
  std::string algorithm = "pzos";
  int q = 1;
  std::optional<int> iterations;
  std::optional<double> mu;
  std::optional<double> step;
  std::optional<std::string> step_kind;
  bool project = false;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_run(const RunOptions& o) {
  const io::AnyInstance any = io::load_instance(o.instance);
  const bool is_routing = std::holds_alternative<routing::RoutingInstance>(any);
  harness::ExperimentSpec defaults =
      is_routing ? harness::default_routing_spec() : harness::default_security_spec();
  Problem problem =
      is_routing ? routing::make_routing_problem(
                       std::make_shared<routing::RoutingInstance>(std::get<routing::RoutingInstance>(any)))
                 : security::make_security_problem(std::make_shared<security::SecurityInstance>(
                       std::get<security::SecurityInstance>(any)));
  RunConfig cfg;
  cfg.algorithm = parse_algorithm(o.algorithm);
  cfg.batch_q = o.q;
  cfg.iterations = o.iterations.value_or(defaults.run.iterations);
  cfg.mu = o.mu.value_or(defaults.run.mu);
  cfg.step = defaults.run.step.for_dimension(problem.dx());
  if (o.step_kind) {
    cfg.step.kind = *o.step_kind == "constant" ? StepSchedule::Kind::constant
                                               : StepSchedule::Kind::inverse_sqrt;
  }
  if (o.step) cfg.step.scale = *o.step;
  cfg.project_nonnegative = o.project || defaults.run.project_nonnegative;
  cfg.seed = o.seed;
  cfg.stream_id = harness::direction_stream_id(o.seed, 0, 0);
  cfg.sense = problem.leader->sense();
  cfg.x0 = problem.x0;
  const Trajectory tr = run(problem, cfg);

  std::string csv = "t,oracle_calls_cum,objective_raw,grad_norm,step_size,projected_flag\n";
  for (std::size_t t = 0; t < tr.objective_values.size(); ++t) {
    csv += fmt::format("{},{},{}", t, tr.oracle_calls_cumulative[t], tr.objective_values[t]);
    csv += t < tr.gradient_norms.size()
               ? fmt::format(",{},{},{}\n", tr.gradient_norms[t], tr.step_sizes[t],
                             static_cast<int>(tr.projected[t]))
               : std::string(",,,\n");
  }
  if (!o.out.empty()) write_or_print(o.out, csv);
  fmt::print("{} on {} (dx = {}): F(x_0) = {:.6g}, F(x_T) = {:.6g}, {} algorithmic oracle calls\n",
             to_string(cfg.algorithm), problem.name, problem.dx(), tr.objective_values.front(),
             tr.objective_values.back(), tr.oracle_calls_cumulative.back());
  return kExitOk;
}

int cmd_suite(const SuiteOptions& o) {
  const auto spec = o.spec();
  const auto r = harness::run_paired_suite(spec);
  print_exclusions(r);
  if (!o.out.empty()) {
    harness::write_suite(r, o.out);
    fmt::print("wrote {}\n", o.out);
  }
  if (r.included_count() == 0) return kExitSolver;
  const bool maximize = r.instances.front().sense == Sense::maximize;
  const auto labels = pair_labels();
  if (!r.instances.empty() && std::all_of(labels.begin(), labels.end(), [&](const std::string& l) {
        return std::any_of(spec.algorithms.begin(), spec.algorithms.end(),
                           [&](const auto& a) { return a.label() == l; });
      })) {
    const auto rows = harness::compare_at_iterations(r, labels[0], labels[1], spec.snapshots);
    const double min_fraction = o.check && maximize ? 0.9 : 0.0;
    const bool ok = print_dominance(rows, labels[0], labels[1], maximize, min_fraction);
    if (o.check && !ok) return kExitCheck;
  } else if (o.check) {
    fmt::print("check needs both pzos and zos at Q = 1\n");
    return kExitCheck;
  }
  return kExitOk;
}

int cmd_variance(const std::string& dims_text, std::int64_t samples, std::uint64_t seed, double mu,
                 const std::string& out, bool check) {
  const auto dims = parse_list<Index>(dims_text);
  const auto rows = harness::variance_sweep(dims, samples, seed, mu);
  write_or_print(out, harness::variance_csv(rows));
  bool ok = true;
  for (std::size_t k = 0; k + 1 < rows.size(); k += 2) {
    const auto& p = rows[k];
    const auto& z = rows[k + 1];
    const double se = std::hypot(p.standard_error, z.standard_error);
    const double ratio = z.mean_sq_norm / p.mean_sq_norm;
    const bool sep = z.mean_sq_norm - p.mean_sq_norm >= 2.0 * se;
    fmt::print("dx {:>4}: pzos {:.3f} zos {:.3f} ratio {:.2f} separation {}\n", p.dx, p.mean_sq_norm,
               z.mean_sq_norm, ratio, sep ? "ok" : "FAIL");
    ok = ok && sep;
    if (p.dx == 100) ok = ok && ratio >= 1.8;
  }
  return check && !ok ? kExitCheck : kExitOk;
}

int cmd_batch(SuiteOptions o, const std::string& q_text, std::uint64_t budget) {
  auto spec = o.spec();
  spec.algorithms = {{Algorithm::pzos, 1}};
  const auto qs = parse_list<int>(q_text);
  for (int q : qs) spec.algorithms.push_back({Algorithm::zos, q});
  const auto r = harness::batch_sweep(spec);
  print_exclusions(r);
  if (!o.out.empty()) {
    harness::write_suite(r, o.out);
    fmt::print("wrote {}\n", o.out);
  }
  if (r.included_count() == 0) return kExitSolver;
  const bool maximize = r.instances.front().sense == Sense::maximize;
  bool ok = true;
  for (int q : qs) {
    const std::string zos = harness::AlgorithmEntry{Algorithm::zos, q}.label();
    const auto pair = harness::restrict_to(r, {"pzos", zos});
    const auto row = harness::compare_at_budget(pair, "pzos", zos, budget);
    fmt::print("budget {} calls, pzos vs {}:\n", budget, zos);
    ok = print_dominance({row}, "pzos", zos, maximize, 0.0) && ok;
  }
  return o.check && !ok ? kExitCheck : kExitOk;
}

int cmd_mu(SuiteOptions o, const std::string& grid_text) {
  auto spec = o.spec();
  if (!grid_text.empty()) spec.mu_grid = parse_list<double>(grid_text);
  const auto results = harness::mu_sensitivity(spec);
  bool ok = true;
  for (const auto& m : results) {
    fmt::print("mu = {}\n", m.mu);
    print_exclusions(m.result);
    if (!o.out.empty()) harness::write_suite(m.result, fs::path(o.out) / fmt::format("mu_{}", m.mu));
    if (m.result.included_count() == 0) return kExitSolver;
    const bool maximize = m.result.instances.front().sense == Sense::maximize;
    ok = print_dominance(harness::compare_at_iterations(m.result, "pzos", "zos", spec.snapshots), "pzos",
                         "zos", maximize, 0.0) &&
         ok;
  }
  return o.check && !ok ? kExitCheck : kExitOk;
}

int cmd_dims(SuiteOptions o, const std::string& dims_text, const std::string& snap_text) {
  o.suite = "security";
  auto spec = o.spec();
  if (spec.suite != harness::Suite::security) throw InvalidArgument("dims needs a security spec");
  if (!o.instances) spec.instance_count = 5;
  if (!o.iterations) spec.run.iterations = 250;
  spec.snapshots = parse_list<int>(snap_text);
  spec.validate();
  const auto dims = parse_list<Index>(dims_text);
  const auto rows = harness::dimension_profile(spec, dims);
  write_or_print(o.out.empty() ? "" : (fs::path(o.out) / "profile.csv").string(), harness::profile_csv(rows));
  if (!o.check) return kExitOk;
  // Gap at the last snapshot nondecreasing in n, PZOS band no wider at the largest n.
  const int last = spec.snapshots.back();
  double prev_gap = -1e300;
  bool ok = true;
  auto find = [&](Index n, const std::string& a) {
    for (const auto& r : rows) {
      if (r.dimension == n && r.algorithm == a && r.snapshot == last) return r;
    }
    throw InvalidArgument("missing profile row");
  };
  for (Index n : dims) {
    const auto p = find(n, "pzos");
    const auto z = find(n, "zos");
    const double gap = z.median - p.median;
    fmt::print("n {:>4}: gap {:.4f}, band pzos {:.4f} zos {:.4f}\n", n, gap, p.max - p.min, z.max - z.min);
    ok = ok && gap >= prev_gap;
    prev_gap = gap;
  }
  const auto p = find(dims.back(), "pzos");
  const auto z = find(dims.back(), "zos");
  ok = ok && (p.max - p.min) <= (z.max - z.min);
  return ok ? kExitOk : kExitCheck;
}

int cmd_goldstein(const std::string& deltas_text, const std::string& csv_path) {
  const auto deltas =
      deltas_text.empty() ? goldstein::default_delta_grid() : parse_list<double>(deltas_text);
  std::string csv = "example,delta,full_lo,full_hi,full_gap,partial_lo,partial_hi,partial_gap\n";
  for (const auto& ex : {goldstein::example_abs_plus_quadratic(), goldstein::example_abs_minus_quadratic()}) {
    fmt::print("{}: Clarke interval at 0 = [{:g}, {:g}]\n", ex.name,
               goldstein::clarke_interval(ex.composite, ex.x).lo,
               goldstein::clarke_interval(ex.composite, ex.x).hi);
    fmt::print("  {:>6}  {:>18}  {:>8}  {:>18}  {:>8}\n", "delta", "full", "gap", "partial", "gap");
    for (const auto& r : goldstein::stationarity_table(ex, deltas)) {
      fmt::print("  {:>6g}  {:>18}  {:>8.4g}  {:>18}  {:>8.4g}\n", r.delta,
                 fmt::format("[{:.4g}, {:.4g}]", r.full.lo, r.full.hi), r.full_gap,
                 fmt::format("[{:.4g}, {:.4g}]", r.partial.lo, r.partial.hi), r.partial_gap);
      csv += fmt::format("{},{},{},{},{},{},{},{}\n", ex.name, r.delta, r.full.lo, r.full.hi, r.full_gap,
                         r.partial.lo, r.partial.hi, r.partial_gap);
    }
  }
  if (!csv_path.empty()) write_or_print(csv_path, csv);
  return kExitOk;
}

int cmd_constrained(SuiteOptions o) {
  auto spec = o.spec();
  const auto r = harness::constrained_routing_suite(spec);
  print_exclusions(r);
  if (!o.out.empty()) {
    harness::write_suite(r, o.out);
    fmt::print("wrote {}\n", o.out);
  }
  if (r.included_count() == 0) return kExitSolver;
  bool feasible = true;
  std::int64_t activations = 0;
  for (const auto& inst : r.instances) {
    for (const auto& run : inst.runs) {
      activations += run.trajectory.projection_activations();
      for (const Vec& x : run.trajectory.iterates) feasible = feasible && (x.array() >= 0.0).all();
    }
  }
  fmt::print("all iterates nonnegative: {}; projection activations: {}\n", feasible ? "yes" : "NO",
             activations);
  const bool ok = print_dominance(harness::compare_at_iterations(r, "pzos", "zos", spec.snapshots), "pzos",
                                  "zos", true, 0.0) &&
                  feasible;
  return o.check && !ok ? kExitCheck : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-free bilevel optimization: PZOS / ZOS experiments"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Write random instance files");
  std::string gen_kind = "routing";
  int gen_count = 1;
  std::uint64_t gen_seed = 1;
  std::string gen_out = ".";
  Index gen_min = 2;
  Index gen_max = 100;
  gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"routing", "security"}));
  gen->add_option("--count", gen_count)->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--min-targets", gen_min);
  gen->add_option("--max-targets", gen_max);

  auto* runc = app.add_subcommand("run", "One algorithm on one instance file");
  RunOptions run_opts;
  runc->add_option("--instance", run_opts.instance)->required();
  runc->add_option("--algorithm", run_opts.algorithm)->check(CLI::IsMember({"pzos", "zos"}));
  runc->add_option("--q", run_opts.q)->check(CLI::PositiveNumber);
  runc->add_option("--iterations", run_opts.iterations);
  runc->add_option("--mu", run_opts.mu);
  runc->add_option("--step", run_opts.step, "Step scale (before any per-dimension division)");
  runc->add_option("--step-kind", run_opts.step_kind)->check(CLI::IsMember({"constant", "inverse_sqrt"}));
  runc->add_flag("--project", run_opts.project, "Project iterates onto x >= 0");
  runc->add_option("--seed", run_opts.seed);
  runc->add_option("--out", run_opts.out, "Trajectory CSV path");

  auto* suite = app.add_subcommand("suite", "Paired PZOS/ZOS suite");
  SuiteOptions suite_opts;
  suite_opts.attach(suite, "routing");

  auto* variance = app.add_subcommand("variance", "Estimator second moments vs dimension");
  std::string var_dims = "25,50,100";
  std::int64_t var_samples = 3500;
  std::uint64_t var_seed = 1;
  double var_mu = 0.1;
  std::string var_out;
  bool var_check = false;
  variance->add_option("--dims", var_dims);
  variance->add_option("--samples", var_samples);
  variance->add_option("--seed", var_seed);
  variance->add_option("--mu", var_mu);
  variance->add_option("--out", var_out, "CSV path");
  variance->add_flag("--check", var_check);

  auto* batch = app.add_subcommand("batch", "PZOS(Q=1) against batched ZOS on an oracle-call axis");
  SuiteOptions batch_opts;
  batch_opts.attach(batch, "routing");
  std::string batch_q = "1,4";
  std::uint64_t batch_budget = 450;
  batch->add_option("--q-list", batch_q);
  batch->add_option("--budget", batch_budget);

  auto* mu = app.add_subcommand("mu", "Smoothing-radius sensitivity");
  SuiteOptions mu_opts;
  mu_opts.attach(mu, "routing");
  std::string mu_grid;
  mu->add_option("--grid", mu_grid, "Comma-separated mu values");

  auto* dims = app.add_subcommand("dims", "Security suites at fixed target counts");
  SuiteOptions dims_opts;
  dims_opts.attach(dims, "security");
  std::string dims_list = "50,100,150";
  std::string dims_snaps = "50,150,250";
  dims->add_option("--dims", dims_list);
  dims->add_option("--snapshots", dims_snaps);

  auto* gold = app.add_subcommand("goldstein-demo", "Goldstein tables for the two worked examples");
  std::string gold_deltas;
  std::string gold_csv;
  gold->add_option("--deltas", gold_deltas);
  gold->add_option("--csv", gold_csv);

  auto* cons = app.add_subcommand("constrained", "Routing suite with tolls projected onto x >= 0");
  SuiteOptions cons_opts;
  cons_opts.attach(cons, "routing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_kind, gen_count, gen_seed, gen_out, gen_min, gen_max);
    if (*runc) return cmd_run(run_opts);
    if (*suite) return cmd_suite(suite_opts);
    if (*variance) return cmd_variance(var_dims, var_samples, var_seed, var_mu, var_out, var_check);
    if (*batch) return cmd_batch(batch_opts, batch_q, batch_budget);
    if (*mu) return cmd_mu(mu_opts, mu_grid);
    if (*dims) return cmd_dims(dims_opts, dims_list, dims_snaps);
    if (*gold) return cmd_goldstein(gold_deltas, gold_csv);
    if (*cons) return cmd_constrained(cons_opts);
  } catch (const InvalidArgument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: bad number: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "solver failure: {}\n", e.what());
    return kExitSolver;
  }
  return kExitUsage;
}
