#include "pzos/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pzos/errors.hpp"

namespace pzos::harness {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInstanceTag = 0x696E7374616E6365ULL;   // "instance"
constexpr std::uint64_t kDirectionTag = 0x646972656374696FULL;  // "directio"
constexpr std::uint64_t kVarianceTag = 0x76617269616E6365ULL;   // "variance"
constexpr std::uint64_t kProfileTag = 0x70726F66696C6521ULL;    // "profile!"

const double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string_view to_string(Suite s) {
  switch (s) {
    case Suite::routing:
      return "routing";
    case Suite::security:
      return "security";
    case Suite::custom:
      return "custom";
  }
  return "custom";
}

std::string AlgorithmEntry::label() const {
  const std::string base(pzos::to_string(algorithm));
  return q == 1 ? base : fmt::format("{}_q{}", base, q);
}

StepSchedule StepRule::for_dimension(Index dx) const {
  double s = (large_dimension > 0 && dx > large_dimension) ? large_scale : scale;
  if (per_dimension) s /= static_cast<double>(dx);
  return {kind, s};
}

void ExperimentSpec::validate() const {
  if (instance_count < 1) throw InvalidArgument("instance_count must be >= 1");
  if (algorithms.empty()) throw InvalidArgument("spec lists no algorithms");
  for (const auto& a : algorithms) {
    if (a.q < 1) throw InvalidArgument("batch size q must be >= 1");
    if (std::count(algorithms.begin(), algorithms.end(), a) > 1) {
      throw InvalidArgument(fmt::format("algorithm '{}' listed twice", a.label()));
    }
  }
  if (run.iterations < 1) throw InvalidArgument("iterations must be >= 1");
  if (!(run.mu > 0.0)) throw InvalidArgument("mu must be > 0");
  if (!(run.step.scale > 0.0)) throw InvalidArgument("step scale must be > 0");
  if (run.step.large_dimension > 0 && !(run.step.large_scale > 0.0)) {
    throw InvalidArgument("large-dimension step scale must be > 0");
  }
  if (!(run.follower_tol > 0.0)) throw InvalidArgument("follower_tol must be > 0");
  for (int s : snapshots) {
    if (s < 0 || s > run.iterations) {
      throw InvalidArgument(fmt::format("snapshot {} outside [0, {}]", s, run.iterations));
    }
  }
  for (double m : mu_grid) {
    if (!(m > 0.0)) throw InvalidArgument("mu grid values must be > 0");
  }
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  if (suite == Suite::security &&
      (security_params.min_targets < 1 || security_params.max_targets < security_params.min_targets)) {
    throw InvalidArgument("empty target-count range");
  }
  if (suite == Suite::custom && instance_files.size() != static_cast<std::size_t>(instance_count)) {
    throw InvalidArgument("custom suite needs exactly instance_count instance files");
  }
}

ExperimentSpec default_routing_spec() {
  ExperimentSpec s;
  s.suite = Suite::routing;
  s.instance_count = 20;
  s.algorithms = {{Algorithm::pzos, 1}, {Algorithm::zos, 1}};
  s.run.iterations = 150;
  s.run.mu = 0.5;
  s.run.step = {StepSchedule::Kind::constant, 0.7, true, 0, 0.0};
  s.run.project_nonnegative = false;
  s.run.follower_tol = 1e-6;
  s.snapshots = {10, 25, 50};
  s.mu_grid = {0.1, 0.5, 0.9, 2.0};
  return s;
}

ExperimentSpec default_security_spec() {
  ExperimentSpec s;
  s.suite = Suite::security;
  s.instance_count = 30;
  s.security_params = {2, 100};
  s.algorithms = {{Algorithm::pzos, 1}, {Algorithm::zos, 1}};
  s.run.iterations = 500;
  s.run.mu = 0.1;
  s.run.step = {StepSchedule::Kind::inverse_sqrt, 0.05, false, 100, 0.03};
  s.run.project_nonnegative = true;
  s.run.follower_tol = 1e-8;
  s.snapshots = {100, 300, 500};
  s.mu_grid = {0.1};
  return s;
}

namespace {

void reject_unknown(const json& doc, std::initializer_list<const char*> allowed, const char* what) {
  if (!doc.is_object()) throw InvalidArgument(fmt::format("{} must be an object", what));
  for (const auto& [key, value] : doc.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }) ==
        allowed.end()) {
      throw InvalidArgument(fmt::format("unknown key '{}' in {}", key, what));
    }
  }
}

template <class T>
void read_opt(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

Suite parse_suite(const std::string& s) {
  if (s == "routing") return Suite::routing;
  if (s == "security") return Suite::security;
  if (s == "custom") return Suite::custom;
  throw InvalidArgument(fmt::format("unknown suite '{}'", s));
}

StepSchedule::Kind parse_step_kind(const std::string& s) {
  if (s == "constant") return StepSchedule::Kind::constant;
  if (s == "inverse_sqrt") return StepSchedule::Kind::inverse_sqrt;
  throw InvalidArgument(fmt::format("unknown step kind '{}'", s));
}

json spec_to_json(const ExperimentSpec& s) {
  json params;
  switch (s.suite) {
    case Suite::routing:
      params = {{"min_vertices", s.routing_params.min_vertices},
                {"max_vertices", s.routing_params.max_vertices},
                {"min_edges", s.routing_params.min_edges},
                {"max_edges", s.routing_params.max_edges},
                {"min_commodities", s.routing_params.min_commodities},
                {"max_commodities", s.routing_params.max_commodities}};
      break;
    case Suite::security:
      params = {{"min_targets", s.security_params.min_targets},
                {"max_targets", s.security_params.max_targets}};
      break;
    case Suite::custom:
      params = {{"files", s.instance_files}};
      break;
  }
  json algos = json::array();
  for (const auto& a : s.algorithms) {
    algos.push_back({{"algorithm", std::string(pzos::to_string(a.algorithm))}, {"q", a.q}});
  }
  const json step = {
      {"kind", s.run.step.kind == StepSchedule::Kind::constant ? "constant" : "inverse_sqrt"},
      {"scale", s.run.step.scale},
      {"per_dimension", s.run.step.per_dimension},
      {"large_dimension", s.run.step.large_dimension},
      {"large_scale", s.run.step.large_scale}};
  return {{"suite", std::string(to_string(s.suite))},
          {"instance_count", s.instance_count},
          {"instance_params", params},
          {"algorithms", algos},
          {"run",
           {{"iterations", s.run.iterations},
            {"mu", s.run.mu},
            {"step", step},
            {"project_nonnegative", s.run.project_nonnegative},
            {"follower_tol", s.run.follower_tol}}},
          {"snapshots", s.snapshots},
          {"mu_grid", s.mu_grid},
          {"master_seed", s.master_seed},
          {"workers", s.workers}};
}

}  // namespace

ExperimentSpec parse_spec(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("spec is not valid JSON: {}", e.what()));
  }
  try {
    reject_unknown(doc,
                   {"suite", "instance_count", "instance_params", "algorithms", "run", "snapshots",
                    "mu_grid", "master_seed", "workers"},
                   "spec");
    if (!doc.contains("suite")) throw InvalidArgument("spec needs a 'suite' field");
    const Suite suite = parse_suite(doc.at("suite").get<std::string>());
    ExperimentSpec s = suite == Suite::security ? default_security_spec() : default_routing_spec();
    s.suite = suite;
    read_opt(doc, "instance_count", s.instance_count);
    if (doc.contains("instance_params")) {
      const json& p = doc.at("instance_params");
      switch (suite) {
        case Suite::routing:
          reject_unknown(p,
                         {"min_vertices", "max_vertices", "min_edges", "max_edges", "min_commodities",
                          "max_commodities"},
                         "instance_params");
          read_opt(p, "min_vertices", s.routing_params.min_vertices);
          read_opt(p, "max_vertices", s.routing_params.max_vertices);
          read_opt(p, "min_edges", s.routing_params.min_edges);
          read_opt(p, "max_edges", s.routing_params.max_edges);
          read_opt(p, "min_commodities", s.routing_params.min_commodities);
          read_opt(p, "max_commodities", s.routing_params.max_commodities);
          break;
        case Suite::security:
          reject_unknown(p, {"min_targets", "max_targets"}, "instance_params");
          read_opt(p, "min_targets", s.security_params.min_targets);
          read_opt(p, "max_targets", s.security_params.max_targets);
          break;
        case Suite::custom:
          reject_unknown(p, {"files"}, "instance_params");
          read_opt(p, "files", s.instance_files);
          break;
      }
    }
    if (suite == Suite::custom && !doc.contains("instance_count")) {
      s.instance_count = static_cast<int>(s.instance_files.size());
    }
    if (doc.contains("algorithms")) {
      s.algorithms.clear();
      for (const auto& a : doc.at("algorithms")) {
        reject_unknown(a, {"algorithm", "q"}, "algorithm entry");
        AlgorithmEntry e;
        e.algorithm = parse_algorithm(a.at("algorithm").get<std::string>());
        read_opt(a, "q", e.q);
        s.algorithms.push_back(e);
      }
    }
    if (doc.contains("run")) {
      const json& r = doc.at("run");
      reject_unknown(r, {"iterations", "mu", "step", "project_nonnegative", "follower_tol"}, "run");
      read_opt(r, "iterations", s.run.iterations);
      read_opt(r, "mu", s.run.mu);
      read_opt(r, "project_nonnegative", s.run.project_nonnegative);
      read_opt(r, "follower_tol", s.run.follower_tol);
      if (r.contains("step")) {
        const json& st = r.at("step");
        reject_unknown(st, {"kind", "scale", "per_dimension", "large_dimension", "large_scale"}, "step");
        if (st.contains("kind")) s.run.step.kind = parse_step_kind(st.at("kind").get<std::string>());
        read_opt(st, "scale", s.run.step.scale);
        read_opt(st, "per_dimension", s.run.step.per_dimension);
        read_opt(st, "large_dimension", s.run.step.large_dimension);
        read_opt(st, "large_scale", s.run.step.large_scale);
      }
    }
    read_opt(doc, "snapshots", s.snapshots);
    read_opt(doc, "mu_grid", s.mu_grid);
    read_opt(doc, "master_seed", s.master_seed);
    read_opt(doc, "workers", s.workers);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("bad spec field: {}", e.what()));
  }
}

std::string dump_spec(const ExperimentSpec& spec) { return spec_to_json(spec).dump(2) + "\n"; }

ExperimentSpec load_spec(const std::filesystem::path& path) { return parse_spec(io::read_text(path)); }

std::uint64_t instance_stream_id(std::uint64_t master_seed, std::uint64_t index) {
  return derive_stream_id({kInstanceTag, master_seed, index});
}

std::uint64_t direction_stream_id(std::uint64_t master_seed, std::uint64_t index,
                                  std::uint64_t replicate) {
  return derive_stream_id({kDirectionTag, master_seed, index, replicate});
}

const RunRecord* InstanceRecord::find(const std::string& label) const {
  for (const auto& r : runs) {
    if (r.algorithm.label() == label) return &r;
  }
  return nullptr;
}

int SuiteResult::included_count() const {
  return static_cast<int>(std::count_if(instances.begin(), instances.end(),
                                        [](const InstanceRecord& r) { return r.included; }));
}

int SuiteResult::excluded_count() const {
  return static_cast<int>(instances.size()) - included_count();
}

const AggregateRow* SuiteResult::aggregate(const std::string& label, std::int64_t t) const {
  for (const auto& row : by_iteration) {
    if (row.index == t && row.algorithm.label() == label) return &row;
  }
  return nullptr;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("percentile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double value_at_budget(const RunRecord& run, std::uint64_t budget) {
  const auto& calls = run.trajectory.oracle_calls_cumulative;
  std::size_t t = 0;
  while (t + 1 < calls.size() && calls[t + 1] <= budget) ++t;
  return run.normalized.at(t);
}

namespace {

struct Prepared {
  std::optional<Problem> problem;
  std::string error;
  std::string source;
};

Prepared prepare_instance(const ExperimentSpec& spec, int index) {
  Prepared out;
  try {
    RngStream rng(spec.master_seed, instance_stream_id(spec.master_seed, static_cast<std::uint64_t>(index)));
    switch (spec.suite) {
      case Suite::routing: {
        auto inst = std::make_shared<routing::RoutingInstance>(
            routing::generate_routing_instance(rng, spec.routing_params));
        routing::WardropOptions opts;
        opts.tol = spec.run.follower_tol;
        out.problem = routing::make_routing_problem(inst, opts);
        break;
      }
      case Suite::security: {
        const Index n = static_cast<Index>(
            rng.next_int(spec.security_params.min_targets, spec.security_params.max_targets));
        auto inst = std::make_shared<security::SecurityInstance>(
            security::generate_security_instance(rng, n));
        security::BestResponseOptions opts;
        opts.tol = spec.run.follower_tol;
        out.problem = security::make_security_problem(inst, opts);
        break;
      }
      case Suite::custom: {
        const auto& path = spec.instance_files.at(static_cast<std::size_t>(index));
        out.source = io::read_text(path);
        auto any = io::instance_from_json(json::parse(out.source));
        if (auto* r = std::get_if<routing::RoutingInstance>(&any)) {
          routing::WardropOptions opts;
          opts.tol = spec.run.follower_tol;
          out.problem = routing::make_routing_problem(
              std::make_shared<routing::RoutingInstance>(std::move(*r)), opts);
        } else {
          security::BestResponseOptions opts;
          opts.tol = spec.run.follower_tol;
          out.problem = security::make_security_problem(
              std::make_shared<security::SecurityInstance>(
                  std::move(std::get<security::SecurityInstance>(any))),
              opts);
        }
        break;
      }
    }
  } catch (const std::exception& e) {
    out.error = fmt::format("instance setup failed: {}", e.what());
  }
  return out;
}

RunConfig make_config(const ExperimentSpec& spec, const Problem& problem, const AlgorithmEntry& a,
                      int index) {
  RunConfig cfg;
  cfg.algorithm = a.algorithm;
  cfg.batch_q = a.q;
  cfg.iterations = spec.run.iterations;
  cfg.mu = spec.run.mu;
  cfg.step = spec.run.step.for_dimension(problem.dx());
  cfg.project_nonnegative = spec.run.project_nonnegative;
  cfg.seed = spec.master_seed;
  cfg.stream_id = direction_stream_id(spec.master_seed, static_cast<std::uint64_t>(index), 0);
  cfg.sense = problem.leader->sense();
  cfg.x0 = problem.x0;
  return cfg;
}

std::vector<AggregateRow> aggregate_iterations(const SuiteResult& r) {
  std::vector<AggregateRow> rows;
  const auto T = static_cast<std::int64_t>(r.spec.run.iterations);
  for (const auto& a : r.spec.algorithms) {
    const std::string label = a.label();
    for (std::int64_t t = 0; t <= T; ++t) {
      std::vector<double> v;
      for (const auto& inst : r.instances) {
        if (!inst.included) continue;
        if (const RunRecord* run = inst.find(label)) v.push_back(run->normalized.at(static_cast<std::size_t>(t)));
      }
      rows.push_back({a, t, percentile(v, 0.10), percentile(v, 0.25), percentile(v, 0.50),
                      percentile(v, 0.75), percentile(v, 0.90), static_cast<int>(v.size())});
    }
  }
  return rows;
}

std::vector<AggregateRow> aggregate_calls(const SuiteResult& r) {
  std::vector<AggregateRow> rows;
  for (const auto& a : r.spec.algorithms) {
    const std::string label = a.label();
    const std::uint64_t per_step = a.algorithm == Algorithm::pzos ? 2 * a.q + 1 : 2 * a.q;
    const std::uint64_t total = per_step * static_cast<std::uint64_t>(r.spec.run.iterations);
    for (std::uint64_t budget = 0; budget <= total; budget += kCallGridStep) {
      std::vector<double> v;
      for (const auto& inst : r.instances) {
        if (!inst.included) continue;
        if (const RunRecord* run = inst.find(label)) v.push_back(value_at_budget(*run, budget));
      }
      rows.push_back({a, static_cast<std::int64_t>(budget), percentile(v, 0.10), percentile(v, 0.25),
                      percentile(v, 0.50), percentile(v, 0.75), percentile(v, 0.90),
                      static_cast<int>(v.size())});
    }
  }
  return rows;
}

// Joint normalization over the runs present, then aggregation.
void finalize(SuiteResult& r) {
  r.normalization_set.clear();
  for (const auto& a : r.spec.algorithms) r.normalization_set.push_back(a.label());
  for (auto& inst : r.instances) {
    if (!inst.included) continue;
    std::vector<std::vector<double>> values;
    for (const auto& run : inst.runs) values.push_back(run.trajectory.objective_values);
    const NormalizedSeries ns = normalize_jointly(values);
    inst.lowest = ns.lowest;
    inst.highest = ns.highest;
    inst.degenerate = ns.degenerate;
    for (std::size_t k = 0; k < inst.runs.size(); ++k) inst.runs[k].normalized = ns.series[k];
  }
  r.by_iteration = aggregate_iterations(r);
  r.by_oracle_calls = aggregate_calls(r);
}

}  // namespace

SuiteResult run_paired_suite(const ExperimentSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  SuiteResult result;
  result.spec = spec;

  std::vector<Prepared> prepared;
  std::string hashed = dump_spec(spec);
  for (int i = 0; i < spec.instance_count; ++i) {
    prepared.push_back(prepare_instance(spec, i));
    hashed += prepared.back().source;
  }
  result.input_hash = io::git_blob_hash(hashed);

  struct Job {
    int instance;
    std::size_t algorithm;
  };
  std::vector<Job> jobs;
  for (int i = 0; i < spec.instance_count; ++i) {
    if (!prepared[static_cast<std::size_t>(i)].problem) continue;
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a) jobs.push_back({i, a});
  }
  std::vector<std::optional<Trajectory>> slots(jobs.size());
  std::vector<std::string> failures(jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      const Problem& problem = *prepared[static_cast<std::size_t>(job.instance)].problem;
      const AlgorithmEntry& algo = spec.algorithms[job.algorithm];
      try {
        slots[j] = run(problem, make_config(spec, problem, algo, job.instance));
      } catch (const std::exception& e) {
        failures[j] = fmt::format("{} failed: {}", algo.label(), e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  const int extra = std::min<int>(spec.workers, static_cast<int>(jobs.size())) - 1;
  for (int w = 0; w < extra; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::size_t j = 0;
  for (int i = 0; i < spec.instance_count; ++i) {
    const Prepared& p = prepared[static_cast<std::size_t>(i)];
    InstanceRecord rec;
    rec.id = i;
    if (!p.problem) {
      rec.included = false;
      rec.reason = p.error;
      result.instances.push_back(std::move(rec));
      continue;
    }
    rec.dimension = p.problem->dx();
    rec.sense = p.problem->leader->sense();
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a, ++j) {
      if (!failures[j].empty()) {
        rec.included = false;
        rec.reason += (rec.reason.empty() ? "" : "; ") + failures[j];
        continue;
      }
      rec.runs.push_back({spec.algorithms[a], std::move(*slots[j]), {}});
    }
    if (!rec.included) rec.runs.clear();
    result.instances.push_back(std::move(rec));
  }
  finalize(result);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SuiteResult restrict_to(const SuiteResult& result, const std::vector<std::string>& labels) {
  SuiteResult r;
  r.spec = result.spec;
  r.input_hash = result.input_hash;
  r.wall_seconds = result.wall_seconds;
  r.spec.algorithms.clear();
  for (const auto& label : labels) {
    const auto it = std::find_if(result.spec.algorithms.begin(), result.spec.algorithms.end(),
                                 [&](const AlgorithmEntry& a) { return a.label() == label; });
    if (it == result.spec.algorithms.end()) {
      throw InvalidArgument(fmt::format("suite has no algorithm '{}'", label));
    }
    r.spec.algorithms.push_back(*it);
  }
  for (const auto& inst : result.instances) {
    InstanceRecord copy = inst;
    copy.runs.clear();
    for (const auto& label : labels) {
      if (const RunRecord* run = inst.find(label)) copy.runs.push_back(*run);
    }
    r.instances.push_back(std::move(copy));
  }
  finalize(r);
  return r;
}

SuiteResult constrained_routing_suite(ExperimentSpec spec) {
  if (spec.suite != Suite::routing) {
    throw InvalidArgument("constrained suite is defined for routing specs");
  }
  spec.run.project_nonnegative = true;
  return run_paired_suite(spec);
}

SuiteResult batch_sweep(const ExperimentSpec& spec) {
  for (const auto& a : spec.algorithms) {
    if (a.q < 1) throw InvalidArgument("batch sizes must be >= 1");
  }
  return run_paired_suite(spec);
}

std::vector<MuResult> mu_sensitivity(const ExperimentSpec& spec) {
  const std::vector<double> grid = spec.mu_grid.empty() ? std::vector<double>{0.1, 0.5, 0.9, 2.0}
                                                        : spec.mu_grid;
  std::vector<MuResult> out;
  for (double mu : grid) {
    ExperimentSpec s = spec;
    s.run.mu = mu;
    s.mu_grid = {mu};
    out.push_back({mu, run_paired_suite(s)});
  }
  return out;
}

std::vector<VarianceRow> variance_sweep(const std::vector<Index>& dims, std::int64_t samples_per_dim,
                                        std::uint64_t master_seed, double mu) {
  if (samples_per_dim < 100) throw InvalidArgument("variance sweep needs >= 100 samples per dimension");
  const SmoothingRadius radius(mu);
  std::vector<VarianceRow> rows;
  for (Index dx : dims) {
    RngStream gen(master_seed, derive_stream_id({kVarianceTag, master_seed, static_cast<std::uint64_t>(dx)}));
    auto inst = std::make_shared<security::SecurityInstance>(security::generate_security_instance(gen, dx));
    const Problem p = security::make_security_problem(inst);
    const std::uint64_t dir_id =
        derive_stream_id({kDirectionTag, master_seed, static_cast<std::uint64_t>(dx)});
    for (Algorithm a : {Algorithm::pzos, Algorithm::zos}) {
      RngStream dirs(master_seed, dir_id);
      const MomentEstimate m =
          second_moment_probe(a, *p.leader, *p.oracle, p.x0, radius, samples_per_dim, dirs);
      rows.push_back({dx, a, m.mean, m.standard_error, m.samples});
    }
  }
  return rows;
}

std::vector<ProfileRow> dimension_profile(const ExperimentSpec& spec, const std::vector<Index>& dims) {
  if (spec.suite != Suite::security) throw InvalidArgument("dimension profile needs a security spec");
  std::vector<ProfileRow> rows;
  for (Index n : dims) {
    ExperimentSpec s = spec;
    s.security_params = {n, n};
    s.master_seed = derive_stream_id({kProfileTag, spec.master_seed, static_cast<std::uint64_t>(n)});
    const SuiteResult r = run_paired_suite(s);
    for (const auto& a : s.algorithms) {
      for (int snap : s.snapshots) {
        std::vector<double> v;
        for (const auto& inst : r.instances) {
          if (!inst.included) continue;
          if (const RunRecord* run = inst.find(a.label())) {
            v.push_back(run->normalized.at(static_cast<std::size_t>(snap)));
          }
        }
        ProfileRow row;
        row.dimension = n;
        row.algorithm = a.label();
        row.snapshot = snap;
        row.n_instances = static_cast<int>(v.size());
        row.median = percentile(v, 0.5);
        row.min = v.empty() ? kNaN : *std::min_element(v.begin(), v.end());
        row.max = v.empty() ? kNaN : *std::max_element(v.begin(), v.end());
        rows.push_back(row);
      }
    }
  }
  return rows;
}

namespace {

template <class ValueAt>
DominanceRow compare(const SuiteResult& result, const std::string& first, const std::string& second,
                     std::int64_t index, ValueAt value_at) {
  std::vector<double> a;
  std::vector<double> b;
  int wins = 0;
  for (const auto& inst : result.instances) {
    if (!inst.included) continue;
    const RunRecord* ra = inst.find(first);
    const RunRecord* rb = inst.find(second);
    if (!ra || !rb) throw InvalidArgument(fmt::format("suite lacks '{}' or '{}'", first, second));
    const double va = value_at(*ra);
    const double vb = value_at(*rb);
    a.push_back(va);
    b.push_back(vb);
    const bool better = inst.sense == Sense::maximize ? va >= vb : va <= vb;
    if (better) ++wins;
  }
  DominanceRow row;
  row.index = index;
  row.median_first = percentile(a, 0.5);
  row.median_second = percentile(b, 0.5);
  row.fraction = a.empty() ? kNaN : static_cast<double>(wins) / static_cast<double>(a.size());
  return row;
}

}  // namespace

std::vector<DominanceRow> compare_at_iterations(const SuiteResult& result, const std::string& first,
                                                const std::string& second,
                                                const std::vector<int>& iterations) {
  std::vector<DominanceRow> rows;
  for (int t : iterations) {
    rows.push_back(compare(result, first, second, t, [&](const RunRecord& r) {
      return r.normalized.at(static_cast<std::size_t>(t));
    }));
  }
  return rows;
}

DominanceRow compare_at_budget(const SuiteResult& result, const std::string& first,
                               const std::string& second, std::uint64_t budget) {
  return compare(result, first, second, static_cast<std::int64_t>(budget),
                 [&](const RunRecord& r) { return value_at_budget(r, budget); });
}

std::string trajectory_csv(const SuiteResult& result) {
  std::string out =
      "instance_id,algorithm,Q,t,oracle_calls_cum,objective_raw,objective_normalized,grad_norm,"
      "step_size,projected_flag\n";
  for (const auto& inst : result.instances) {
    if (!inst.included) continue;
    for (const auto& run : inst.runs) {
      const Trajectory& tr = run.trajectory;
      const std::string label = run.algorithm.label();
      for (std::size_t t = 0; t < tr.objective_values.size(); ++t) {
        out += fmt::format("{},{},{},{},{},{},{}", inst.id, label, run.algorithm.q, t,
                           tr.oracle_calls_cumulative[t], tr.objective_values[t], run.normalized[t]);
        if (t < tr.gradient_norms.size()) {
          out += fmt::format(",{},{},{}\n", tr.gradient_norms[t], tr.step_sizes[t],
                             static_cast<int>(tr.projected[t]));
        } else {
          out += ",,,\n";
        }
      }
    }
  }
  return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows, const char* index_column) {
  std::string out = fmt::format("algorithm,Q,{},p10,p25,p50,p75,p90,n_instances\n", index_column);
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.algorithm.label(), r.algorithm.q, r.index,
                       r.p10, r.p25, r.p50, r.p75, r.p90, r.n_instances);
  }
  return out;
}

std::string variance_csv(const std::vector<VarianceRow>& rows) {
  std::string out = "dx,estimator,mean_sq_norm,stderr,n_samples\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.dx, pzos::to_string(r.estimator), r.mean_sq_norm,
                       r.standard_error, r.n_samples);
  }
  return out;
}

std::string profile_csv(const std::vector<ProfileRow>& rows) {
  std::string out = "n,algorithm,snapshot,median,min,max,n_instances\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.dimension, r.algorithm, r.snapshot, r.median, r.min,
                       r.max, r.n_instances);
  }
  return out;
}

std::string summary_json(const SuiteResult& result) {
  json excluded = json::array();
  json projections = json::array();
  json extremes = json::array();
  for (const auto& inst : result.instances) {
    if (!inst.included) {
      excluded.push_back({{"instance_id", inst.id}, {"reason", inst.reason}});
      continue;
    }
    extremes.push_back({{"instance_id", inst.id},
                        {"dimension", inst.dimension},
                        {"lowest", inst.lowest},
                        {"highest", inst.highest},
                        {"degenerate", inst.degenerate}});
    for (const auto& run : inst.runs) {
      const auto n = run.trajectory.projection_activations();
      if (n > 0) {
        projections.push_back(
            {{"instance_id", inst.id}, {"algorithm", run.algorithm.label()}, {"activations", n}});
      }
    }
  }
  const json doc = {{"spec", spec_to_json(result.spec)},
                    {"input_hash", result.input_hash},
                    {"wall_clock_seconds", result.wall_seconds},
                    {"instance_count", result.instances.size()},
                    {"included", result.included_count()},
                    {"excluded", excluded},
                    {"normalization_set", result.normalization_set},
                    {"objective_extremes", extremes},
                    {"projection_activations", projections}};
  return doc.dump(2) + "\n";
}

void write_suite(const SuiteResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "trajectories.csv", trajectory_csv(result));
  io::write_text(dir / "aggregate.csv", aggregate_csv(result.by_iteration, "t"));
  io::write_text(dir / "aggregate_calls.csv", aggregate_csv(result.by_oracle_calls, "oracle_calls"));
  io::write_text(dir / "summary.json", summary_json(result));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::map<std::string, std::size_t> header_index(const std::string& line) {
  std::map<std::string, std::size_t> idx;
  const auto cells = split_csv_line(line);
  for (std::size_t i = 0; i < cells.size(); ++i) idx[cells[i]] = i;
  return idx;
}

std::size_t column(const std::map<std::string, std::size_t>& idx, const char* name) {
  const auto it = idx.find(name);
  if (it == idx.end()) throw InvalidArgument(fmt::format("CSV lacks column '{}'", name));
  return it->second;
}

}  // namespace

VerifyReport verify_aggregates(const std::string& trajectory_csv_text,
                               const std::string& aggregate_csv_text) {
  VerifyReport rep;
  std::map<std::pair<std::string, std::int64_t>, std::vector<double>> groups;
  {
    std::istringstream in(trajectory_csv_text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("empty trajectory CSV");
    const auto idx = header_index(line);
    const auto c_alg = column(idx, "algorithm");
    const auto c_t = column(idx, "t");
    const auto c_norm = column(idx, "objective_normalized");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      groups[{cells.at(c_alg), std::stoll(cells.at(c_t))}].push_back(std::stod(cells.at(c_norm)));
    }
  }
  std::istringstream in(aggregate_csv_text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty aggregate CSV");
  const auto idx = header_index(line);
  const auto c_alg = column(idx, "algorithm");
  const auto c_t = column(idx, "t");
  const auto c_n = column(idx, "n_instances");
  const std::pair<const char*, double> levels[] = {
      {"p10", 0.10}, {"p25", 0.25}, {"p50", 0.50}, {"p75", 0.75}, {"p90", 0.90}};
  rep.ok = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const auto key = std::make_pair(cells.at(c_alg), std::stoll(cells.at(c_t)));
    const auto it = groups.find(key);
    const std::vector<double> values = it == groups.end() ? std::vector<double>{} : it->second;
    if (static_cast<long long>(values.size()) != std::stoll(cells.at(c_n))) {
      rep.ok = false;
      rep.message = fmt::format("instance count mismatch for {} at t={}", key.first, key.second);
      return rep;
    }
    for (const auto& [name, p] : levels) {
      const double stored = std::stod(cells.at(column(idx, name)));
      const double recomputed = percentile(values, p);
      if (std::isnan(stored) && std::isnan(recomputed)) continue;
      rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(stored - recomputed));
    }
    ++rep.rows_checked;
  }
  if (rep.max_abs_diff > 1e-12) {
    rep.ok = false;
    rep.message = fmt::format("percentile mismatch up to {}", rep.max_abs_diff);
  }
  return rep;
}

}  // namespace pzos::harness
