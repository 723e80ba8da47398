#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pzos/io.hpp"
#include "pzos/optimizer.hpp"
#include "pzos/routing.hpp"
#include "pzos/security.hpp"

namespace pzos::harness {

enum class Suite { routing, security, custom };

std::string_view to_string(Suite s);

struct AlgorithmEntry {
  Algorithm algorithm = Algorithm::pzos;
  int q = 1;

  /// "pzos", "zos", or "zos_q4" style when q > 1.
  std::string label() const;
  bool operator==(const AlgorithmEntry&) const = default;
};

/// Step size as a function of the leader dimension.
struct StepRule {
  StepSchedule::Kind kind = StepSchedule::Kind::constant;
  double scale = 0.01;
  /// Divide the scale by the dimension (0.7 / |E| style rules).
  bool per_dimension = false;
  /// When positive, dimensions above this use `large_scale` instead.
  Index large_dimension = 0;
  double large_scale = 0.0;

  StepSchedule for_dimension(Index dx) const;
};

struct RunTemplate {
  int iterations = 150;
  double mu = 0.5;
  StepRule step;
  bool project_nonnegative = false;
  /// Equilibrium tolerance (routing) or best-response tolerance (security).
  double follower_tol = 1e-6;
};

struct SecurityRange {
  Index min_targets = 2;
  Index max_targets = 100;
};

struct ExperimentSpec {
  Suite suite = Suite::routing;
  int instance_count = 20;
  routing::GeneratorParams routing_params;
  SecurityRange security_params;
  /// Instance documents, for the custom suite.
  std::vector<std::string> instance_files;
  std::vector<AlgorithmEntry> algorithms;
  RunTemplate run;
  std::vector<int> snapshots;
  std::vector<double> mu_grid;
  std::uint64_t master_seed = 1;
  int workers = 1;

  void validate() const;
};

/// 20 routing instances, lambda = 1, mu = 0.5, alpha = 0.7 / |E|, T = 150.
ExperimentSpec default_routing_spec();
/// 30 security instances with n in [2, 100], mu = 0.1, T = 500, Q = 1,
/// alpha_t = 0.05 / sqrt(t + 1) (0.03 above 100 targets), projection on.
ExperimentSpec default_security_spec();

/// JSON spec document. "suite" is required; every other field defaults to
/// that suite's default spec. Unknown keys are rejected at every level.
ExperimentSpec parse_spec(const std::string& text);
/// Canonical JSON form; parse_spec(dump_spec(s)) == s.
std::string dump_spec(const ExperimentSpec& spec);
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Stream that generates instance `index` of a suite.
std::uint64_t instance_stream_id(std::uint64_t master_seed, std::uint64_t index);
/// Stream of search directions for (instance, replicate). Shared by every
/// algorithm run on that instance.
std::uint64_t direction_stream_id(std::uint64_t master_seed, std::uint64_t index,
                                  std::uint64_t replicate);

struct RunRecord {
  AlgorithmEntry algorithm;
  Trajectory trajectory;
  std::vector<double> normalized;
};

struct InstanceRecord {
  int id = 0;
  Index dimension = 0;
  Sense sense = Sense::minimize;
  bool included = true;
  std::string reason;
  double lowest = 0.0;
  double highest = 0.0;
  bool degenerate = false;
  std::vector<RunRecord> runs;

  const RunRecord* find(const std::string& label) const;
};

/// Percentiles of normalized objective across included instances, either at
/// iteration t or at an algorithmic oracle-call budget.
struct AggregateRow {
  AlgorithmEntry algorithm;
  std::int64_t index = 0;
  double p10 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p90 = 0.0;
  int n_instances = 0;
};

struct SuiteResult {
  ExperimentSpec spec;
  std::vector<InstanceRecord> instances;
  std::vector<AggregateRow> by_iteration;
  std::vector<AggregateRow> by_oracle_calls;
  /// Labels whose runs set the normalization extremes.
  std::vector<std::string> normalization_set;
  std::string input_hash;
  double wall_seconds = 0.0;

  int included_count() const;
  int excluded_count() const;
  const AggregateRow* aggregate(const std::string& label, std::int64_t t) const;
};

/// Linear interpolation between order statistics at position p (n - 1).
double percentile(std::vector<double> values, double p);

/// Spacing of the oracle-call alignment grid (multiple of 3 and 8).
inline constexpr std::uint64_t kCallGridStep = 24;

/// Normalized value of the last iterate reached within `budget` algorithmic
/// oracle calls.
double value_at_budget(const RunRecord& run, std::uint64_t budget);

/// Runs every algorithm of the spec on every instance with shared directions,
/// normalizes per instance over all algorithms, and aggregates.
SuiteResult run_paired_suite(const ExperimentSpec& spec);

/// Keeps only the given algorithms, renormalizes over them and re-aggregates.
SuiteResult restrict_to(const SuiteResult& result, const std::vector<std::string>& labels);

/// Same suite with the leader constrained to x >= 0 by projection.
SuiteResult constrained_routing_suite(ExperimentSpec spec);

/// Alias of run_paired_suite for a spec whose algorithm list carries several
/// batch sizes; oracle-call aligned aggregates are always computed.
SuiteResult batch_sweep(const ExperimentSpec& spec);

struct MuResult {
  double mu = 0.0;
  SuiteResult result;
};

/// One paired suite per grid value (default grid 0.1, 0.5, 0.9, 2).
std::vector<MuResult> mu_sensitivity(const ExperimentSpec& spec);

struct VarianceRow {
  Index dx = 0;
  Algorithm estimator = Algorithm::pzos;
  double mean_sq_norm = 0.0;
  double standard_error = 0.0;
  std::int64_t n_samples = 0;
};

/// Second moments of both estimators at the initial defense of one security
/// instance per dimension, on a shared direction stream.
std::vector<VarianceRow> variance_sweep(const std::vector<Index>& dims, std::int64_t samples_per_dim,
                                        std::uint64_t master_seed, double mu = 0.1);

struct ProfileRow {
  Index dimension = 0;
  std::string algorithm;
  int snapshot = 0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  int n_instances = 0;
};

/// Security suites at fixed target counts; normalized objective at each
/// snapshot with its min/max band across instances.
std::vector<ProfileRow> dimension_profile(const ExperimentSpec& spec, const std::vector<Index>& dims);

struct DominanceRow {
  std::int64_t index = 0;
  double median_first = 0.0;
  double median_second = 0.0;
  /// Share of included instances where the first is at least as good.
  double fraction = 0.0;
};

/// Compares two algorithms at the given iterations, "better" meaning larger
/// normalized objective for maximization and smaller for minimization.
std::vector<DominanceRow> compare_at_iterations(const SuiteResult& result, const std::string& first,
                                                const std::string& second,
                                                const std::vector<int>& iterations);
DominanceRow compare_at_budget(const SuiteResult& result, const std::string& first,
                               const std::string& second, std::uint64_t budget);

std::string trajectory_csv(const SuiteResult& result);
std::string aggregate_csv(const std::vector<AggregateRow>& rows, const char* index_column = "t");
std::string variance_csv(const std::vector<VarianceRow>& rows);
std::string profile_csv(const std::vector<ProfileRow>& rows);
std::string summary_json(const SuiteResult& result);

/// trajectories.csv, aggregate.csv, aggregate_calls.csv and summary.json.
void write_suite(const SuiteResult& result, const std::filesystem::path& dir);

struct VerifyReport {
  bool ok = false;
  std::size_t rows_checked = 0;
  double max_abs_diff = 0.0;
  std::string message;
};

/// Recomputes the per-iteration percentiles from a trajectory CSV and
/// compares them with an aggregate CSV.
VerifyReport verify_aggregates(const std::string& trajectory_csv_text,
                               const std::string& aggregate_csv_text);

}  // namespace pzos::harness
