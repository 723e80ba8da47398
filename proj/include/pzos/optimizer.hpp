#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pzos/estimators.hpp"
#include "pzos/problem.hpp"

namespace pzos {

/// Step-size rule. `inverse_sqrt` uses alpha_t = c / sqrt(t + 1) for the
/// 0-based iteration index t.
struct StepSchedule {
  enum class Kind { constant, inverse_sqrt };

  Kind kind = Kind::constant;
  double scale = 0.0;

  static StepSchedule constant(double alpha) { return {Kind::constant, alpha}; }
  static StepSchedule inverse_sqrt(double c) { return {Kind::inverse_sqrt, c}; }

  double at(std::int64_t t) const;
};

struct RunConfig {
  Algorithm algorithm = Algorithm::pzos;
  int batch_q = 1;
  int iterations = 1;
  double mu = 0.1;
  StepSchedule step = StepSchedule::constant(0.01);
  bool project_nonnegative = false;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  Sense sense = Sense::minimize;
  /// Starting point; produced by the problem family.
  Vec x0;

  void validate() const;
};

/// Full record of one optimization run.
///
/// Index t runs over iterates 0..T. Per-step arrays (gradient norms, step
/// sizes, projection flags, direction hashes) have T entries. Oracle calls
/// are split into algorithmic calls (2Q+1 per step for pzos, 2Q for zos) and
/// instrumentation calls spent only on logging F(x_t).
struct Trajectory {
  RunConfig config;
  std::vector<Vec> iterates;
  std::vector<double> objective_values;
  std::vector<double> gradient_norms;
  std::vector<double> step_sizes;
  std::vector<std::uint8_t> projected;
  std::vector<std::uint64_t> oracle_calls_cumulative;
  std::vector<std::uint64_t> instrumentation_calls_cumulative;
  std::vector<std::uint64_t> direction_hashes;

  /// Number of completed update steps.
  std::int64_t steps() const { return static_cast<std::int64_t>(gradient_norms.size()); }
  std::int64_t projection_activations() const;
};

/// Componentwise max(x, 0). Returns true when any entry was clipped.
bool project_nonnegative(Vec& x);

/// Hash of the bit patterns of a batch of directions.
std::uint64_t hash_directions(std::span<const Vec> directions);

/// Runs PZOS / ZOS (batched when Q > 1). Directions are drawn from `rng`
/// iteration-major, Q per iteration, so two runs on equal streams see the same
/// directions regardless of algorithm.
Trajectory run(const LeaderObjective& leader, const FollowerOracle& oracle,
               const RunConfig& config, RngStream& rng);

/// Same, with the stream built from (config.seed, config.stream_id).
Trajectory run(const Problem& problem, const RunConfig& config);

struct SelectedIterate {
  std::int64_t index = 0;
  Vec x;
};

/// Output rule of the algorithms: x_R with R uniform on {0, ..., T-1}.
SelectedIterate select_uniform_iterate(const Trajectory& trajectory, RngStream& rng);

enum class StationarityTarget { partial, full };

struct TheoreticalParameters {
  double mu = 0.0;
  double iterations = 0.0;
  double alpha = 0.0;
  double C_p = 0.0;
  double C_f = 0.0;
  double L_F = 0.0;
  double sigma2 = 0.0;
  double Delta_mu = 0.0;
};

/// Smoothing radius, iteration count and step size from the convergence
/// theorem, with the universal constants k1 = k2 = 1.
TheoreticalParameters theoretical_parameters(const ProblemConstants& constants, Index dx,
                                             double delta, double epsilon,
                                             StationarityTarget target);

struct NormalizedSeries {
  std::vector<std::vector<double>> series;
  double lowest = 0.0;
  double highest = 0.0;
  /// All values equal: every entry mapped to 0.5.
  bool degenerate = false;
};

/// Maps each value to (F - F_lowest) / (F_highest - F_lowest) with the
/// extremes taken jointly over all series.
NormalizedSeries normalize_jointly(std::span<const std::vector<double>> values);
NormalizedSeries normalized_objective(std::span<const Trajectory> trajectories);

}  // namespace pzos
