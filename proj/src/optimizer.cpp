#include "pzos/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>

#include <fmt/format.h>

#include "pzos/errors.hpp"

namespace pzos {

namespace {

constexpr double kDivergenceNorm = 1e12;

}  // namespace

double StepSchedule::at(std::int64_t t) const {
  switch (kind) {
    case Kind::constant:
      return scale;
    case Kind::inverse_sqrt:
      return scale / std::sqrt(static_cast<double>(t) + 1.0);
  }
  return scale;
}

void RunConfig::validate() const {
  if (batch_q < 1) throw InvalidArgument("batch size Q must be >= 1");
  if (iterations < 1) throw InvalidArgument("iteration count T must be >= 1");
  if (!(mu > 0.0)) throw InvalidArgument("smoothing radius mu must be > 0");
  if (!(step.scale > 0.0)) throw InvalidArgument("step size must be > 0");
  if (x0.size() == 0) throw InvalidArgument("run config has no starting point");
}

std::int64_t Trajectory::projection_activations() const {
  return std::count(projected.begin(), projected.end(), std::uint8_t{1});
}

bool project_nonnegative(Vec& x) {
  bool clipped = false;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) {
      x[i] = 0.0;
      clipped = true;
    }
  }
  return clipped;
}

std::uint64_t hash_directions(std::span<const Vec> directions) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const Vec& v : directions) {
    for (Index i = 0; i < v.size(); ++i) {
      h = mix64(h ^ std::bit_cast<std::uint64_t>(v[i]));
    }
  }
  return h;
}

Trajectory run(const LeaderObjective& leader, const FollowerOracle& oracle,
               const RunConfig& config, RngStream& rng) {
  config.validate();
  if (config.x0.size() != oracle.dx()) {
    throw InvalidArgument(
        fmt::format("starting point has length {}, oracle expects {}", config.x0.size(), oracle.dx()));
  }
  const SmoothingRadius mu(config.mu);
  const double sign = config.sense == Sense::minimize ? -1.0 : 1.0;
  const auto steps = static_cast<std::size_t>(config.iterations);

  Trajectory traj;
  traj.config = config;
  traj.iterates.reserve(steps + 1);
  traj.objective_values.reserve(steps + 1);
  traj.iterates.push_back(config.x0);
  traj.oracle_calls_cumulative.push_back(0);
  traj.instrumentation_calls_cumulative.push_back(0);

  auto diverged = [&](const std::string& why) {
    auto prefix = std::make_shared<Trajectory>(traj);
    // Keep the prefix consistent: drop iterates whose objective is unknown.
    prefix->iterates.resize(prefix->objective_values.size());
    prefix->oracle_calls_cumulative.resize(prefix->objective_values.size());
    prefix->instrumentation_calls_cumulative.resize(prefix->objective_values.size());
    return DivergedError(why, std::move(prefix));
  };

  std::vector<Vec> directions(static_cast<std::size_t>(config.batch_q));
  Vec x = config.x0;
  std::uint64_t algorithmic = 0;
  std::uint64_t instrumentation = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    for (Vec& v : directions) {
      v = sample_unit_sphere(rng, oracle.dx());
    }
    const GradientSample g = estimate_gradient(config.algorithm, leader, oracle, x, mu, directions);
    algorithmic += static_cast<std::uint64_t>(g.queries_used);

    double value = g.center_value;
    if (!g.has_center) {
      value = leader.eval(x, oracle.respond(x));
      ++instrumentation;
    }
    traj.objective_values.push_back(value);
    if (!std::isfinite(value) || !g.vector.allFinite()) {
      throw diverged(fmt::format("non-finite objective or gradient at iteration {}", t));
    }

    const double alpha = config.step.at(static_cast<std::int64_t>(t));
    x += (sign * alpha) * g.vector;
    const bool clipped = config.project_nonnegative && project_nonnegative(x);

    traj.gradient_norms.push_back(g.vector.norm());
    traj.step_sizes.push_back(alpha);
    traj.projected.push_back(clipped ? 1 : 0);
    traj.direction_hashes.push_back(hash_directions(directions));
    if (!x.allFinite() || x.norm() > kDivergenceNorm) {
      throw diverged(fmt::format("iterate diverged at iteration {} (norm {})", t + 1, x.norm()));
    }
    traj.iterates.push_back(x);
    traj.oracle_calls_cumulative.push_back(algorithmic);
    traj.instrumentation_calls_cumulative.push_back(instrumentation);
  }

  const double final_value = leader.eval(x, oracle.respond(x));
  ++instrumentation;
  traj.instrumentation_calls_cumulative.back() = instrumentation;
  traj.objective_values.push_back(final_value);
  if (!std::isfinite(final_value)) {
    throw diverged("non-finite objective at the final iterate");
  }
  return traj;
}

Trajectory run(const Problem& problem, const RunConfig& config) {
  RngStream rng(config.seed, config.stream_id);
  return run(*problem.leader, *problem.oracle, config, rng);
}

SelectedIterate select_uniform_iterate(const Trajectory& trajectory, RngStream& rng) {
  const std::int64_t steps = trajectory.steps();
  if (steps < 1 || trajectory.iterates.size() < static_cast<std::size_t>(steps)) {
    throw InvalidArgument("cannot select an iterate from an empty trajectory");
  }
  SelectedIterate out;
  out.index = rng.next_int(0, steps - 1);
  out.x = trajectory.iterates[static_cast<std::size_t>(out.index)];
  return out;
}

TheoreticalParameters theoretical_parameters(const ProblemConstants& c, Index dx, double delta,
                                             double epsilon, StationarityTarget target) {
  c.validate();
  if (!(epsilon > 0.0) || !(delta > 0.0)) {
    throw InvalidArgument("epsilon and delta must be positive");
  }
  if (!(c.L_f > 0.0 && c.L_g > 0.0 && c.L_y > 0.0 && c.Delta > 0.0)) {
    throw InvalidArgument("theoretical parameters need strictly positive constants");
  }
  if (dx < 1) {
    throw InvalidArgument("dimension must be >= 1");
  }
  TheoreticalParameters p;
  p.C_p = c.L_g * (1.0 + c.L_y) * c.L_y;
  p.C_f = (1.0 + c.L_y) * c.L_g * (1.0 + 2.0 * c.L_y);
  const double d = static_cast<double>(dx);
  double factor = 0.0;
  if (target == StationarityTarget::partial) {
    p.mu = std::min(delta, epsilon / (std::sqrt(2.0) * p.C_p));
    factor = 32.0;
  } else {
    p.mu = std::min(delta, epsilon / (2.0 * p.C_f));
    factor = 512.0;
  }
  p.Delta_mu = c.Delta + 2.0 * c.L_f * c.L_y * p.mu;
  p.L_F = c.L_g * (1.0 + c.L_y) * (1.0 + c.L_y) + c.L_f * c.L_y * std::sqrt(d) / p.mu;
  p.sigma2 = d * c.L_f * c.L_f * c.L_y * c.L_y + c.L_f * c.L_f * (1.0 + 2.0 * c.L_y);
  p.iterations = std::ceil(factor * p.Delta_mu * p.L_F * p.sigma2 / std::pow(epsilon, 4));
  p.alpha = std::sqrt(2.0 * p.Delta_mu / (p.iterations * p.L_F * p.sigma2));
  return p;
}

NormalizedSeries normalize_jointly(std::span<const std::vector<double>> values) {
  if (values.empty()) {
    throw InvalidArgument("normalization needs at least one series");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : values) {
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  NormalizedSeries out;
  out.lowest = lo;
  out.highest = hi;
  out.degenerate = !(hi > lo);
  out.series.reserve(values.size());
  for (const auto& s : values) {
    std::vector<double> n(s.size(), 0.5);
    if (!out.degenerate) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        n[i] = (s[i] - lo) / (hi - lo);
      }
    }
    out.series.push_back(std::move(n));
  }
  return out;
}

NormalizedSeries normalized_objective(std::span<const Trajectory> trajectories) {
  std::vector<std::vector<double>> values;
  values.reserve(trajectories.size());
  for (const Trajectory& t : trajectories) {
    values.push_back(t.objective_values);
  }
  return normalize_jointly(values);
}

}  // namespace pzos
