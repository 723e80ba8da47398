#include "pzos/estimators.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pzos/errors.hpp"

namespace pzos {

std::string_view to_string(Algorithm a) { return a == Algorithm::pzos ? "pzos" : "zos"; }

Algorithm parse_algorithm(std::string_view name) {
  if (name == "pzos") return Algorithm::pzos;
  if (name == "zos") return Algorithm::zos;
  throw InvalidArgument(fmt::format("unknown algorithm '{}'", name));
}

void require_unit_direction(const Vec& v, Index dx) {
  if (v.size() != dx) {
    throw InvalidArgument(fmt::format("direction has length {}, expected {}", v.size(), dx));
  }
  if (std::abs(v.norm() - 1.0) > 1e-9) {
    throw InvalidArgument(fmt::format("direction is not unit length (norm {})", v.norm()));
  }
}

namespace {

void require_batch(std::span<const Vec> directions, Index dx) {
  if (directions.empty()) {
    throw InvalidArgument("estimator needs at least one direction");
  }
  for (const Vec& v : directions) {
    require_unit_direction(v, dx);
  }
}

}  // namespace

JacobianEstimate jacobian_estimate(const FollowerOracle& oracle, const Vec& x, SmoothingRadius mu,
                                   const Vec& v) {
  require_unit_direction(v, oracle.dx());
  const double m = mu.value();
  const Vec diff = oracle.respond(x + m * v) - oracle.respond(x - m * v);
  JacobianEstimate out;
  out.matrix = (static_cast<double>(oracle.dx()) / (2.0 * m)) * diff * v.transpose();
  out.direction = v;
  return out;
}

GradientSample pzos_gradient(const LeaderObjective& leader, const FollowerOracle& oracle,
                             const Vec& x, SmoothingRadius mu, std::span<const Vec> directions) {
  require_batch(directions, oracle.dx());
  // Center query first, then the batch.
  const Vec y = oracle.respond(x);
  Mat jac_mean = Mat::Zero(oracle.dy(), oracle.dx());
  for (const Vec& v : directions) {
    jac_mean += jacobian_estimate(oracle, x, mu, v).matrix;
  }
  jac_mean /= static_cast<double>(directions.size());

  GradientSample out;
  out.kind = Algorithm::pzos;
  out.vector = leader.grad_x(x, y) + jac_mean.transpose() * leader.grad_y(x, y);
  out.queries_used = 2 * static_cast<int>(directions.size()) + 1;
  out.center_value = leader.eval(x, y);
  out.center_response = y;
  out.has_center = true;
  return out;
}

GradientSample zos_gradient(const LeaderObjective& leader, const FollowerOracle& oracle,
                            const Vec& x, SmoothingRadius mu, std::span<const Vec> directions) {
  require_batch(directions, oracle.dx());
  const double m = mu.value();
  const double scale = static_cast<double>(oracle.dx()) / (2.0 * m);
  Vec g = Vec::Zero(oracle.dx());
  for (const Vec& v : directions) {
    const Vec xp = x + m * v;
    const Vec xm = x - m * v;
    const double fp = leader.eval(xp, oracle.respond(xp));
    const double fm = leader.eval(xm, oracle.respond(xm));
    g += (scale * (fp - fm)) * v;
  }
  g /= static_cast<double>(directions.size());

  GradientSample out;
  out.kind = Algorithm::zos;
  out.vector = std::move(g);
  out.queries_used = 2 * static_cast<int>(directions.size());
  return out;
}

GradientSample estimate_gradient(Algorithm kind, const LeaderObjective& leader,
                                 const FollowerOracle& oracle, const Vec& x, SmoothingRadius mu,
                                 std::span<const Vec> directions) {
  return kind == Algorithm::pzos ? pzos_gradient(leader, oracle, x, mu, directions)
                                 : zos_gradient(leader, oracle, x, mu, directions);
}

MomentEstimate second_moment_probe(Algorithm kind, const LeaderObjective& leader,
                                   const FollowerOracle& oracle, const Vec& x, SmoothingRadius mu,
                                   std::int64_t n_samples, RngStream& rng) {
  if (n_samples < 2) {
    throw InvalidArgument("second_moment_probe needs n_samples >= 2");
  }
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t k = 1; k <= n_samples; ++k) {
    const Vec v = sample_unit_sphere(rng, oracle.dx());
    const double sq =
        estimate_gradient(kind, leader, oracle, x, mu, std::span<const Vec>(&v, 1)).vector.squaredNorm();
    const double delta = sq - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (sq - mean);
  }
  const double n = static_cast<double>(n_samples);
  MomentEstimate out;
  out.mean = mean;
  out.standard_error = std::sqrt(m2 / (n - 1.0) / n);
  out.samples = n_samples;
  return out;
}

}  // namespace pzos
