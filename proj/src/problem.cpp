#include "pzos/problem.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pzos/errors.hpp"

namespace pzos {

FollowerOracle::FollowerOracle(Index dx, Index dy) : dx_(dx), dy_(dy) {
  if (dx < 1 || dy < 1) {
    throw InvalidArgument("oracle dimensions must be >= 1");
  }
}

Vec FollowerOracle::respond(const Vec& x) const {
  if (x.size() != dx_) {
    throw InvalidArgument(fmt::format("oracle query has length {}, expected {}", x.size(), dx_));
  }
  calls_.fetch_add(1, std::memory_order_relaxed);
  try {
    Vec y = solve(x);
    if (y.size() != dy_) {
      throw SolverError(fmt::format("oracle returned length {}, expected {}", y.size(), dy_));
    }
    return y;
  } catch (const OracleError&) {
    throw;
  } catch (const std::exception& e) {
    throw OracleError(fmt::format("follower oracle failed: {}", e.what()), x);
  }
}

FunctionOracle::FunctionOracle(Index dx, Index dy, Response response, Feasibility feasible)
    : FollowerOracle(dx, dy), response_(std::move(response)), feasible_(std::move(feasible)) {
  if (!response_) {
    throw InvalidArgument("FunctionOracle needs a response callable");
  }
}

bool FunctionOracle::is_feasible(const Vec& y) const {
  return feasible_ ? feasible_(y) : y.allFinite();
}

Vec FunctionOracle::solve(const Vec& x) const { return response_(x); }

FunctionObjective::FunctionObjective(Value value, Gradient grad_x, Gradient grad_y, Sense sense)
    : value_(std::move(value)),
      grad_x_(std::move(grad_x)),
      grad_y_(std::move(grad_y)),
      sense_(sense) {}

double Problem::composite(const Vec& x) const { return leader->eval(x, oracle->respond(x)); }

void ProblemConstants::validate() const {
  if (!(L_f >= 0.0 && L_g >= 0.0 && L_y >= 0.0 && Delta >= 0.0)) {
    throw InvalidArgument("problem constants must be nonnegative");
  }
}

SmoothingRadius::SmoothingRadius(double mu) : mu_(mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw InvalidArgument(fmt::format("smoothing radius must be positive and finite, got {}", mu));
  }
}

MonteCarloEstimate smoothed_response_mc(const FollowerOracle& oracle, const Vec& x,
                                        SmoothingRadius mu, std::int64_t n_samples,
                                        RngStream& rng) {
  if (n_samples < 1) {
    throw InvalidArgument("smoothed_response_mc needs n_samples >= 1");
  }
  // Welford accumulation per coordinate.
  Vec mean = Vec::Zero(oracle.dy());
  Vec m2 = Vec::Zero(oracle.dy());
  for (std::int64_t k = 1; k <= n_samples; ++k) {
    const Vec u = sample_unit_ball(rng, oracle.dx());
    const Vec y = oracle.respond(x + mu.value() * u);
    const Vec delta = y - mean;
    mean += delta / static_cast<double>(k);
    m2.array() += delta.array() * (y - mean).array();
  }
  MonteCarloEstimate out;
  out.mean = mean;
  out.samples = n_samples;
  if (n_samples > 1) {
    const double n = static_cast<double>(n_samples);
    out.standard_error = (m2.array() / (n - 1.0) / n).sqrt().matrix();
  } else {
    out.standard_error = Vec::Zero(oracle.dy());
  }
  return out;
}

bool check_smoothing_feasibility(const FollowerOracle& oracle, const Vec& x,
                                 SmoothingRadius mu, std::int64_t n_samples, RngStream& rng) {
  if (n_samples < 1) {
    throw InvalidArgument("check_smoothing_feasibility needs n_samples >= 1");
  }
  Vec sum = Vec::Zero(oracle.dy());
  bool ok = true;
  for (std::int64_t k = 1; k <= n_samples; ++k) {
    sum += oracle.respond(x + mu.value() * sample_unit_ball(rng, oracle.dx()));
    if (!oracle.is_feasible(sum / static_cast<double>(k))) {
      ok = false;
    }
  }
  return ok;
}

double estimate_response_lipschitz(const FollowerOracle& oracle, const Vec& center,
                                   double radius, std::int64_t pairs, RngStream& rng) {
  if (pairs < 1 || !(radius > 0.0)) {
    throw InvalidArgument("estimate_response_lipschitz: need pairs >= 1 and radius > 0");
  }
  double best = 0.0;
  for (std::int64_t k = 0; k < pairs; ++k) {
    const Vec x1 = center + radius * sample_unit_ball(rng, oracle.dx());
    const Vec x2 = x1 + radius * sample_unit_ball(rng, oracle.dx());
    const double dist = (x1 - x2).norm();
    if (dist < 1e-12) {
      continue;
    }
    const double ratio = (oracle.respond(x1) - oracle.respond(x2)).norm() / dist;
    best = std::max(best, ratio);
  }
  return best;
}

}  // namespace pzos
