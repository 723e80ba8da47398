#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pzos/problem.hpp"

namespace pzos {

enum class Algorithm { pzos, zos };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

/// Rank-one zeroth-order estimate of the follower Jacobian,
/// (dx / 2 mu) (y*(x + mu v) - y*(x - mu v)) v^T.
struct JacobianEstimate {
  Mat matrix;
  Vec direction;
  int queries_used = 2;
};

struct GradientSample {
  Vec vector;
  Algorithm kind = Algorithm::pzos;
  int queries_used = 0;
  /// y*(x) at the evaluation point; filled by the partial estimator only.
  Vec center_response;
  /// f(x, y*(x)) when the estimator evaluated it (partial estimator only).
  double center_value = 0.0;
  bool has_center = false;
};

/// Throws InvalidArgument unless | |v| - 1 | <= 1e-9.
void require_unit_direction(const Vec& v, Index dx);

JacobianEstimate jacobian_estimate(const FollowerOracle& oracle, const Vec& x, SmoothingRadius mu,
                                   const Vec& v);

/// Chain-rule estimator grad_x f + Hbar^T grad_y f at (x, y*(x)), with Hbar
/// the mean of the rank-one Jacobian estimates over `directions`.
/// Uses 2Q + 1 oracle calls.
GradientSample pzos_gradient(const LeaderObjective& leader, const FollowerOracle& oracle,
                             const Vec& x, SmoothingRadius mu, std::span<const Vec> directions);

/// Black-box two-point estimator of the composite, averaged over `directions`.
/// Uses 2Q oracle calls.
GradientSample zos_gradient(const LeaderObjective& leader, const FollowerOracle& oracle,
                            const Vec& x, SmoothingRadius mu, std::span<const Vec> directions);

GradientSample estimate_gradient(Algorithm kind, const LeaderObjective& leader,
                                 const FollowerOracle& oracle, const Vec& x, SmoothingRadius mu,
                                 std::span<const Vec> directions);

struct MomentEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::int64_t samples = 0;
};

/// Sample mean (and its standard error) of |g|^2 at a fixed x, each sample
/// drawn with a single fresh direction from `rng`.
MomentEstimate second_moment_probe(Algorithm kind, const LeaderObjective& leader,
                                   const FollowerOracle& oracle, const Vec& x, SmoothingRadius mu,
                                   std::int64_t n_samples, RngStream& rng);

}  // namespace pzos
