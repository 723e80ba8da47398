#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "pzos/sampling.hpp"

namespace pzos {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Eigen::Index;

enum class Sense { minimize, maximize };

/// Membership tolerance for the follower feasible set.
inline constexpr double kFeasibilityTol = 1e-8;

/// Black-box follower response x -> y*(x).
///
/// Implementations override `solve` and `is_feasible`. `respond` is the only
/// query entry point: it counts calls and attaches the query point to any
/// failure. Apart from the counter an oracle is immutable, so concurrent
/// queries are safe.
class FollowerOracle {
 public:
  FollowerOracle(Index dx, Index dy);
  virtual ~FollowerOracle() = default;

  FollowerOracle(const FollowerOracle&) = delete;
  FollowerOracle& operator=(const FollowerOracle&) = delete;

  Index dx() const { return dx_; }
  Index dy() const { return dy_; }

  Vec respond(const Vec& x) const;

  /// Whether y lies in the follower feasible set, within kFeasibilityTol.
  virtual bool is_feasible(const Vec& y) const = 0;

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() const { calls_.store(0, std::memory_order_relaxed); }

 protected:
  virtual Vec solve(const Vec& x) const = 0;

 private:
  Index dx_;
  Index dy_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Leader cost f(x, y) with exact partial gradients.
class LeaderObjective {
 public:
  virtual ~LeaderObjective() = default;

  virtual double eval(const Vec& x, const Vec& y) const = 0;
  virtual Vec grad_x(const Vec& x, const Vec& y) const = 0;
  virtual Vec grad_y(const Vec& x, const Vec& y) const = 0;
  virtual Sense sense() const { return Sense::minimize; }
};

/// Oracle backed by a callable; used for synthetic test problems and bindings.
class FunctionOracle final : public FollowerOracle {
 public:
  using Response = std::function<Vec(const Vec&)>;
  using Feasibility = std::function<bool(const Vec&)>;

  FunctionOracle(Index dx, Index dy, Response response, Feasibility feasible = {});

  bool is_feasible(const Vec& y) const override;

 protected:
  Vec solve(const Vec& x) const override;

 private:
  Response response_;
  Feasibility feasible_;
};

class FunctionObjective final : public LeaderObjective {
 public:
  using Value = std::function<double(const Vec&, const Vec&)>;
  using Gradient = std::function<Vec(const Vec&, const Vec&)>;

  FunctionObjective(Value value, Gradient grad_x, Gradient grad_y,
                    Sense sense = Sense::minimize);

  double eval(const Vec& x, const Vec& y) const override { return value_(x, y); }
  Vec grad_x(const Vec& x, const Vec& y) const override { return grad_x_(x, y); }
  Vec grad_y(const Vec& x, const Vec& y) const override { return grad_y_(x, y); }
  Sense sense() const override { return sense_; }

 private:
  Value value_;
  Gradient grad_x_;
  Gradient grad_y_;
  Sense sense_;
};

/// A leader/follower pair plus its canonical starting point.
struct Problem {
  std::shared_ptr<const LeaderObjective> leader;
  std::shared_ptr<const FollowerOracle> oracle;
  Vec x0;
  std::string name;

  Index dx() const { return oracle->dx(); }
  /// F(x) = f(x, y*(x)); costs one oracle call.
  double composite(const Vec& x) const;
};

/// Value and partial gradients of a leader cost at one (x, y).
struct LeaderEvaluation {
  double value = 0.0;
  Vec grad_x;
  Vec grad_y;
};

/// Lipschitz and suboptimality constants of a problem. Only the theoretical
/// parameter helper reads these.
struct ProblemConstants {
  double L_f = 0.0;
  double L_g = 0.0;
  double L_y = 0.0;
  double Delta = 0.0;

  void validate() const;
};

/// Strictly positive smoothing radius. Checked once, at construction.
class SmoothingRadius {
 public:
  explicit SmoothingRadius(double mu);
  double value() const { return mu_; }

 private:
  double mu_;
};

struct MonteCarloEstimate {
  Vec mean;
  /// Per-coordinate standard error of the mean (zero when n == 1).
  Vec standard_error;
  std::int64_t samples = 0;
};

/// Monte-Carlo estimate of the smoothed response E_u[y*(x + mu u)], u uniform
/// on the unit ball. Test and diagnostics only: the optimizers never use it.
MonteCarloEstimate smoothed_response_mc(const FollowerOracle& oracle, const Vec& x,
                                        SmoothingRadius mu, std::int64_t n_samples,
                                        RngStream& rng);

/// True iff every running average of ball-perturbed responses is feasible.
bool check_smoothing_feasibility(const FollowerOracle& oracle, const Vec& x,
                                 SmoothingRadius mu, std::int64_t n_samples, RngStream& rng);

/// Empirical Lipschitz constant of y*: the largest ratio
/// |y*(x1) - y*(x2)| / |x1 - x2| over random pairs x1 = center + radius*u,
/// x2 = x1 + radius*u' (u, u' uniform on the ball).
double estimate_response_lipschitz(const FollowerOracle& oracle, const Vec& center,
                                   double radius, std::int64_t pairs, RngStream& rng);

}  // namespace pzos
