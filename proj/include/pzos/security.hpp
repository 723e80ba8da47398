#pragma once

#include <cstdint>
#include <memory>

#include "pzos/problem.hpp"

namespace pzos::security {

/// Defense-attack game over n targets. Attack success on target i is
/// y_i / (x_i + y_i + b_i).
struct SecurityInstance {
  Vec w;   // attacker values
  Vec v;   // defender values
  Vec b;   // baseline security
  Vec cA;  // attacker quadratic cost
  Vec cD;  // defender quadratic cost
  double budget = 0.0;
  std::uint64_t seed = 0;

  Index targets() const { return w.size(); }
  /// Throws InvalidArgument on length mismatch or non-positive entries.
  /// A zero budget is allowed.
  void validate() const;
};

struct AttackerResponse {
  Vec y;
  double dual_lambda = 0.0;
  double kkt_residual = 0.0;
};

struct BestResponseOptions {
  double tol = 1e-8;
  /// Scales the per-target upper bracket. Only the uniqueness test changes it.
  double bracket_inflation = 1.0;
};

/// Attacker utility sum_i w_i p_i - cA_i y_i^2 / 2.
double attacker_utility(const SecurityInstance& instance, const Vec& x, const Vec& y);

/// Budget-constrained attacker best response by bisection on the budget
/// multiplier, each target solved by Newton steps safeguarded by bisection.
/// Requires x_i + b_i > 0 (estimators query slightly negative defenses).
AttackerResponse attacker_best_response(const SecurityInstance& instance, const Vec& x,
                                        const BestResponseOptions& options = {});

/// Max of stationarity, primal and complementarity residuals of (y, lambda).
double kkt_residual(const SecurityInstance& instance, const Vec& x, const Vec& y, double lambda);

/// Expected damage plus investment: sum v_i p_i + cD_i x_i^2 / 2.
LeaderEvaluation defender_objective_and_grads(const SecurityInstance& instance, const Vec& x,
                                              const Vec& y);

/// Attacker effort solving w (y + b) / (2y + b)^2 = cA y, i.e. the
/// unconstrained response when the defender mirrors the attack.
double mirrored_effort(double w, double b, double cA);

/// w, v ~ U[1,5], b ~ U[0.1,0.5], cA, cD ~ U[0.1,0.3] drawn target by target;
/// budget is half the total mirrored effort.
SecurityInstance generate_security_instance(RngStream& rng, Index n);

/// Per target, the minimizer of v b / (x + 2b) + cD x^2 / 2 over x >= 0,
/// i.e. the best defense against an attack of effort b.
Vec initial_defense(const SecurityInstance& instance);

/// Defense -> attacker best response.
class AttackerOracle final : public FollowerOracle {
 public:
  explicit AttackerOracle(std::shared_ptr<const SecurityInstance> instance,
                          BestResponseOptions options = {});

  /// y >= 0 and sum y <= budget, within kFeasibilityTol.
  bool is_feasible(const Vec& y) const override;
  const SecurityInstance& instance() const { return *instance_; }

 protected:
  Vec solve(const Vec& x) const override;

 private:
  std::shared_ptr<const SecurityInstance> instance_;
  BestResponseOptions options_;
};

class DefenderObjective final : public LeaderObjective {
 public:
  explicit DefenderObjective(std::shared_ptr<const SecurityInstance> instance);

  double eval(const Vec& x, const Vec& y) const override;
  Vec grad_x(const Vec& x, const Vec& y) const override;
  Vec grad_y(const Vec& x, const Vec& y) const override;

 private:
  std::shared_ptr<const SecurityInstance> instance_;
};

Problem make_security_problem(std::shared_ptr<const SecurityInstance> instance,
                              BestResponseOptions options = {});

}  // namespace pzos::security
