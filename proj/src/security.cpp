#include "pzos/security.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pzos/errors.hpp"

namespace pzos::security {

namespace {

constexpr int kMaxIterations = 300;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Root of a strictly decreasing g on [lo, hi] with g(lo) >= 0 >= g(hi).
template <class G>
double bisect_decreasing(G g, double lo, double hi) {
  for (int k = 0; k < kMaxIterations; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Marginal attack payoff on one target: w c / (c + y)^2 - cA y with c = x + b.
struct TargetMarginal {
  double w;
  double c;
  double cA;

  double value(double y) const {
    const double s = c + y;
    return w * c / (s * s) - cA * y;
  }
  double slope(double y) const {
    const double s = c + y;
    return -2.0 * w * c / (s * s * s) - cA;
  }
  double at_zero() const { return w / c; }
};

// Effort on one target for multiplier lambda: the root of value(y) = lambda,
// or zero when the marginal payoff at zero is already below lambda.
double target_effort(const TargetMarginal& m, double lambda, double hi, int target) {
  if (m.at_zero() <= lambda) return 0.0;
  for (int k = 0; m.value(hi) > lambda; ++k) {
    if (k > 200) {
      throw SolverError(fmt::format("no upper bracket for attacker effort on target {}", target));
    }
    hi *= 2.0;
  }
  double lo = 0.0;
  double y = 0.0;
  const double ftol = 4.0 * kEps * (m.at_zero() + lambda);
  for (int k = 0; k < kMaxIterations; ++k) {
    const double g = m.value(y) - lambda;
    if (g > 0.0) {
      lo = y;
    } else {
      hi = y;
    }
    if (std::abs(g) <= ftol || hi - lo <= 2.0 * kEps * std::max(1.0, hi)) break;
    double next = y - g / m.slope(y);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == y) break;
    y = next;
  }
  return y;
}

void check_defense(const SecurityInstance& inst, const Vec& x) {
  if (x.size() != inst.targets()) {
    throw InvalidArgument(
        fmt::format("defense has length {}, instance has {} targets", x.size(), inst.targets()));
  }
  for (Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !(x[i] + inst.b[i] > 0.0)) {
      throw InvalidArgument(
          fmt::format("defense on target {} is {}, needs x + b > 0 (b = {})", i, x[i], inst.b[i]));
    }
  }
}

}  // namespace

void SecurityInstance::validate() const {
  const Index n = w.size();
  if (n < 1) throw InvalidArgument("security instance needs at least one target");
  for (const Vec* p : {&v, &b, &cA, &cD}) {
    if (p->size() != n) throw InvalidArgument("security parameter vectors differ in length");
  }
  for (const Vec* p : {&w, &v, &b, &cA, &cD}) {
    if (!p->allFinite() || !(p->minCoeff() > 0.0)) {
      throw InvalidArgument("security parameters must be finite and positive");
    }
  }
  if (!std::isfinite(budget) || budget < 0.0) {
    throw InvalidArgument("attacker budget must be finite and nonnegative");
  }
}

double attacker_utility(const SecurityInstance& inst, const Vec& x, const Vec& y) {
  double u = 0.0;
  for (Index i = 0; i < inst.targets(); ++i) {
    u += inst.w[i] * y[i] / (x[i] + y[i] + inst.b[i]) - 0.5 * inst.cA[i] * y[i] * y[i];
  }
  return u;
}

double kkt_residual(const SecurityInstance& inst, const Vec& x, const Vec& y, double lambda) {
  double r = 0.0;
  for (Index i = 0; i < inst.targets(); ++i) {
    const TargetMarginal m{inst.w[i], x[i] + inst.b[i], inst.cA[i]};
    const double g = m.value(std::max(y[i], 0.0)) - lambda;
    r = std::max(r, y[i] > 1e-8 ? std::abs(g) : std::max(g, 0.0));
    r = std::max(r, -y[i]);
  }
  const double slack = inst.budget - y.sum();
  r = std::max(r, -slack);
  r = std::max(r, lambda * std::abs(slack));
  r = std::max(r, -lambda);
  return r;
}

AttackerResponse attacker_best_response(const SecurityInstance& inst, const Vec& x,
                                        const BestResponseOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("best-response tolerance must be positive");
  if (!(options.bracket_inflation >= 1.0)) {
    throw InvalidArgument("bracket inflation must be >= 1");
  }
  check_defense(inst, x);
  const Index n = inst.targets();
  std::vector<TargetMarginal> marg;
  std::vector<double> bracket;
  marg.reserve(static_cast<std::size_t>(n));
  double lambda_max = 0.0;
  for (Index i = 0; i < n; ++i) {
    marg.push_back({inst.w[i], x[i] + inst.b[i], inst.cA[i]});
    bracket.push_back(options.bracket_inflation *
                      (std::sqrt(inst.w[i] / (inst.cA[i] * inst.b[i])) + inst.budget));
    lambda_max = std::max(lambda_max, marg.back().at_zero());
  }

  Vec y(n);
  auto efforts = [&](double lambda) {
    for (Index i = 0; i < n; ++i) {
      y[i] = target_effort(marg[static_cast<std::size_t>(i)], lambda,
                           bracket[static_cast<std::size_t>(i)], static_cast<int>(i));
    }
    return y.sum();
  };

  AttackerResponse out;
  if (inst.budget <= 0.0) {
    out.y = Vec::Zero(n);
    out.dual_lambda = lambda_max;
    out.kkt_residual = kkt_residual(inst, x, out.y, out.dual_lambda);
    return out;
  }

  double lambda = 0.0;
  double total = efforts(0.0);
  if (total > inst.budget) {
    // Sum of efforts is decreasing in lambda and vanishes at lambda_max.
    double lo = 0.0;
    double hi = lambda_max;
    const double ftol = 4.0 * kEps * (1.0 + inst.budget) * static_cast<double>(n);
    for (int k = 0; k < kMaxIterations; ++k) {
      const double h = total - inst.budget;
      if (h > 0.0) {
        lo = lambda;
      } else {
        hi = lambda;
      }
      if (std::abs(h) <= ftol || hi - lo <= 2.0 * kEps * std::max(1.0, hi)) break;
      double dh = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (y[i] > 0.0) dh += 1.0 / marg[static_cast<std::size_t>(i)].slope(y[i]);
      }
      double next = dh < 0.0 ? lambda - h / dh : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == lambda) break;
      lambda = next;
      total = efforts(lambda);
    }
    if (total > inst.budget) y *= inst.budget / total;
  }
  out.y = y;
  out.dual_lambda = lambda;
  out.kkt_residual = kkt_residual(inst, x, out.y, lambda);
  if (!(out.kkt_residual <= options.tol * (1.0 + inst.budget))) {
    throw SolverError(
        fmt::format("attacker best response KKT residual {:.3e} above tolerance", out.kkt_residual));
  }
  return out;
}

LeaderEvaluation defender_objective_and_grads(const SecurityInstance& inst, const Vec& x,
                                              const Vec& y) {
  const Index n = inst.targets();
  if (x.size() != n || y.size() != n) {
    throw InvalidArgument("defender objective: x and y must have one entry per target");
  }
  LeaderEvaluation out;
  out.grad_x.resize(n);
  out.grad_y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double s = x[i] + y[i] + inst.b[i];
    out.value += inst.v[i] * y[i] / s + 0.5 * inst.cD[i] * x[i] * x[i];
    out.grad_x[i] = -inst.v[i] * y[i] / (s * s) + inst.cD[i] * x[i];
    out.grad_y[i] = inst.v[i] * (x[i] + inst.b[i]) / (s * s);
  }
  return out;
}

double mirrored_effort(double w, double b, double cA) {
  const auto g = [&](double y) {
    const double s = 2.0 * y + b;
    return w * (y + b) / (s * s) - cA * y;
  };
  return bisect_decreasing(g, 0.0, std::sqrt(w / (2.0 * cA)) + 1.0);
}

SecurityInstance generate_security_instance(RngStream& rng, Index n) {
  if (n < 1) throw InvalidArgument("security instance needs n >= 1");
  SecurityInstance inst;
  inst.seed = rng.seed();
  for (Vec* p : {&inst.w, &inst.v, &inst.b, &inst.cA, &inst.cD}) p->resize(n);
  for (Index i = 0; i < n; ++i) {
    inst.w[i] = rng.next_uniform(1.0, 5.0);
    inst.v[i] = rng.next_uniform(1.0, 5.0);
    inst.b[i] = rng.next_uniform(0.1, 0.5);
    inst.cA[i] = rng.next_uniform(0.1, 0.3);
    inst.cD[i] = rng.next_uniform(0.1, 0.3);
  }
  double total = 0.0;
  for (Index i = 0; i < n; ++i) total += mirrored_effort(inst.w[i], inst.b[i], inst.cA[i]);
  inst.budget = 0.5 * total;
  inst.validate();
  return inst;
}

Vec initial_defense(const SecurityInstance& inst) {
  Vec x(inst.targets());
  for (Index i = 0; i < inst.targets(); ++i) {
    const double vb = inst.v[i] * inst.b[i];
    const double b2 = 2.0 * inst.b[i];
    const double cD = inst.cD[i];
    const auto g = [&](double z) { return vb / ((z + b2) * (z + b2)) - cD * z; };
    x[i] = bisect_decreasing(g, 0.0, std::cbrt(vb / cD) + 1.0);
  }
  return x;
}

AttackerOracle::AttackerOracle(std::shared_ptr<const SecurityInstance> instance,
                               BestResponseOptions options)
    : FollowerOracle(instance->targets(), instance->targets()),
      instance_(std::move(instance)),
      options_(options) {}

bool AttackerOracle::is_feasible(const Vec& y) const {
  if (y.size() != instance_->targets() || !y.allFinite()) return false;
  return y.minCoeff() >= -kFeasibilityTol && y.sum() <= instance_->budget + kFeasibilityTol;
}

Vec AttackerOracle::solve(const Vec& x) const {
  return attacker_best_response(*instance_, x, options_).y;
}

DefenderObjective::DefenderObjective(std::shared_ptr<const SecurityInstance> instance)
    : instance_(std::move(instance)) {}

double DefenderObjective::eval(const Vec& x, const Vec& y) const {
  const SecurityInstance& s = *instance_;
  double value = 0.0;
  for (Index i = 0; i < s.targets(); ++i) {
    value += s.v[i] * y[i] / (x[i] + y[i] + s.b[i]) + 0.5 * s.cD[i] * x[i] * x[i];
  }
  return value;
}

Vec DefenderObjective::grad_x(const Vec& x, const Vec& y) const {
  return defender_objective_and_grads(*instance_, x, y).grad_x;
}

Vec DefenderObjective::grad_y(const Vec& x, const Vec& y) const {
  return defender_objective_and_grads(*instance_, x, y).grad_y;
}

Problem make_security_problem(std::shared_ptr<const SecurityInstance> instance,
                              BestResponseOptions options) {
  Problem p;
  p.leader = std::make_shared<DefenderObjective>(instance);
  p.oracle = std::make_shared<AttackerOracle>(instance, options);
  p.x0 = initial_defense(*instance);
  p.name = "security";
  return p;
}

}  // namespace pzos::security
