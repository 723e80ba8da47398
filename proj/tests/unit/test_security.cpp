#include <doctest.h>

#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "pzos/errors.hpp"
#include "pzos/estimators.hpp"
#include "pzos/security.hpp"

using namespace pzos;
using namespace pzos::security;

namespace {

SecurityInstance one_target(double w, double v, double b, double cA, double cD, double budget) {
  SecurityInstance s;
  s.w = Vec::Constant(1, w);
  s.v = Vec::Constant(1, v);
  s.b = Vec::Constant(1, b);
  s.cA = Vec::Constant(1, cA);
  s.cD = Vec::Constant(1, cD);
  s.budget = budget;
  return s;
}

SecurityInstance generated(std::uint64_t seed, Index n) {
  RngStream rng(seed, 0);
  return generate_security_instance(rng, n);
}

/// Checks the KKT conditions independently of the solver's own residual.
void check_kkt(const SecurityInstance& s, const Vec& x, const AttackerResponse& r) {
  const double lam = r.dual_lambda;
  CHECK(lam >= 0.0);
  CHECK(r.y.minCoeff() >= 0.0);
  CHECK(r.y.sum() <= s.budget + 1e-8);
  CHECK(lam * (s.budget - r.y.sum()) <= 1e-6 * (1.0 + s.budget));
  for (Index i = 0; i < s.targets(); ++i) {
    const double d = x[i] + r.y[i] + s.b[i];
    const double grad = s.w[i] * (x[i] + s.b[i]) / (d * d) - s.cA[i] * r.y[i];
    if (r.y[i] > 1e-8) {
      CHECK(std::abs(grad - lam) <= 1e-6);
    } else {
      CHECK(grad <= lam + 1e-6);
    }
  }
  CHECK(r.kkt_residual <= 1e-6);
}

}  // namespace

TEST_CASE("symmetric binding budget splits evenly") {
  SecurityInstance s;
  s.w = Vec::Constant(2, 3.0);
  s.v = Vec::Constant(2, 2.0);
  s.b = Vec::Constant(2, 0.3);
  s.cA = Vec::Constant(2, 0.2);
  s.cD = Vec::Constant(2, 0.2);
  s.budget = 1.0;
  const Vec x = Vec::Constant(2, 0.7);
  const auto r = attacker_best_response(s, x);
  CHECK(r.y[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.y[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.dual_lambda > 0.0);
  check_kkt(s, x, r);
}

TEST_CASE("single target matches a grid search") {
  const auto s = one_target(4.0, 1.0, 0.5, 0.2, 0.2, 1e6);
  const Vec x = Vec::Constant(1, 1.0);
  const auto r = attacker_best_response(s, x);
  double best_y = 0.0, best_u = -1e300;
  for (int k = 0; k <= 200000; ++k) {
    const double y = k * 1e-4;
    const double u = attacker_utility(s, x, Vec::Constant(1, y));
    if (u > best_u) {
      best_u = u;
      best_y = y;
    }
  }
  CHECK(std::abs(r.y[0] - best_y) <= 1e-4);
  // The stationarity equation itself.
  CHECK(4.0 * 1.5 / std::pow(1.5 + r.y[0], 2) == doctest::Approx(0.2 * r.y[0]).epsilon(1e-8));
  CHECK(r.dual_lambda == 0.0);
  check_kkt(s, x, r);
}

TEST_CASE("two targets with a binding budget match a grid search") {
  SecurityInstance s;
  s.w = (Vec(2) << 4.0, 2.5).finished();
  s.v = Vec::Ones(2);
  s.b = (Vec(2) << 0.3, 0.45).finished();
  s.cA = (Vec(2) << 0.15, 0.25).finished();
  s.cD = Vec::Constant(2, 0.2);
  s.budget = 2.0;
  const Vec x = (Vec(2) << 0.4, 1.1).finished();
  const auto r = attacker_best_response(s, x);
  double best = -1e300, best_y0 = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double y0 = k * 1e-5;
    const double u = attacker_utility(s, x, (Vec(2) << y0, s.budget - y0).finished());
    if (u > best) {
      best = u;
      best_y0 = y0;
    }
  }
  CHECK(r.dual_lambda > 0.0);
  CHECK(std::abs(r.y[0] - best_y0) <= 1e-4);
  CHECK(std::abs(r.y[1] - (s.budget - best_y0)) <= 1e-4);
  check_kkt(s, x, r);
}

TEST_CASE("empty budget means no attack") {
  const auto s = one_target(4.0, 1.0, 0.5, 0.2, 0.2, 0.0);
  const auto r = attacker_best_response(s, Vec::Constant(1, 0.3));
  CHECK(r.y[0] == 0.0);
}

TEST_CASE("best response argument checks") {
  const auto s = generated(3, 4);
  BestResponseOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(attacker_best_response(s, Vec::Zero(4), bad), InvalidArgument);
  CHECK_THROWS_AS(attacker_best_response(s, Vec::Zero(3)), InvalidArgument);
}

TEST_CASE("KKT holds on random instances and defenses") {
  RngStream rng(77, 0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 12) * 7;
    const auto s = generated(500 + seed, n);
    Vec x(n);
    for (Index i = 0; i < n; ++i) x[i] = rng.next_uniform(0.0, 3.0);
    check_kkt(s, x, attacker_best_response(s, x));
    check_kkt(s, initial_defense(s), attacker_best_response(s, initial_defense(s)));
  }
}

TEST_CASE("perturbed brackets agree within 10 tol") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = generated(600 + seed, 20);
    const Vec x = initial_defense(s);
    BestResponseOptions wide;
    wide.bracket_inflation = 7.5;
    const auto a = attacker_best_response(s, x);
    const auto b = attacker_best_response(s, x, wide);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() <= 10.0 * 1e-8);
  }
}

TEST_CASE("deterrence: comparative statics of the unconstrained response") {
  // Differentiating w(x+b)/(x+y+b)^2 = cA y gives sign(dy/dx) = sign(y - x - b),
  // so effort falls with defense once x + b exceeds it and rises before.
  const auto s = one_target(4.0, 1.0, 0.5, 0.2, 0.2, 1e6);
  auto y_at = [&](double x) { return attacker_best_response(s, Vec::Constant(1, x)).y[0]; };
  for (double x = 0.0; x < 20.0; x += 0.1) {
    const double y0 = y_at(x);
    const double y1 = y_at(x + 0.1);
    if (y1 <= x + s.b[0]) {
      CHECK(y1 <= y0 + 1e-9);
    } else if (y0 > x + 0.1 + s.b[0]) {
      CHECK(y1 >= y0 - 1e-9);
    }
  }
  double prev = y_at(5.0);
  for (double x = 5.1; x <= 20.0; x += 0.1) {
    const double y = y_at(x);
    CHECK(y <= prev + 1e-9);
    prev = y;
  }
}

TEST_CASE("a binding budget pins the single-target response") {
  const auto s = one_target(4.0, 1.0, 0.5, 0.2, 0.2, 0.5);
  for (double x = 0.0; x <= 3.0; x += 0.25) {
    CHECK(attacker_best_response(s, Vec::Constant(1, x)).y[0] == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("defender objective examples") {
  const auto s = generated(8, 3);
  const Vec x = (Vec(3) << 0.5, 1.0, 2.0).finished();
  const auto e = defender_objective_and_grads(s, x, Vec::Zero(3));
  CHECK(e.value == doctest::Approx(0.5 * s.cD.dot(x.cwiseProduct(x))));
  CHECK((e.grad_x - s.cD.cwiseProduct(x)).norm() < 1e-15);
  for (Index i = 0; i < 3; ++i) CHECK(e.grad_y[i] == doctest::Approx(s.v[i] / (x[i] + s.b[i])));

  const auto one = one_target(1.0, 2.0, 1.0, 0.2, 1e-300, 10.0);
  auto d = defender_objective_and_grads(one, Vec::Constant(1, 1.0), Vec::Constant(1, 2.0));
  CHECK(d.value == doctest::Approx(1.0));
  CHECK(d.grad_x[0] == doctest::Approx(-0.25));
  CHECK(d.grad_y[0] == doctest::Approx(0.25));
}

TEST_CASE("generator ranges, determinism and binding budget") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 99);
    const auto s = generated(seed, n);
    REQUIRE(s.targets() == n);
    CHECK(s.w.minCoeff() >= 1.0);
    CHECK(s.w.maxCoeff() <= 5.0);
    CHECK(s.v.minCoeff() >= 1.0);
    CHECK(s.v.maxCoeff() <= 5.0);
    CHECK(s.b.minCoeff() >= 0.1);
    CHECK(s.b.maxCoeff() <= 0.5);
    CHECK(s.cA.minCoeff() >= 0.1);
    CHECK(s.cA.maxCoeff() <= 0.3);
    CHECK(s.cD.minCoeff() >= 0.1);
    CHECK(s.cD.maxCoeff() <= 0.3);
    CHECK(s.budget > 0.0);
    CHECK(attacker_best_response(s, initial_defense(s)).dual_lambda > 0.0);
  }
  const auto a = generated(99, 17);
  const auto b = generated(99, 17);
  CHECK(a.w == b.w);
  CHECK(a.cD == b.cD);
  CHECK(a.budget == b.budget);
}

TEST_CASE("budget is half the mirrored effort") {
  const auto s = generated(123, 9);
  double total = 0.0;
  for (Index i = 0; i < 9; ++i) {
    const double y = mirrored_effort(s.w[i], s.b[i], s.cA[i]);
    CHECK(s.w[i] * (y + s.b[i]) / std::pow(2 * y + s.b[i], 2) == doctest::Approx(s.cA[i] * y).epsilon(1e-9));
    total += y;
  }
  CHECK(s.budget == doctest::Approx(0.5 * total).epsilon(1e-12));
}

TEST_CASE("initial defense") {
  const auto s = one_target(3.0, 2.0, 0.5, 0.2, 0.2, 1.0);
  const double x = initial_defense(s)[0];
  double best = 1e300, best_x = 0.0;
  for (int k = 0; k <= 10000000; ++k) {
    const double z = k * 1e-6;
    const double val = 2.0 * 0.5 / (z + 1.0) + 0.1 * z * z;
    if (val < best) {
      best = val;
      best_x = z;
    }
  }
  CHECK(std::abs(x - best_x) <= 1e-6);
  CHECK(std::abs(1.0 / std::pow(x + 1.0, 2) - 0.2 * x) <= 1e-10);

  const auto tiny = one_target(3.0, 1e-12, 1e-3, 0.2, 0.2, 1.0);
  CHECK(initial_defense(tiny)[0] < 1e-6);

  auto other = s;
  other.w[0] = 5.0;
  other.cA[0] = 0.1;
  other.budget = 7.0;
  CHECK(initial_defense(other)[0] == x);
}

TEST_CASE("oracle responses are feasible and averages stay feasible") {
  auto inst = std::make_shared<SecurityInstance>(generated(900, 12));
  AttackerOracle oracle(inst);
  RngStream rng(900, 1);
  const Vec x0 = initial_defense(*inst);
  Vec sum = Vec::Zero(12);
  for (int k = 1; k <= 200; ++k) {
    const Vec y = oracle.respond(x0 + 0.1 * sample_unit_ball(rng, 12));
    CHECK(oracle.is_feasible(y));
    sum += y;
    const Vec avg = sum / k;
    CHECK(avg.sum() <= inst->budget + 1e-8);
    CHECK(avg.minCoeff() >= -1e-8);
  }
  CHECK_FALSE(oracle.is_feasible(Vec::Constant(12, inst->budget)));
}

TEST_CASE("PZOS direction matches the composite gradient in smooth regions") {
  auto inst = std::make_shared<SecurityInstance>(generated(950, 6));
  auto problem = make_security_problem(inst);
  const Vec x = problem.x0;
  // Smoothness check: support of y* unchanged under small perturbations.
  auto support = [&](const Vec& z) { return (problem.oracle->respond(z).array() > 1e-8).cast<int>().eval(); };
  const auto base = support(x);
  for (Index i = 0; i < x.size(); ++i) {
    Vec e = Vec::Zero(x.size());
    e[i] = 1e-4;
    REQUIRE((support(x + e) == base).all());
    REQUIRE((support(x - e) == base).all());
  }
  auto F = [&](const Vec& z) { return problem.composite(z); };
  const Vec fd = testing::central_difference(F, x, 1e-5);
  RngStream rng(950, 1);
  Vec mean = Vec::Zero(x.size());
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const Vec v = sample_unit_sphere(rng, x.size());
    mean += pzos_gradient(*problem.leader, *problem.oracle, x, SmoothingRadius(1e-4), std::span<const Vec>(&v, 1)).vector;
  }
  mean /= n;
  CHECK(testing::relative_error(mean, fd) < 1e-2);
}
