#include <doctest.h>

#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "pzos/errors.hpp"
#include "pzos/problem.hpp"
#include "pzos/routing.hpp"
#include "pzos/security.hpp"

using namespace pzos;

namespace {

std::shared_ptr<const security::SecurityInstance> small_security(std::uint64_t seed, Index n) {
  RngStream rng(seed, 0);
  return std::make_shared<security::SecurityInstance>(security::generate_security_instance(rng, n));
}

std::shared_ptr<const routing::RoutingInstance> small_routing(std::uint64_t seed) {
  RngStream rng(seed, 0);
  routing::GeneratorParams p;
  p.max_vertices = 8;
  p.max_edges = 20;
  p.max_commodities = 3;
  return std::make_shared<routing::RoutingInstance>(routing::generate_routing_instance(rng, p));
}

double se_norm(const MonteCarloEstimate& e) { return e.standard_error.norm(); }

}  // namespace

TEST_CASE("respond counts exactly one call per query") {
  Mat A(2, 3);
  A << 1, 2, 3, 4, 5, 6;
  auto oracle = testing::linear_oracle(A);
  CHECK(oracle->calls() == 0);
  const Vec x = Vec::Ones(3);
  for (int i = 0; i < 17; ++i) oracle->respond(x);
  CHECK(oracle->calls() == 17);
  oracle->reset_calls();
  CHECK(oracle->calls() == 0);
}

TEST_CASE("respond is deterministic and rejects wrong lengths") {
  auto oracle = testing::abs_oracle();
  const Vec x = Vec::Constant(1, -0.3);
  CHECK(oracle->respond(x)[0] == oracle->respond(x)[0]);
  CHECK_THROWS_AS(oracle->respond(Vec::Zero(2)), InvalidArgument);
}

TEST_CASE("oracle failures carry the query point") {
  FunctionOracle bad(2, 1, [](const Vec&) -> Vec { throw std::runtime_error("boom"); });
  const Vec x = (Vec(2) << 0.25, -4.0).finished();
  try {
    bad.respond(x);
    FAIL("expected an OracleError");
  } catch (const OracleError& e) {
    CHECK(e.query() == x);
  }
}

TEST_CASE("smoothing radius must be positive") {
  CHECK_THROWS_AS(SmoothingRadius(0.0), InvalidArgument);
  CHECK_THROWS_AS(SmoothingRadius(-1.0), InvalidArgument);
  CHECK_THROWS_AS(SmoothingRadius(std::nan("")), InvalidArgument);
  CHECK(SmoothingRadius(0.3).value() == 0.3);
}

TEST_CASE("problem constants must be nonnegative") {
  ProblemConstants c{1, 1, 1, 1};
  CHECK_NOTHROW(c.validate());
  c.L_y = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("smoothed response of a linear map is the map itself") {
  Mat A(2, 3);
  A << 1, -2, 0.5, 3, 0, -1;
  auto oracle = testing::linear_oracle(A);
  const Vec x = (Vec(3) << 0.2, -1.0, 2.0).finished();
  RngStream rng(21, 0);
  const auto est = smoothed_response_mc(*oracle, x, SmoothingRadius(0.7), 10000, rng);
  const Vec target = A * x;
  for (Index i = 0; i < 2; ++i) CHECK(std::abs(est.mean[i] - target[i]) <= 3.0 * est.standard_error[i]);
}

TEST_CASE("smoothed response of a constant map is exact") {
  const Vec c = (Vec(2) << 1.5, -2.25).finished();
  auto oracle = testing::constant_oracle(4, c);
  RngStream rng(22, 0);
  const auto est = smoothed_response_mc(*oracle, Vec::Zero(4), SmoothingRadius(3.0), 500, rng);
  CHECK(est.mean == c);
  CHECK(est.standard_error.norm() == 0.0);
}

TEST_CASE("smoothed |x| at the origin is mu/2") {
  auto oracle = testing::abs_oracle();
  RngStream rng(23, 0);
  const auto est = smoothed_response_mc(*oracle, Vec::Zero(1), SmoothingRadius(0.4), 1000000, rng);
  CHECK(std::abs(est.mean[0] - 0.2) <= 3.0 * est.standard_error[0]);
}

TEST_CASE("smoothing feasibility on both games") {
  SUBCASE("security") {
    auto inst = small_security(31, 6);
    security::AttackerOracle oracle(inst);
    RngStream rng(31, 1);
    const Vec x = security::initial_defense(*inst);
    CHECK(check_smoothing_feasibility(oracle, x, SmoothingRadius(0.1), 200, rng));
    CHECK(check_smoothing_feasibility(oracle, x, SmoothingRadius(0.1), 1, rng));
  }
  SUBCASE("routing") {
    auto inst = small_routing(32);
    routing::RoutingOracle oracle(inst);
    RngStream rng(32, 1);
    const Vec tau = Vec::Constant(inst->edge_count(), 0.5);
    CHECK(check_smoothing_feasibility(oracle, tau, SmoothingRadius(0.5), 200, rng));
  }
}

TEST_CASE("smoothing bias and Lipschitz transfer on both games") {
  // `floor` keeps query points inside the oracle's domain after smoothing.
  auto check_oracle = [](const FollowerOracle& oracle, const Vec& center, double spread, double floor,
                         std::uint64_t seed) {
    RngStream rng(seed, 0);
    const double L = estimate_response_lipschitz(oracle, center, spread, 1000, rng);
    REQUIRE(L > 0.0);
    for (double mu : {0.1, 0.5}) {
      for (int k = 0; k < 4; ++k) {
        Vec x = center + spread * sample_unit_ball(rng, oracle.dx());
        x = x.cwiseMax(floor);
        const auto est = smoothed_response_mc(oracle, x, SmoothingRadius(mu), 2000, rng);
        const double bias = (est.mean - oracle.respond(x)).norm();
        CHECK(bias <= L * mu + 3.0 * se_norm(est));

        const Vec z = (x + 0.3 * sample_unit_ball(rng, oracle.dx())).cwiseMax(floor);
        const auto est_z = smoothed_response_mc(oracle, z, SmoothingRadius(mu), 2000, rng);
        CHECK((est.mean - est_z.mean).norm() <= L * (x - z).norm() + 6.0 * (se_norm(est) + se_norm(est_z)));
      }
    }
  };
  SUBCASE("security") {
    auto inst = small_security(41, 5);
    security::AttackerOracle oracle(inst);
    check_oracle(oracle, security::initial_defense(*inst).array() + 2.0, 1.0, 0.5, 41);
  }
  SUBCASE("routing") {
    auto inst = small_routing(42);
    routing::RoutingOracle oracle(inst);
    check_oracle(oracle, Vec::Constant(inst->edge_count(), 1.0), 1.0, 0.0, 42);
  }
}

TEST_CASE("leader gradients match central differences") {
  RngStream rng(51, 0);
  SUBCASE("security") {
    auto inst = small_security(51, 7);
    security::DefenderObjective f(inst);
    for (int k = 0; k < 10; ++k) {
      Vec x(7), y(7);
      for (Index i = 0; i < 7; ++i) {
        x[i] = rng.next_uniform(0.1, 2.0);
        y[i] = rng.next_uniform(0.1, 2.0);
      }
      auto fx = [&](const Vec& z) { return f.eval(z, y); };
      auto fy = [&](const Vec& z) { return f.eval(x, z); };
      CHECK(testing::relative_error(f.grad_x(x, y), testing::central_difference(fx, x, 1e-5)) < 1e-7);
      CHECK(testing::relative_error(f.grad_y(x, y), testing::central_difference(fy, y, 1e-5)) < 1e-7);
    }
  }
  SUBCASE("routing") {
    auto inst = small_routing(52);
    routing::RevenueObjective f(inst);
    const Index m = inst->edge_count();
    for (int k = 0; k < 10; ++k) {
      Vec tau(m), flow(m);
      for (Index i = 0; i < m; ++i) {
        tau[i] = rng.next_uniform(-2.0, 2.0);
        flow[i] = rng.next_uniform(0.0, 10.0);
      }
      auto ft = [&](const Vec& z) { return f.eval(z, flow); };
      auto ff = [&](const Vec& z) { return f.eval(tau, z); };
      CHECK(testing::relative_error(f.grad_x(tau, flow), testing::central_difference(ft, tau, 1e-4)) < 1e-7);
      CHECK(testing::relative_error(f.grad_y(tau, flow), testing::central_difference(ff, flow, 1e-4)) < 1e-7);
    }
  }
}

TEST_CASE("composite costs one oracle call") {
  auto inst = small_security(61, 4);
  auto problem = security::make_security_problem(inst);
  problem.oracle->reset_calls();
  const double F = problem.composite(problem.x0);
  CHECK(std::isfinite(F));
  CHECK(problem.oracle->calls() == 1);
}
