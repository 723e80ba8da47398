#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "helpers.hpp"
#include "pzos/errors.hpp"
#include "pzos/estimators.hpp"
#include "pzos/security.hpp"

using namespace pzos;

namespace {

Vec unit(double v) { return Vec::Constant(1, v); }

/// f(x, y) = (x - 1)^2 + y in 1-D.
FunctionObjective shifted_square_plus_y() {
  return FunctionObjective([](const Vec& x, const Vec& y) { return (x[0] - 1) * (x[0] - 1) + y[0]; },
                           [](const Vec& x, const Vec&) -> Vec { return unit(2 * (x[0] - 1)); },
                           [](const Vec&, const Vec&) -> Vec { return unit(1.0); });
}

}  // namespace

TEST_CASE("algorithm names round-trip") {
  CHECK(parse_algorithm("pzos") == Algorithm::pzos);
  CHECK(parse_algorithm(to_string(Algorithm::zos)) == Algorithm::zos);
  CHECK_THROWS_AS(parse_algorithm("sgd"), InvalidArgument);
}

TEST_CASE("Jacobian estimate of |x|") {
  auto oracle = testing::abs_oracle();
  auto at0 = jacobian_estimate(*oracle, unit(0.0), SmoothingRadius(0.5), unit(1.0));
  CHECK(at0.matrix(0, 0) == 0.0);
  auto at1 = jacobian_estimate(*oracle, unit(1.0), SmoothingRadius(0.5), unit(1.0));
  CHECK(at1.matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(at1.queries_used == 2);
}

TEST_CASE("non-unit directions are rejected") {
  auto oracle = testing::abs_oracle();
  CHECK_THROWS_AS(jacobian_estimate(*oracle, unit(0.0), SmoothingRadius(0.5), unit(0.9)),
                  InvalidArgument);
  CHECK_THROWS_AS(jacobian_estimate(*oracle, unit(0.0), SmoothingRadius(0.5), Vec::Ones(2)),
                  InvalidArgument);
}

TEST_CASE("Jacobian estimate is rank one, kills the orthogonal complement, and is sign symmetric") {
  Mat A = Mat::Random(3, 5);
  auto oracle = testing::linear_oracle(A);
  RngStream rng(3, 0);
  const Vec x = Vec::Random(5);
  for (int k = 0; k < 20; ++k) {
    const Vec v = sample_unit_sphere(rng, 5);
    const auto H = jacobian_estimate(*oracle, x, SmoothingRadius(0.3), v);
    const auto Hneg = jacobian_estimate(*oracle, x, SmoothingRadius(0.3), Vec(-v));
    CHECK((H.matrix - Hneg.matrix).cwiseAbs().maxCoeff() == 0.0);
    Vec w = Vec::Random(5);
    w -= w.dot(v) * v;
    CHECK((H.matrix * w).norm() < 1e-12);
    Eigen::JacobiSVD<Mat> svd(H.matrix);
    CHECK(svd.singularValues()[1] < 1e-10 * std::max(1.0, svd.singularValues()[0]));
  }
}

TEST_CASE("Jacobian estimate is unbiased for linear responses") {
  RngStream rng(4, 0);
  Mat A(3, 4);
  for (Index i = 0; i < A.size(); ++i) A.data()[i] = rng.next_uniform(-2, 2);
  auto oracle = testing::linear_oracle(A);
  const Vec x = Vec::Zero(4);
  const int n = 100000;
  Mat mean = Mat::Zero(3, 4);
  Mat m2 = Mat::Zero(3, 4);
  for (int k = 1; k <= n; ++k) {
    const Mat H = jacobian_estimate(*oracle, x, SmoothingRadius(0.5), sample_unit_sphere(rng, 4)).matrix;
    const Mat d = H - mean;
    mean += d / k;
    m2.array() += d.array() * (H - mean).array();
  }
  const Mat se = (m2.array() / (n - 1.0) / n).sqrt();
  for (Index i = 0; i < A.size(); ++i) CHECK(std::abs(mean.data()[i] - A.data()[i]) <= 3.0 * se.data()[i]);
  CHECK((mean - A).norm() <= 3.0 * se.norm());
}

TEST_CASE("PZOS gradient examples") {
  SUBCASE("zero response gives the leader gradient exactly") {
    auto oracle = testing::constant_oracle(3, Vec::Zero(2));
    auto f = testing::half_square();
    const Vec x = (Vec(3) << 1, -2, 0.5).finished();
    RngStream rng(5, 0);
    std::vector<Vec> dirs;
    for (int q = 0; q < 4; ++q) dirs.push_back(sample_unit_sphere(rng, 3));
    const auto g = pzos_gradient(*f, *oracle, x, SmoothingRadius(0.7), dirs);
    CHECK(g.vector == x);
    CHECK(g.queries_used == 9);
  }
  SUBCASE("composition on the smooth side of |x|") {
    auto oracle = testing::abs_oracle();
    auto f = shifted_square_plus_y();
    const Vec v = unit(1.0);
    const auto g = pzos_gradient(f, *oracle, unit(1.0), SmoothingRadius(0.25), std::span<const Vec>(&v, 1));
    CHECK(g.vector[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.queries_used == 3);
    CHECK(g.has_center);
    CHECK(g.center_response[0] == 1.0);
  }
}

TEST_CASE("PZOS mean matches the chain rule on a smooth response") {
  const Index dx = 6;
  const Index dy = 4;
  RngStream rng(6, 0);
  Mat A(dy, dx);
  for (Index i = 0; i < A.size(); ++i) A.data()[i] = rng.next_uniform(-1, 1);
  FunctionOracle oracle(dx, dy, [A](const Vec& x) -> Vec { return (A * x).array().tanh().matrix(); });
  const Vec c = Vec::LinSpaced(dy, 1.0, 2.0);
  FunctionObjective f([c](const Vec& x, const Vec& y) { return 0.5 * x.squaredNorm() + c.dot(y.array().square().matrix()); },
                      [](const Vec& x, const Vec&) -> Vec { return x; },
                      [c](const Vec&, const Vec& y) -> Vec { return 2.0 * c.cwiseProduct(y); });
  Vec x(dx);
  for (Index i = 0; i < dx; ++i) x[i] = rng.next_uniform(-0.5, 0.5);
  const Vec y = oracle.respond(x);
  const Vec s = (A * x).array().tanh().matrix();
  const Mat J = (1.0 - s.array().square()).matrix().asDiagonal() * A;
  const Vec analytic = x + J.transpose() * (2.0 * c.cwiseProduct(y));

  const int n = 10000;
  Vec mean = Vec::Zero(dx);
  for (int k = 0; k < n; ++k) {
    const Vec v = sample_unit_sphere(rng, dx);
    mean += pzos_gradient(f, oracle, x, SmoothingRadius(1e-3), std::span<const Vec>(&v, 1)).vector;
  }
  mean /= n;
  CHECK(testing::relative_error(mean, analytic) < 1e-2);
}

TEST_CASE("ZOS examples") {
  SUBCASE("constant composite gives zero") {
    auto oracle = testing::constant_oracle(3, Vec::Ones(1));
    FunctionObjective f([](const Vec&, const Vec& y) { return 4.0 * y[0]; },
                        [](const Vec& x, const Vec&) -> Vec { return Vec::Zero(x.size()); },
                        [](const Vec&, const Vec&) -> Vec { return Vec::Constant(1, 4.0); });
    RngStream rng(7, 0);
    for (int k = 0; k < 100; ++k) {
      const Vec v = sample_unit_sphere(rng, 3);
      const auto g = zos_gradient(f, *oracle, Vec::Zero(3), SmoothingRadius(0.2), std::span<const Vec>(&v, 1));
      REQUIRE(g.vector.norm() == 0.0);
      REQUIRE(g.queries_used == 2);
    }
  }
  SUBCASE("|x| at the origin") {
    auto oracle = testing::abs_oracle();
    FunctionObjective f([](const Vec&, const Vec& y) { return y[0]; },
                        [](const Vec&, const Vec&) -> Vec { return Vec::Zero(1); },
                        [](const Vec&, const Vec&) -> Vec { return Vec::Ones(1); });
    const Vec v = unit(1.0);
    CHECK(zos_gradient(f, *oracle, unit(0.0), SmoothingRadius(0.3), std::span<const Vec>(&v, 1)).vector[0] == 0.0);
  }
  SUBCASE("linear composite is unbiased") {
    const Index dx = 5;
    const Vec c = (Vec(dx) << 1, -2, 3, 0.5, -1).finished();
    auto oracle = testing::constant_oracle(dx, Vec::Zero(1));
    FunctionObjective f([c](const Vec& x, const Vec&) { return c.dot(x); },
                        [c](const Vec&, const Vec&) -> Vec { return c; },
                        [](const Vec&, const Vec&) -> Vec { return Vec::Zero(1); });
    RngStream rng(8, 0);
    const int n = 100000;
    Vec mean = Vec::Zero(dx), m2 = Vec::Zero(dx);
    for (int k = 1; k <= n; ++k) {
      const Vec v = sample_unit_sphere(rng, dx);
      const Vec g = zos_gradient(f, *oracle, Vec::Zero(dx), SmoothingRadius(0.4), std::span<const Vec>(&v, 1)).vector;
      const Vec d = g - mean;
      mean += d / k;
      m2.array() += d.array() * (g - mean).array();
    }
    const Vec se = (m2.array() / (n - 1.0) / n).sqrt();
    for (Index i = 0; i < dx; ++i) CHECK(std::abs(mean[i] - c[i]) <= 3.0 * se[i]);
  }
}

TEST_CASE("batch accounting matches the oracle counter") {
  auto inst_rng = RngStream(9, 0);
  auto inst = std::make_shared<security::SecurityInstance>(security::generate_security_instance(inst_rng, 5));
  auto problem = security::make_security_problem(inst);
  RngStream rng(9, 1);
  for (int q : {1, 2, 4}) {
    std::vector<Vec> dirs;
    for (int k = 0; k < q; ++k) dirs.push_back(sample_unit_sphere(rng, 5));
    for (Algorithm kind : {Algorithm::pzos, Algorithm::zos}) {
      problem.oracle->reset_calls();
      const auto g = estimate_gradient(kind, *problem.leader, *problem.oracle, problem.x0, SmoothingRadius(0.1), dirs);
      CHECK(static_cast<std::uint64_t>(g.queries_used) == problem.oracle->calls());
      CHECK(g.queries_used == (kind == Algorithm::pzos ? 2 * q + 1 : 2 * q));
    }
  }
  CHECK_THROWS_AS(pzos_gradient(*problem.leader, *problem.oracle, problem.x0, SmoothingRadius(0.1), {}),
                  InvalidArgument);
}

TEST_CASE("second moment probe degenerate cases") {
  RngStream rng(10, 0);
  SUBCASE("constant composite under ZOS") {
    auto oracle = testing::constant_oracle(3, Vec::Ones(2));
    FunctionObjective f([](const Vec&, const Vec& y) { return y.sum(); },
                        [](const Vec& x, const Vec&) -> Vec { return Vec::Zero(x.size()); },
                        [](const Vec&, const Vec& y) -> Vec { return Vec::Ones(y.size()); });
    const auto m = second_moment_probe(Algorithm::zos, f, *oracle, Vec::Zero(3), SmoothingRadius(0.1), 50, rng);
    CHECK(m.mean == 0.0);
    CHECK(m.standard_error == 0.0);
  }
  SUBCASE("constant response under PZOS is deterministic") {
    auto oracle = testing::constant_oracle(3, Vec::Ones(2));
    auto f = testing::half_square();
    const Vec x = (Vec(3) << 3, 4, 0).finished();
    const auto m = second_moment_probe(Algorithm::pzos, *f, *oracle, x, SmoothingRadius(0.1), 50, rng);
    CHECK(m.mean == doctest::Approx(25.0).epsilon(1e-14));
    CHECK(m.standard_error < 1e-12);
  }
  SUBCASE("needs two samples") {
    auto oracle = testing::constant_oracle(1, Vec::Ones(1));
    auto f = testing::half_square();
    CHECK_THROWS_AS(second_moment_probe(Algorithm::pzos, *f, *oracle, Vec::Zero(1), SmoothingRadius(0.1), 1, rng),
                    InvalidArgument);
  }
}

TEST_CASE("PZOS second moment sits below ZOS on security instances") {
  for (Index n : {10, 25}) {
    RngStream gen(100 + n, 0);
    auto inst = std::make_shared<security::SecurityInstance>(security::generate_security_instance(gen, n));
    auto problem = security::make_security_problem(inst);
    RngStream ra(200 + n, 0);
    RngStream rb(200 + n, 0);
    const auto p = second_moment_probe(Algorithm::pzos, *problem.leader, *problem.oracle, problem.x0,
                                       SmoothingRadius(0.1), 1500, ra);
    const auto z = second_moment_probe(Algorithm::zos, *problem.leader, *problem.oracle, problem.x0,
                                       SmoothingRadius(0.1), 1500, rb);
    const double se = std::hypot(p.standard_error, z.standard_error);
    CHECK(p.mean <= z.mean - 2.0 * se);
  }
}
