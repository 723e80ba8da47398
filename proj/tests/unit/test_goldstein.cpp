#include <doctest.h>

#include <cmath>

#include "pzos/errors.hpp"
#include "pzos/goldstein1d.hpp"

using namespace pzos;
using namespace pzos::goldstein;

namespace {

constexpr double kTol = 1e-9;

void check_interval(const Interval& got, double lo, double hi) {
  CHECK(std::abs(got.lo - lo) <= kTol);
  CHECK(std::abs(got.hi - hi) <= kTol);
}

bool subset(const Interval& a, const Interval& b) { return b.lo <= a.lo + 1e-15 && a.hi <= b.hi + 1e-15; }

}  // namespace

TEST_CASE("polynomial basics") {
  const Polynomial p({1.0, -3.0, 1.0});  // x^2 - 3x + 1
  CHECK(p(2.0) == doctest::Approx(-1.0));
  CHECK(p.degree() == 2);
  CHECK(p.derivative()(0.0) == doctest::Approx(-3.0));
  const auto roots = real_roots(Polynomial({-2.0, 0.0, 1.0}), -5.0, 5.0);
  REQUIRE(roots.size() == 2);
  CHECK(roots[0] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
  CHECK(roots[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // x^3 - x on [-2, 2]: range [-6, 6]; on [-1, 1]: extrema at +-1/sqrt(3).
  const Polynomial c({0.0, -1.0, 0.0, 1.0});
  const auto r = polynomial_range(c, -1.0, 1.0);
  CHECK(r.hi == doctest::Approx(2.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-12));
  CHECK(r.lo == doctest::Approx(-2.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-12));
}

TEST_CASE("piecewise functions must be continuous") {
  CHECK_THROWS_AS(PiecewiseScalarFunction({0.0}, {Polynomial({0.0}), Polynomial({1.0})}), InvalidArgument);
  CHECK_THROWS_AS(PiecewiseScalarFunction({0.0}, {Polynomial({0.0})}), InvalidArgument);
  CHECK_THROWS_AS(PiecewiseScalarFunction({1.0, 0.0}, {Polynomial({0.0}), Polynomial({0.0}), Polynomial({0.0})}),
                  InvalidArgument);
  const PiecewiseScalarFunction abs({0.0}, {Polynomial({0.0, -1.0}), Polynomial({0.0, 1.0})});
  CHECK(abs(-2.0) == 2.0);
  CHECK(abs(3.0) == 3.0);
  CHECK(abs.breakpoint_index(0.0) == 0);
  CHECK(abs.breakpoint_index(0.5) == -1);
}

TEST_CASE("Clarke intervals") {
  const auto b1 = example_abs_plus_quadratic();
  const auto b2 = example_abs_minus_quadratic();
  check_interval(clarke_interval(b1.composite, 0.0), -3.0, -1.0);
  check_interval(clarke_interval(b2.composite, 0.0), 1.0, 3.0);
  const auto smooth = clarke_interval(b1.composite, 0.7);
  CHECK(smooth.width() == 0.0);
  CHECK(smooth.lo == doctest::Approx(2 * 0.7 - 1));
}

TEST_CASE("Goldstein and partial intervals match the closed forms on a 50-point grid") {
  const auto b1 = example_abs_plus_quadratic();
  const auto b2 = example_abs_minus_quadratic();
  for (int k = 0; k < 50; ++k) {
    const double d = 0.04 + k * (1.96 / 49.0);
    CAPTURE(d);
    check_interval(goldstein_interval(b1.composite, 0.0, d), -2 * d - 3, 2 * d - 1);
    check_interval(partial_goldstein_interval(b1.fx_grad, b1.fy_grad, b1.response, 0.0, d), -3.0, -1.0);

    const auto full2 = goldstein_interval(b2.composite, 0.0, d);
    check_interval(full2, std::min(1.0, 3 - 2 * d), std::max(3.0, 1 + 2 * d));
    const auto part2 = partial_goldstein_interval(b2.fx_grad, b2.fy_grad, b2.response, 0.0, d);
    if (d < 1.0) {
      check_interval(part2, 1.0, 3.0);
    } else {
      check_interval(part2, -1.0, 3.0);
    }
  }
  // Boundaries of the stated ranges.
  check_interval(partial_goldstein_interval(b2.fx_grad, b2.fy_grad, b2.response, 0.0, 1.0), -1.0, 3.0);
  check_interval(goldstein_interval(b2.composite, 0.0, 1.2), 0.6, 3.4);
  check_interval(goldstein_interval(b1.composite, 0.0, 0.25), -3.5, -0.5);
  CHECK(goldstein_interval(b1.composite, 0.0, 0.5).contains(0.0));
}

TEST_CASE("stationarity gaps") {
  CHECK(stationarity_gap({-3.0, -1.0}) == 1.0);
  CHECK(stationarity_gap({0.6, 3.4}) == doctest::Approx(0.6));
  CHECK(stationarity_gap({-1.0, 3.0}) == 0.0);
}

TEST_CASE("neither notion is stronger") {
  const auto b1 = example_abs_plus_quadratic();
  const auto b2 = example_abs_minus_quadratic();
  const auto r1 = stationarity_table(b1, {0.75}).front();
  CHECK(r1.full_gap == 0.0);
  CHECK(std::abs(r1.partial_gap - 1.0) <= kTol);
  const auto r2 = stationarity_table(b2, {1.2}).front();
  CHECK(std::abs(r2.full_gap - 0.6) <= kTol);
  CHECK(r2.partial_gap == 0.0);
}

TEST_CASE("intervals grow with delta and shrink to the Clarke interval") {
  for (const auto& ex : {example_abs_plus_quadratic(), example_abs_minus_quadratic()}) {
    Interval prev_full = goldstein_interval(ex.composite, ex.x, 0.01);
    Interval prev_part = partial_goldstein_interval(ex.fx_grad, ex.fy_grad, ex.response, ex.x, 0.01);
    for (double d = 0.02; d <= 3.0; d += 0.01) {
      const auto full = goldstein_interval(ex.composite, ex.x, d);
      const auto part = partial_goldstein_interval(ex.fx_grad, ex.fy_grad, ex.response, ex.x, d);
      CHECK(subset(prev_full, full));
      CHECK(subset(prev_part, part));
      prev_full = full;
      prev_part = part;
    }
    const auto clarke = clarke_interval(ex.composite, ex.x);
    for (double d : {1e-1, 1e-3, 1e-6}) {
      const auto g = goldstein_interval(ex.composite, ex.x, d);
      // Piece derivatives here have slope modulus 2.
      CHECK(std::max(std::abs(g.lo - clarke.lo), std::abs(g.hi - clarke.hi)) <= 2.0 * d + 1e-12);
    }
  }
}

TEST_CASE("full and partial coincide on smooth data with linear f") {
  // y*(x) = 2x + 1, f(x, y) = 3x - y, so F = x - 1 with no breakpoints.
  const auto resp = PiecewiseScalarFunction::smooth(Polynomial({1.0, 2.0}));
  const auto F = PiecewiseScalarFunction::smooth(Polynomial({-1.0, 1.0}));
  for (double d : {0.1, 1.0, 5.0}) {
    const auto full = goldstein_interval(F, 0.3, d);
    const auto part = partial_goldstein_interval(3.0, Vec::Constant(1, -1.0), {resp}, 0.3, d);
    CHECK(std::abs(full.lo - part.lo) <= kTol);
    CHECK(std::abs(full.hi - part.hi) <= kTol);
  }
}

TEST_CASE("goldstein intervals away from the kink") {
  const auto b1 = example_abs_plus_quadratic();
  // Ball [0.5, 1.5] stays on the right piece: derivative 2x - 1 ranges over [0, 2].
  check_interval(goldstein_interval(b1.composite, 1.0, 0.5), 0.0, 2.0);
  // Ball [-2, 0.5] crosses the kink: [2(-2) - 3, 2(0.5) - 1].
  check_interval(goldstein_interval(b1.composite, -0.75, 1.25), -7.0, 0.0);
}

TEST_CASE("default delta grid") {
  const auto g = default_delta_grid();
  CHECK(g.size() == 8);
  CHECK(g.front() == 0.1);
  CHECK(g.back() == 2.0);
}
