#include "pzos/goldstein1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pzos/errors.hpp"

namespace pzos::goldstein {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Root of a polynomial that is monotone on [a, b] with a sign change.
double bisect_root(const Polynomial& p, double a, double b) {
  double fa = p(a);
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double fm = p(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  std::vector<double> d;
  for (std::size_t k = 1; k < coeffs_.size(); ++k) d.push_back(static_cast<double>(k) * coeffs_[k]);
  return Polynomial(std::move(d));
}

int Polynomial::degree() const {
  for (int k = static_cast<int>(coeffs_.size()) - 1; k >= 0; --k) {
    if (coeffs_[static_cast<std::size_t>(k)] != 0.0) return k;
  }
  return -1;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.coeffs_.size() > coeffs_.size()) coeffs_.resize(other.coeffs_.size(), 0.0);
  for (std::size_t k = 0; k < other.coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
  return *this;
}

Polynomial Polynomial::operator*(double s) const {
  std::vector<double> c = coeffs_;
  for (double& v : c) v *= s;
  return Polynomial(std::move(c));
}

std::vector<double> real_roots(const Polynomial& p, double lo, double hi) {
  std::vector<double> roots;
  const int deg = p.degree();
  if (deg < 1 || lo > hi) return roots;
  if (deg == 1) {
    const double r = -p.coeffs()[0] / p.coeffs()[1];
    if (lo <= r && r <= hi) roots.push_back(r);
    return roots;
  }
  // Critical points split [lo, hi] into pieces on which p is monotone.
  std::vector<double> knots{lo};
  for (double c : real_roots(p.derivative(), lo, hi)) {
    if (c > knots.back()) knots.push_back(c);
  }
  if (hi > knots.back()) knots.push_back(hi);
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (p(knots[k]) == 0.0) roots.push_back(knots[k]);
  }
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double fa = p(knots[k]);
    const double fb = p(knots[k + 1]);
    if (fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0)) {
      roots.push_back(bisect_root(p, knots[k], knots[k + 1]));
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

Interval Interval::hull(const Interval& other) const {
  return {std::min(lo, other.lo), std::max(hi, other.hi)};
}

Interval polynomial_range(const Polynomial& p, double lo, double hi) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidArgument(fmt::format("polynomial range needs a finite interval, got [{}, {}]", lo, hi));
  }
  Interval r{p(lo), p(lo)};
  auto include = [&](double x) {
    const double v = p(x);
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  };
  include(hi);
  for (double c : real_roots(p.derivative(), lo, hi)) include(c);
  return r;
}

PiecewiseScalarFunction::PiecewiseScalarFunction(std::vector<double> breakpoints,
                                                 std::vector<Polynomial> pieces)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
  if (pieces_.size() != breakpoints_.size() + 1) {
    throw InvalidArgument("piecewise function needs one more piece than breakpoints");
  }
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    const double b = breakpoints_[k];
    if (!std::isfinite(b) || (k > 0 && !(b > breakpoints_[k - 1]))) {
      throw InvalidArgument("breakpoints must be finite and strictly increasing");
    }
    const double left = pieces_[k](b);
    const double right = pieces_[k + 1](b);
    if (std::abs(left - right) > 1e-12 * std::max(1.0, std::abs(left))) {
      throw InvalidArgument(
          fmt::format("discontinuity at breakpoint {}: {} vs {}", b, left, right));
    }
  }
}

PiecewiseScalarFunction PiecewiseScalarFunction::smooth(Polynomial p) {
  return PiecewiseScalarFunction({}, {std::move(p)});
}

std::size_t PiecewiseScalarFunction::piece_at(double x) const {
  return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) -
                                  breakpoints_.begin());
}

double PiecewiseScalarFunction::operator()(double x) const { return pieces_[piece_at(x)](x); }

Interval PiecewiseScalarFunction::piece_domain(std::size_t k) const {
  return {k == 0 ? -kInf : breakpoints_[k - 1], k == breakpoints_.size() ? kInf : breakpoints_[k]};
}

int PiecewiseScalarFunction::breakpoint_index(double x) const {
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
  if (it != breakpoints_.end() && *it == x) return static_cast<int>(it - breakpoints_.begin());
  return -1;
}

Interval clarke_interval(const PiecewiseScalarFunction& F, double x) {
  const int b = F.breakpoint_index(x);
  if (b < 0) {
    const double d = F.pieces()[F.piece_at(x)].derivative()(x);
    return {d, d};
  }
  const double left = F.pieces()[static_cast<std::size_t>(b)].derivative()(x);
  const double right = F.pieces()[static_cast<std::size_t>(b) + 1].derivative()(x);
  return {std::min(left, right), std::max(left, right)};
}

namespace {

void require_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw InvalidArgument(fmt::format("delta must be positive and finite, got {}", delta));
  }
}

// Range of `slope` over every closed segment cut from the ball by the knots.
// Each segment with nonempty intersection contributes, including a single
// point when a knot sits exactly on the ball boundary.
template <class SlopeOnSegment>
Interval hull_over_ball(const std::vector<double>& knots, double x, double delta,
                        SlopeOnSegment slope_range) {
  const double lo = x - delta;
  const double hi = x + delta;
  bool any = false;
  Interval out;
  for (std::size_t k = 0; k <= knots.size(); ++k) {
    const double a = std::max(k == 0 ? -kInf : knots[k - 1], lo);
    const double b = std::min(k == knots.size() ? kInf : knots[k], hi);
    if (a > b) continue;
    const Interval r = slope_range(k, a, b);
    out = any ? out.hull(r) : r;
    any = true;
  }
  return out;
}

}  // namespace

Interval goldstein_interval(const PiecewiseScalarFunction& F, double x, double delta) {
  require_delta(delta);
  return hull_over_ball(F.breakpoints(), x, delta, [&](std::size_t k, double a, double b) {
    return polynomial_range(F.pieces()[k].derivative(), a, b);
  });
}

Interval partial_goldstein_interval(double fx_grad, const Vec& fy_grad,
                                    const std::vector<PiecewiseScalarFunction>& response, double x,
                                    double delta) {
  require_delta(delta);
  if (static_cast<Index>(response.size()) != fy_grad.size() || response.empty()) {
    throw InvalidArgument("partial Goldstein: one response component per follower gradient entry");
  }
  std::vector<double> knots;
  for (const auto& y : response) {
    knots.insert(knots.end(), y.breakpoints().begin(), y.breakpoints().end());
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  // On each closed segment every response component is a single polynomial,
  // so the linear functional of the Jacobian is one polynomial there.
  return hull_over_ball(knots, x, delta, [&](std::size_t k, double a, double b) {
    double inside = 0.0;
    if (knots.empty()) {
      inside = x;
    } else if (k == 0) {
      inside = knots.front() - 1.0;
    } else if (k == knots.size()) {
      inside = knots.back() + 1.0;
    } else {
      inside = 0.5 * (knots[k - 1] + knots[k]);
    }
    Polynomial q(std::vector<double>{fx_grad});
    for (std::size_t j = 0; j < response.size(); ++j) {
      const auto& y = response[j];
      q += y.pieces()[y.piece_at(inside)].derivative() * fy_grad[static_cast<Index>(j)];
    }
    return polynomial_range(q, a, b);
  });
}

double stationarity_gap(const Interval& interval) {
  if (interval.contains(0.0)) return 0.0;
  return std::min(std::abs(interval.lo), std::abs(interval.hi));
}

namespace {

PiecewiseScalarFunction abs_shifted(double c) {
  return PiecewiseScalarFunction({c}, {Polynomial({c, -1.0}), Polynomial({-c, 1.0})});
}

}  // namespace

Example example_abs_plus_quadratic() {
  return Example{
      "abs_plus_quadratic",
      PiecewiseScalarFunction({0.0}, {Polynomial({1.0, -3.0, 1.0}), Polynomial({1.0, -1.0, 1.0})}),
      {abs_shifted(0.0)},
      -2.0,
      Vec::Constant(1, 1.0),
      0.0};
}

Example example_abs_minus_quadratic() {
  Vec fy(2);
  fy << 1.0, -2.0;
  return Example{
      "abs_minus_quadratic",
      PiecewiseScalarFunction({0.0}, {Polynomial({-1.0, 1.0, -1.0}), Polynomial({-1.0, 3.0, -1.0})}),
      {abs_shifted(0.0), abs_shifted(1.0)},
      0.0,
      std::move(fy),
      0.0};
}

std::vector<TableRow> stationarity_table(const Example& example, const std::vector<double>& deltas) {
  std::vector<TableRow> rows;
  rows.reserve(deltas.size());
  for (double d : deltas) {
    TableRow r;
    r.delta = d;
    r.full = goldstein_interval(example.composite, example.x, d);
    r.full_gap = stationarity_gap(r.full);
    r.partial = partial_goldstein_interval(example.fx_grad, example.fy_grad, example.response,
                                           example.x, d);
    r.partial_gap = stationarity_gap(r.partial);
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> default_delta_grid() {
  return {0.1, 0.25, 0.5, 0.75, 1.0, 1.2, 1.5, 2.0};
}

}  // namespace pzos::goldstein
