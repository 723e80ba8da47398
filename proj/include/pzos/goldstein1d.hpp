#pragma once

#include <string>
#include <vector>

#include "pzos/problem.hpp"

namespace pzos::goldstein {

/// Real polynomial, coefficients in increasing degree.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs);

  double operator()(double x) const;
  Polynomial derivative() const;
  /// Degree after dropping trailing zeros; -1 for the zero polynomial.
  int degree() const;
  const std::vector<double>& coeffs() const { return coeffs_; }

  Polynomial& operator+=(const Polynomial& other);
  Polynomial operator*(double s) const;

 private:
  std::vector<double> coeffs_;
};

/// Real roots of p in the closed interval [lo, hi], ascending. The zero
/// polynomial reports no roots.
std::vector<double> real_roots(const Polynomial& p, double lo, double hi);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
  double width() const { return hi - lo; }
  /// Smallest interval containing both.
  Interval hull(const Interval& other) const;
};

/// Exact range of p over [lo, hi] (endpoints plus interior critical points).
Interval polynomial_range(const Polynomial& p, double lo, double hi);

/// Continuous piecewise-polynomial function on the real line. Piece k lives
/// between breakpoints k-1 and k (with -inf and +inf at the ends), so there is
/// one more piece than breakpoints.
class PiecewiseScalarFunction {
 public:
  /// Throws InvalidArgument unless breakpoints are strictly increasing,
  /// pieces.size() == breakpoints.size() + 1 and adjacent pieces agree at
  /// every breakpoint within 1e-12.
  PiecewiseScalarFunction(std::vector<double> breakpoints, std::vector<Polynomial> pieces);

  /// A single polynomial with no breakpoints.
  static PiecewiseScalarFunction smooth(Polynomial p);

  double operator()(double x) const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Polynomial>& pieces() const { return pieces_; }

  /// Index of the piece whose closed domain contains x, preferring the right
  /// piece at a breakpoint.
  std::size_t piece_at(double x) const;
  /// Closed domain of piece k (may be infinite at the ends).
  Interval piece_domain(std::size_t k) const;
  /// Index of the breakpoint equal to x, or -1.
  int breakpoint_index(double x) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<Polynomial> pieces_;
};

/// Convex hull of limiting derivatives at x.
Interval clarke_interval(const PiecewiseScalarFunction& F, double x);

/// Convex hull of Clarke derivatives over the closed ball [x - delta, x + delta].
Interval goldstein_interval(const PiecewiseScalarFunction& F, double x, double delta);

/// { fx_grad + M^T fy_grad : M in the Goldstein hull of the response
/// Jacobian over [x - delta, x + delta] }. The partial gradients are held
/// fixed at their center values.
Interval partial_goldstein_interval(double fx_grad, const Vec& fy_grad,
                                    const std::vector<PiecewiseScalarFunction>& response, double x,
                                    double delta);

/// Distance from 0 to the interval.
double stationarity_gap(const Interval& interval);

/// Composite, response and center partial gradients of a worked example.
struct Example {
  std::string name;
  PiecewiseScalarFunction composite;
  std::vector<PiecewiseScalarFunction> response;
  double fx_grad = 0.0;
  Vec fy_grad;
  double x = 0.0;
};

/// F = (x - 1)^2 + |x| from f(x, y) = (x - 1)^2 + y, y* = |x|, at x = 0.
Example example_abs_plus_quadratic();
/// F = |x| - (x - 1)^2 from f(x, y) = y1 - y2^2, y* = (|x|, |x - 1|), at x = 0.
Example example_abs_minus_quadratic();

struct TableRow {
  double delta = 0.0;
  Interval full;
  double full_gap = 0.0;
  Interval partial;
  double partial_gap = 0.0;
};

std::vector<TableRow> stationarity_table(const Example& example, const std::vector<double>& deltas);

std::vector<double> default_delta_grid();

}  // namespace pzos::goldstein
