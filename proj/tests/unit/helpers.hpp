#pragma once

#include <cmath>
#include <functional>
#include <memory>

#include "pzos/problem.hpp"

namespace testing {

using pzos::Index;
using pzos::Vec;

/// Central difference of a scalar function, coordinate by coordinate.
inline Vec central_difference(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vec xp = x;
    Vec xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

/// f(x, y) = 0.5 |x|^2 with y unused.
inline std::shared_ptr<pzos::FunctionObjective> half_square(pzos::Sense sense = pzos::Sense::minimize) {
  const double s = sense == pzos::Sense::minimize ? 1.0 : -1.0;
  return std::make_shared<pzos::FunctionObjective>(
      [s](const Vec& x, const Vec&) { return 0.5 * s * x.squaredNorm(); },
      [s](const Vec& x, const Vec&) -> Vec { return s * x; },
      [](const Vec&, const Vec& y) -> Vec { return Vec::Zero(y.size()); }, sense);
}

inline std::shared_ptr<pzos::FunctionOracle> linear_oracle(const pzos::Mat& A) {
  return std::make_shared<pzos::FunctionOracle>(A.cols(), A.rows(),
                                                [A](const Vec& x) -> Vec { return A * x; });
}

inline std::shared_ptr<pzos::FunctionOracle> constant_oracle(Index dx, const Vec& c) {
  return std::make_shared<pzos::FunctionOracle>(dx, c.size(), [c](const Vec&) -> Vec { return c; });
}

/// 1-D y*(x) = |x|.
inline std::shared_ptr<pzos::FunctionOracle> abs_oracle() {
  return std::make_shared<pzos::FunctionOracle>(
      1, 1, [](const Vec& x) -> Vec { return Vec::Constant(1, std::abs(x[0])); });
}

}  // namespace testing
