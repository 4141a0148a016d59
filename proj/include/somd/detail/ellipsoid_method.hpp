#pragma once

// Central-cut ellipsoid method for unconstrained nonsmooth convex
// minimization. Every iterate yields a certified bracket [lower, upper] on the
// optimal value, provided the starting ball contains a minimizer.

#include "somd/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace somd::detail {

struct OracleValue {
  double value = 0.0;
  Vector subgradient;
};

struct EllipsoidSearch {
  Vector best_point;
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Minimizes a convex function over R^n given a ball {|w - center| <= radius}
/// known to contain a minimizer. `oracle(w)` returns value and a subgradient;
/// `done(lower, upper)` decides when the bracket is tight enough.
template <class Oracle, class Stop>
EllipsoidSearch ellipsoid_minimize(Oracle&& oracle, Vector center, double radius, int max_iterations,
                                   Stop&& done) {
  const Index n = center.size();
  EllipsoidSearch out;
  out.best_point = center;

  if (n == 1) {
    // Interval bisection: same certificate, the n = 1 ellipsoid update is singular.
    double lo = center[0] - radius;
    double hi = center[0] + radius;
    for (; out.iterations < max_iterations; ++out.iterations) {
      const double mid = 0.5 * (lo + hi);
      Vector w(1);
      w[0] = mid;
      const OracleValue o = oracle(w);
      const double g = o.subgradient[0];
      if (o.value < out.upper) {
        out.upper = o.value;
        out.best_point = w;
      }
      out.lower = std::max(out.lower, o.value - std::abs(g) * 0.5 * (hi - lo));
      if (g == 0.0) out.lower = out.upper = o.value;
      if (done(out.lower, out.upper)) {
        out.converged = true;
        return out;
      }
      if (g > 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return out;
  }

  const double nd = static_cast<double>(n);
  Matrix shape = Matrix::Identity(n, n) * (radius * radius);
  for (; out.iterations < max_iterations; ++out.iterations) {
    const OracleValue o = oracle(center);
    if (o.value < out.upper) {
      out.upper = o.value;
      out.best_point = center;
    }
    const Vector pg = shape * o.subgradient;
    const double gpg = o.subgradient.dot(pg);
    if (!(gpg > 0.0)) {
      // Zero subgradient: the center is a minimizer.
      out.lower = out.upper = o.value;
      out.converged = true;
      return out;
    }
    const double width = std::sqrt(gpg);
    out.lower = std::max(out.lower, o.value - width);
    if (done(out.lower, out.upper)) {
      out.converged = true;
      return out;
    }
    const Vector step = pg / width;
    center -= step / (nd + 1.0);
    shape = (nd * nd / (nd * nd - 1.0)) * (shape - (2.0 / (nd + 1.0)) * step * step.transpose());
    shape = 0.5 * (shape + shape.transpose()).eval();
  }
  return out;
}

}  // namespace somd::detail
