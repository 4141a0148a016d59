#pragma once

// Minimizers of R(p) + c.p over the probability simplex: Euclidean
// projection, an exact active-set QP, exponent bisection for squared q-norms,
// multiplicative updates for entropy, and a projected Newton (SQP) method
// for everything else.

#include "somd/core.hpp"
#include "somd/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace somd {

/// Euclidean projection of v onto the simplex.
inline Vector project_simplex(const Vector& v) {
  const Index n = v.size();
  if (n == 0) throw InvalidArgument("project_simplex: empty vector");
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - t > 0.0) theta = t;
  }
  Vector p = (v.array() - theta).cwiseMax(0.0).matrix();
  return p / p.sum();
}

/// Softmax of -c, computed stably.
inline Vector entropic_minimizer(const Vector& c) {
  const double shift = c.minCoeff();
  Vector w = (-(c.array() - shift)).exp().matrix();
  return w / w.sum();
}

namespace detail {

inline Vector feasible_start(const Vector& start) {
  Vector x = start.cwiseMax(0.0);
  const double s = x.sum();
  if (!(s > 0.0)) return Vector::Constant(start.size(), 1.0 / static_cast<double>(start.size()));
  return x / s;
}

}  // namespace detail

/// Exact minimizer of p'Qp + c.p over the simplex for SPD Q (primal
/// active-set method, warm-started at `start`).
inline Vector simplex_qp(const Matrix& q, const Vector& c, const Vector& start) {
  const Index n = c.size();
  if (q.rows() != n || q.cols() != n || start.size() != n) {
    throw InvalidArgument("simplex_qp: dimension mismatch");
  }
  Vector x = detail::feasible_start(start);
  std::vector<char> free(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) free[static_cast<std::size_t>(i)] = x[i] > 0.0;

  const double scale = 1.0 + c.cwiseAbs().maxCoeff() + 2.0 * q.cwiseAbs().rowwise().sum().maxCoeff();
  const double tol = 1e-12 * scale;
  const int max_iterations = static_cast<int>(10 * n + 100);

  std::vector<Index> idx;
  for (int iter = 0; iter < max_iterations; ++iter) {
    idx.clear();
    for (Index i = 0; i < n; ++i) {
      if (free[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    const auto m = static_cast<Index>(idx.size());
    Matrix qf(m, m);
    Vector cf(m);
    Vector xf(m);
    for (Index a = 0; a < m; ++a) {
      cf[a] = c[idx[static_cast<std::size_t>(a)]];
      xf[a] = x[idx[static_cast<std::size_t>(a)]];
      for (Index b = 0; b < m; ++b) qf(a, b) = q(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    Eigen::LLT<Matrix> llt(qf);
    if (llt.info() != Eigen::Success) throw SolverError("simplex_qp: matrix is not positive definite");
    const Vector a = llt.solve(Vector::Ones(m));
    const Vector b = llt.solve(cf);
    // Stationarity 2Qz + c + mu 1 = 0 with 1'z = 1.
    const double mu = -(2.0 + b.sum()) / a.sum();
    const Vector z = -0.5 * (b + mu * a);

    double step = 1.0;
    Index blocking = -1;
    for (Index k = 0; k < m; ++k) {
      if (z[k] < 0.0) {
        const double s = xf[k] / (xf[k] - z[k]);
        if (s < step) {
          step = s;
          blocking = k;
        }
      }
    }
    if (blocking >= 0) {
      const Vector moved = xf + step * (z - xf);
      for (Index k = 0; k < m; ++k) x[idx[static_cast<std::size_t>(k)]] = std::max(0.0, moved[k]);
      x[idx[static_cast<std::size_t>(blocking)]] = 0.0;
      free[static_cast<std::size_t>(idx[static_cast<std::size_t>(blocking)])] = 0;
      continue;
    }
    for (Index k = 0; k < m; ++k) x[idx[static_cast<std::size_t>(k)]] = z[k];

    // Multipliers of the bound constraints that are currently active.
    const Vector g = 2.0 * (q * x) + c;
    double worst = -tol;
    Index enter = -1;
    for (Index i = 0; i < n; ++i) {
      if (free[static_cast<std::size_t>(i)]) continue;
      const double lambda = g[i] + mu;
      if (lambda < worst) {
        worst = lambda;
        enter = i;
      }
    }
    if (enter < 0) {
      x = x.cwiseMax(0.0);
      return x / x.sum();
    }
    free[static_cast<std::size_t>(enter)] = 1;
  }
  throw SolverError("simplex_qp: active set did not settle within " + std::to_string(max_iterations) +
                    " pivots");
}

/// Exact minimizer of ||p||_q^2 + c.p over the simplex. Stationary points
/// have p_i proportional to ((tau - c_i)_+)^{1/(q-1)}; tau is found by
/// bisection on the scalar optimality condition.
inline Vector squared_qnorm_minimizer(double q, const Vector& c) {
  if (!(q > 1.0)) throw InvalidArgument("squared_qnorm_minimizer: q must exceed 1");
  const Index n = c.size();
  const double inv = 1.0 / (q - 1.0);
  const double cmin = c.minCoeff();

  auto weights = [&](double tau) {
    Vector w(n);
    for (Index i = 0; i < n; ++i) w[i] = tau > c[i] ? std::pow(tau - c[i], inv) : 0.0;
    return w;
  };
  // Positive below the optimal tau, negative above it.
  auto residual = [&](double tau) {
    const Vector w = weights(tau);
    const double total = w.sum();
    if (!(total > 0.0)) return 1.0;
    const double ratio = pnorm(w, q) / total;
    return 2.0 * std::pow(ratio, 2.0 - q) - std::pow(total, q - 1.0);
  };

  double lo = cmin;
  double width = 1.0;
  double hi = cmin + width;
  int guard = 0;
  while (residual(hi) > 0.0) {
    lo = hi;
    width *= 2.0;
    hi = cmin + width;
    if (++guard > 2000) throw SolverError("squared_qnorm_minimizer: could not bracket the multiplier");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (residual(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Vector w = weights(hi);
  if (!(w.sum() > 0.0)) w = weights(0.5 * (lo + hi));
  return w / w.sum();
}

/// Frank-Wolfe gap g.x - min_i g_i of a simplex point.
inline double simplex_gap(const Vector& gradient, const Vector& x) { return gradient.dot(x) - gradient.minCoeff(); }

struct NewtonOptions {
  double gap_tolerance = 1e-10;
  /// Gap still accepted when the iteration cap or line-search floor is hit.
  double fallback_tolerance = 1e-7;
  /// 0 selects 50 * N.
  int max_iterations = 0;
};

/// Minimizer of R(p) + c.p over the simplex by projected Newton steps: each
/// iteration solves the quadratic model exactly on the simplex and performs
/// an exact line search, keeping the iterate interior when R requires it.
inline Vector simplex_newton(const Regularizer& r, const Vector& c, const Vector& start,
                             const NewtonOptions& options = {}) {
  const Index n = c.size();
  if (r.dimension() != n || start.size() != n) throw InvalidArgument("simplex_newton: dimension mismatch");
  const bool interior = r.requires_interior();
  Vector x = detail::feasible_start(start);
  if (interior && x.minCoeff() <= 0.0) {
    x = 0.5 * x + Vector::Constant(n, 0.5 / static_cast<double>(n));
  }
  const int cap = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(50 * n);
  // Exact line search on the directional derivative, which stays accurate
  // where objective differences drop below rounding. Returns false when the
  // iterate does not move.
  auto search = [&](const Vector& d, double step_max) {
    auto slope_at = [&](double a) {
      Vector trial = x + a * d;
      if (!interior) trial = trial.cwiseMax(0.0);
      return (r.gradient(trial) + c).dot(d);
    };
    double step = step_max;
    if (slope_at(step_max) > 0.0) {
      double lo = 0.0;
      double hi = step_max;
      for (int ls = 0; ls < 60; ++ls) {
        const double mid = 0.5 * (lo + hi);
        (slope_at(mid) > 0.0 ? hi : lo) = mid;
      }
      step = lo > 0.0 ? lo : hi;
    }
    Vector next = x + step * d;
    if (!interior) next = next.cwiseMax(0.0);
    next /= next.sum();
    if ((next - x).cwiseAbs().maxCoeff() == 0.0) return false;
    x = std::move(next);
    return true;
  };

  double gap = 0.0;
  for (int iter = 0; iter < cap; ++iter) {
    const Vector g = r.gradient(x) + c;
    gap = simplex_gap(g, x);
    if (gap <= options.gap_tolerance) return x;

    Matrix h = r.hessian(x, 1e-12);
    const double ridge = 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
    h.diagonal().array() += ridge;
    // Model: g.(y - x) + 1/2 (y - x)'H(y - x) = y'(H/2)y + (g - Hx).y + const.
    const Vector y = simplex_qp(0.5 * h, g - h * x, x);
    const Vector d = y - x;
    bool moved = false;
    if (g.dot(d) < 0.0) {
      double step_max = 1.0;
      if (interior) {
        for (Index i = 0; i < n; ++i) {
          if (d[i] < 0.0) step_max = std::min(step_max, 0.99 * x[i] / -d[i]);
        }
      }
      moved = search(d, step_max);
      if (moved && simplex_gap(r.gradient(x) + c, x) <= 0.5 * gap) continue;
    }
    // Newton stalled or crept along a steep coordinate: shift mass from the
    // worst supported coordinate to the best one.
    const Vector gp = moved ? Vector(r.gradient(x) + c) : g;
    Index best = 0;
    gp.minCoeff(&best);
    Index worst = -1;
    for (Index i = 0; i < n; ++i) {
      if (x[i] > 0.0 && (worst < 0 || gp[i] > gp[worst])) worst = i;
    }
    bool shifted = false;
    if (worst >= 0 && gp[worst] > gp[best]) {
      Vector pair = Vector::Zero(n);
      pair[best] = 1.0;
      pair[worst] = -1.0;
      shifted = search(pair, interior ? 0.99 * x[worst] : x[worst]);
    }
    if (!moved && !shifted) break;
  }
  gap = simplex_gap(r.gradient(x) + c, x);
  if (gap <= options.fallback_tolerance) return x;
  throw SolverError("simplex_newton: duality gap " + std::to_string(gap) + " after the iteration budget");
}

/// argmin over the simplex of R(p) + c.p, dispatching to the exact solver for
/// the regularizer's structure. `start` is a warm start.
inline Vector minimize_on_simplex(const Regularizer& r, const Vector& c, const Vector& start) {
  switch (r.kind()) {
    case Regularizer::Kind::kNegEntropy:
      return entropic_minimizer(c);
    case Regularizer::Kind::kSquaredQNorm:
      return squared_qnorm_minimizer(r.q(), c);
    default:
      break;
  }
  if (const auto& quad = r.quadratic_matrix()) {
    if (r.is_isotropic()) {
      const double kappa = (*quad)(0, 0);
      return project_simplex(-c / (2.0 * kappa));
    }
    return simplex_qp(*quad, c, start);
  }
  return simplex_newton(r, c, start);
}

}  // namespace somd
