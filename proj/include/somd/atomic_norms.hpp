#pragma once

// Atomic norms (gauges of centrally symmetric convex bodies), their duals
// (support functions), and the gauge of a Minkowski sum.

#include "somd/core.hpp"
#include "somd/detail/ellipsoid_method.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <variant>

namespace somd {

/// Hölder conjugate; p = 1 and p = inf are handled as explicit limits.
inline double holder_conjugate(double p) {
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

/// ||x||_p for p in [1, inf].
inline double pnorm(const Vector& x, double p) {
  if (x.size() == 0) return 0.0;
  if (std::isinf(p)) return x.cwiseAbs().maxCoeff();
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return x.stableNorm();
  // Scale by the largest magnitude to keep the powers in range.
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]) / m, p);
  return m * std::pow(acc, 1.0 / p);
}

/// A centrally symmetric, convex, compact body with nonempty interior.
///
///  - scaled p-norm ball  {x : ||x||_p <= radius}
///  - ellipsoid           {x : x'Qx <= 1}, or given through its dual shape P
///                        as {x : x'P^{-1}x <= 1} so that the support function
///                        is sqrt(z'Pz) without inverting anything
///  - Minkowski sum       {a + b : a in A1, b in A2}
class AtomicSet {
 public:
  enum class Kind { kScaledPNormBall, kEllipsoid, kMinkowskiSum };

  struct PNormBall {
    double p;
    double radius;
  };
  struct Ellipsoid {
    Matrix shape;          // Q (primal form) or P (dual form)
    bool dual_form;        // true: body is {x : x'P^{-1}x <= 1}
    Eigen::LLT<Matrix> factor;
    double lambda_min;
    double lambda_max;
  };
  struct Sum {
    std::shared_ptr<const AtomicSet> first;
    std::shared_ptr<const AtomicSet> second;
    const AtomicSet& left() const { return *first; }
    const AtomicSet& right() const { return *second; }
  };

  static AtomicSet scaled_pnorm_ball(Index n, double p, double radius) {
    if (n < 1) throw InvalidArgument("scaled_pnorm_ball: dimension must be at least 1");
    if (!(p >= 1.0)) throw InvalidArgument("scaled_pnorm_ball: p must be >= 1");
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw InvalidArgument("scaled_pnorm_ball: radius must be positive");
    }
    return AtomicSet(n, PNormBall{p, radius});
  }

  /// {x : x'Qx <= 1}.
  static AtomicSet ellipsoid(Matrix q) { return make_ellipsoid(std::move(q), false); }

  /// {x : x'P^{-1}x <= 1}; its support function is sqrt(z'Pz).
  static AtomicSet ellipsoid_from_dual(Matrix p) { return make_ellipsoid(std::move(p), true); }

  static AtomicSet minkowski_sum(AtomicSet left, AtomicSet right) {
    if (left.dimension() != right.dimension()) {
      throw InvalidArgument("minkowski_sum: dimension mismatch (" + std::to_string(left.dimension()) +
                            " vs " + std::to_string(right.dimension()) + ")");
    }
    const Index n = left.dimension();
    return AtomicSet(n, Sum{std::make_shared<const AtomicSet>(std::move(left)),
                             std::make_shared<const AtomicSet>(std::move(right))});
  }

  Kind kind() const { return static_cast<Kind>(node_->body.index()); }
  Index dimension() const { return node_->dimension; }

  const PNormBall& pnorm_ball() const { return std::get<PNormBall>(node_->body); }
  const Ellipsoid& ellipsoid_body() const { return std::get<Ellipsoid>(node_->body); }
  const Sum& sum() const { return std::get<Sum>(node_->body); }

  /// Radius of the largest Euclidean ball centred at 0 inside the body
  /// (a lower bound for Minkowski sums).
  double inradius() const {
    switch (kind()) {
      case Kind::kScaledPNormBall: {
        const auto& b = pnorm_ball();
        const double n = static_cast<double>(dimension());
        if (b.p >= 2.0) return b.radius;
        return b.radius * std::pow(n, 0.5 - 1.0 / b.p);
      }
      case Kind::kEllipsoid: {
        const auto& e = ellipsoid_body();
        return e.dual_form ? std::sqrt(e.lambda_min) : 1.0 / std::sqrt(e.lambda_max);
      }
      case Kind::kMinkowskiSum:
        return sum().left().inradius() + sum().right().inradius();
    }
    return 0.0;
  }

  /// Radius of the smallest Euclidean ball centred at 0 containing the body
  /// (an upper bound for Minkowski sums).
  double circumradius() const {
    switch (kind()) {
      case Kind::kScaledPNormBall: {
        const auto& b = pnorm_ball();
        const double n = static_cast<double>(dimension());
        if (b.p <= 2.0) return b.radius;
        const double inv_p = std::isinf(b.p) ? 0.0 : 1.0 / b.p;
        return b.radius * std::pow(n, 0.5 - inv_p);
      }
      case Kind::kEllipsoid: {
        const auto& e = ellipsoid_body();
        return e.dual_form ? std::sqrt(e.lambda_max) : 1.0 / std::sqrt(e.lambda_min);
      }
      case Kind::kMinkowskiSum:
        return sum().left().circumradius() + sum().right().circumradius();
    }
    return 0.0;
  }

 private:
  struct Node {
    Index dimension;
    std::variant<PNormBall, Ellipsoid, Sum> body;
  };

  template <class Body>
  AtomicSet(Index n, Body body) : node_(std::make_shared<const Node>(Node{n, std::move(body)})) {}

  static AtomicSet make_ellipsoid(Matrix m, bool dual_form) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw InvalidArgument("ellipsoid: matrix must be square and nonempty");
    }
    if (!m.allFinite()) throw InvalidArgument("ellipsoid: non-finite matrix entry");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw InvalidArgument("ellipsoid: matrix is not symmetric");
    }
    Matrix sym = 0.5 * (m + m.transpose());
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success) {
      throw InvalidArgument("ellipsoid: matrix is not positive definite");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) throw InvalidArgument("ellipsoid: matrix is not positive definite");
    const Index n = sym.rows();
    return AtomicSet(n, Ellipsoid{std::move(sym), dual_form, std::move(llt), lo, hi});
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

inline void check_dimension(const AtomicSet& set, const Vector& x, const char* what) {
  if (set.dimension() != x.size()) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (set " +
                          std::to_string(set.dimension()) + ", vector " + std::to_string(x.size()) + ")");
  }
}

// sqrt(x' S^{-1} x) using the Cholesky factor of S.
inline double inverse_quadratic_norm(const Eigen::LLT<Matrix>& factor, const Vector& x) {
  const Vector y = factor.matrixL().solve(x);
  return y.norm();
}

// Gradient of ||z||_q (any element of the subdifferential at 0).
inline Vector pnorm_gradient(const Vector& z, double q) {
  const Index n = z.size();
  Vector g = Vector::Zero(n);
  const double nz = pnorm(z, q);
  if (nz == 0.0) return g;
  if (std::isinf(q)) {
    Index j = 0;
    z.cwiseAbs().maxCoeff(&j);
    g[j] = z[j] > 0.0 ? 1.0 : -1.0;
    return g;
  }
  if (q == 1.0) {
    for (Index i = 0; i < n; ++i) g[i] = z[i] > 0.0 ? 1.0 : (z[i] < 0.0 ? -1.0 : 0.0);
    return g;
  }
  for (Index i = 0; i < n; ++i) {
    const double a = std::abs(z[i]) / nz;
    g[i] = (z[i] > 0.0 ? 1.0 : (z[i] < 0.0 ? -1.0 : 0.0)) * std::pow(a, q - 1.0);
  }
  return g;
}

}  // namespace detail

double dual_norm(const AtomicSet& set, const Vector& x);

/// Certified bracket on the gauge of a Minkowski sum.
struct MinkowskiNormBracket {
  double lower = 0.0;
  double upper = 0.0;
  int iterations = 0;
  double value() const { return 0.5 * (lower + upper); }
};

/// A maximizer of z.a over a in the body (a subgradient of the support
/// function at z).
inline Vector support_point(const AtomicSet& set, const Vector& z) {
  detail::check_dimension(set, z, "support_point");
  switch (set.kind()) {
    case AtomicSet::Kind::kScaledPNormBall: {
      const auto& b = set.pnorm_ball();
      return b.radius * detail::pnorm_gradient(z, holder_conjugate(b.p));
    }
    case AtomicSet::Kind::kEllipsoid: {
      const auto& e = set.ellipsoid_body();
      if (z.isZero(0.0)) return Vector::Zero(z.size());
      if (e.dual_form) {
        const Vector pz = e.shape * z;
        return pz / std::sqrt(z.dot(pz));
      }
      const Vector qz = e.factor.solve(z);
      return qz / std::sqrt(z.dot(qz));
    }
    case AtomicSet::Kind::kMinkowskiSum:
      return support_point(set.sum().left(), z) + support_point(set.sum().right(), z);
  }
  return Vector::Zero(z.size());
}

/// Gauge of left + right at x, computed through the support function:
/// ||x|| = 1 / min { h(z) : x.z = 1 }, h = h_left + h_right. The ellipsoid
/// method on the hyperplane x.z = 1 brackets the minimum; iteration stops once
/// the implied bracket on the gauge is narrower than `tol`.
inline MinkowskiNormBracket minkowski_norm_bracket(const AtomicSet& left, const AtomicSet& right,
                                                   const Vector& x, double tol,
                                                   int max_iterations = 10000) {
  if (!(tol > 0.0)) throw InvalidArgument("minkowski_norm: tol must be positive");
  detail::check_dimension(left, x, "minkowski_norm");
  detail::check_dimension(right, x, "minkowski_norm");
  const double xn2 = x.squaredNorm();
  if (xn2 == 0.0) return {0.0, 0.0, 0};

  auto support = [&](const Vector& z) { return dual_norm(left, z) + dual_norm(right, z); };
  const Index n = x.size();
  const Vector z0 = x / xn2;
  if (n == 1) {
    const double g = 1.0 / support(z0);
    return {g, g, 0};
  }

  // Orthonormal basis of the complement of x.
  Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix full_q = qr.householderQ();
  const Matrix basis = full_q.rightCols(n - 1);

  auto oracle = [&](const Vector& w) {
    const Vector z = z0 + basis * w;
    detail::OracleValue o;
    o.value = support(z);
    o.subgradient = basis.transpose() * (support_point(left, z) + support_point(right, z));
    return o;
  };
  const double rho = left.inradius() + right.inradius();
  const double radius = support(z0) / rho * (1.0 + 1e-9) + 1e-300;
  auto done = [&](double lo, double hi) { return lo > 0.0 && (1.0 / lo - 1.0 / hi) <= tol; };
  const auto search = detail::ellipsoid_minimize(oracle, Vector::Zero(n - 1), radius, max_iterations, done);
  if (!search.converged) {
    throw SolverError("minkowski_norm: no convergence after " + std::to_string(search.iterations) +
                      " iterations (bracket [" + std::to_string(search.lower) + ", " +
                      std::to_string(search.upper) + "] on the support value)");
  }
  return {1.0 / search.upper, 1.0 / search.lower, search.iterations};
}

/// ||x||_{left + right} to absolute accuracy `tol`.
inline double minkowski_norm(const AtomicSet& left, const AtomicSet& right, const Vector& x, double tol,
                             int max_iterations = 10000) {
  return minkowski_norm_bracket(left, right, x, tol, max_iterations).value();
}

/// Default accuracy used by norm() on Minkowski sums.
inline constexpr double kMinkowskiNormTolerance = 1e-9;

/// The gauge ||x||_A = inf {t > 0 : x in tA}; 0 at the origin.
inline double norm(const AtomicSet& set, const Vector& x) {
  detail::check_dimension(set, x, "norm");
  switch (set.kind()) {
    case AtomicSet::Kind::kScaledPNormBall: {
      const auto& b = set.pnorm_ball();
      return pnorm(x, b.p) / b.radius;
    }
    case AtomicSet::Kind::kEllipsoid: {
      const auto& e = set.ellipsoid_body();
      if (e.dual_form) return detail::inverse_quadratic_norm(e.factor, x);
      return std::sqrt(std::max(0.0, x.dot(e.shape * x)));
    }
    case AtomicSet::Kind::kMinkowskiSum:
      return minkowski_norm(set.sum().left(), set.sum().right(), x, kMinkowskiNormTolerance);
  }
  return 0.0;
}

/// The support function sup {x.z : z in A}.
inline double dual_norm(const AtomicSet& set, const Vector& x) {
  detail::check_dimension(set, x, "dual_norm");
  switch (set.kind()) {
    case AtomicSet::Kind::kScaledPNormBall: {
      const auto& b = set.pnorm_ball();
      return b.radius * pnorm(x, holder_conjugate(b.p));
    }
    case AtomicSet::Kind::kEllipsoid: {
      const auto& e = set.ellipsoid_body();
      if (e.dual_form) return std::sqrt(std::max(0.0, x.dot(e.shape * x)));
      return detail::inverse_quadratic_norm(e.factor, x);
    }
    case AtomicSet::Kind::kMinkowskiSum:
      // Support functions add over Minkowski sums.
      return dual_norm(set.sum().left(), x) + dual_norm(set.sum().right(), x);
  }
  return 0.0;
}

}  // namespace somd
