#pragma once

// Minimum-volume enclosing ellipsoids (Khachiyan with away steps) and the
// quadratic form H = I + U M U' for losses confined to a d-dimensional
// subspace of [0,1]^N.

#include "somd/core.hpp"
#include "somd/detail/ellipsoid_method.hpp"
#include "somd/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace somd {

inline constexpr Index kMaxSubspaceRank = 10;
inline constexpr Index kMaxSubspaceAmbient = 4096;

/// A rank-d basis U (N x d) of the loss subspace.
class SubspaceSpec {
 public:
  explicit SubspaceSpec(Matrix u) : u_(std::move(u)) {
    if (u_.rows() < 1 || u_.cols() < 1) throw InvalidArgument("SubspaceSpec: empty basis");
    if (u_.cols() > u_.rows()) throw InvalidArgument("SubspaceSpec: need d <= N");
    if (!u_.allFinite()) throw InvalidArgument("SubspaceSpec: non-finite entry");
    Eigen::JacobiSVD<Matrix> svd(u_);
    const Vector& sv = svd.singularValues();
    if (!(sv.maxCoeff() > 0.0) || sv.minCoeff() <= 1e-10 * sv.maxCoeff()) {
      throw InvalidArgument("SubspaceSpec: basis is rank deficient");
    }
  }
  const Matrix& basis() const { return u_; }
  Index ambient() const { return u_.rows(); }
  Index rank() const { return u_.cols(); }

 private:
  Matrix u_;
};

/// {x : (x - center)' M (x - center) <= 1}.
struct EllipsoidResult {
  Matrix M;
  Vector center;
  int iterations = 0;
  /// max_j (x_j - c)'M(x_j - c) - 1 at termination.
  double gap = 0.0;
};

namespace detail {

inline void check_points(const std::vector<Vector>& points, Index& dim) {
  if (points.empty()) throw InvalidArgument("mvee: no points");
  dim = points.front().size();
  if (dim < 1) throw InvalidArgument("mvee: zero-dimensional points");
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidArgument("mvee: points of different dimension");
    if (!p.allFinite()) throw InvalidArgument("mvee: non-finite point");
  }
}

// Khachiyan / Todd-Yildirim iteration on the columns of `lifted`, for the
// minimum-volume ellipsoid centred at the origin in the lifted space.
// Leverage scores are updated by rank-one formulas and refreshed from a fresh
// factorization periodically and before returning.
inline Vector khachiyan_weights(const Matrix& lifted, double tol, int max_iterations, int& iterations) {
  const Index n = lifted.rows();
  const Index m = lifted.cols();
  const double nd = static_cast<double>(n);
  constexpr int kRefreshEvery = 256;
  Vector u = Vector::Constant(m, 1.0 / static_cast<double>(m));
  Matrix inv(n, n);
  Vector kappa(m);
  auto refresh = [&] {
    const Matrix x = lifted * u.asDiagonal() * lifted.transpose();
    Eigen::LLT<Matrix> llt(x);
    if (llt.info() != Eigen::Success) throw InvalidArgument("mvee: points do not span the space");
    inv = llt.solve(Matrix::Identity(n, n));
    kappa = llt.matrixL().solve(lifted).colwise().squaredNorm().transpose();
  };
  refresh();
  bool fresh = true;
  for (iterations = 0; iterations < max_iterations; ++iterations) {
    if (!fresh && iterations % kRefreshEvery == 0) {
      refresh();
      fresh = true;
    }
    Index up = 0;
    const double kmax = kappa.maxCoeff(&up);
    Index down = -1;
    double kmin = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < m; ++j) {
      if (u[j] > 0.0 && kappa[j] < kmin) {
        kmin = kappa[j];
        down = j;
      }
    }
    if (!(kmax > 0.0) || !std::isfinite(kmax)) throw InvalidArgument("mvee: degenerate point set");
    if (kmax <= nd * (1.0 + tol)) {
      if (fresh) return u;
      refresh();
      fresh = true;
      --iterations;
      continue;
    }
    // Toward step on the most violated point, or away step on the least
    // useful supported point when that promises more.
    Index j = up;
    double k = kmax;
    if (down >= 0 && nd - kmin > kmax - nd) {
      j = down;
      k = kmin;
    }
    double tau = (k - nd) / (nd * (k - 1.0));
    if (j == down && j != up) {
      if (!(u[j] < 1.0)) throw InvalidArgument("mvee: degenerate point set");
      const double floor = -u[j] / (1.0 - u[j]);
      // With kappa <= 1 the line objective increases all the way to the bound.
      tau = k <= 1.0 ? floor : std::max(tau, floor);
    }
    const double denom = 1.0 - tau + tau * k;
    if (!(denom > 1e-12)) {
      throw InvalidArgument("mvee: degenerate point set");
    }
    const Vector w = inv * lifted.col(j);
    const Vector s = lifted.transpose() * w;
    const double c = tau / denom;
    kappa = (kappa - c * s.cwiseAbs2()) / (1.0 - tau);
    inv = (inv - c * w * w.transpose()) / (1.0 - tau);
    u *= (1.0 - tau);
    u[j] += tau;
    if (u[j] < 0.0) u[j] = 0.0;
    fresh = false;
  }
  throw SolverError("mvee: no convergence within " + std::to_string(max_iterations) + " iterations");
}

}  // namespace detail

inline constexpr double kDefaultMveeTolerance = 1e-7;
inline constexpr int kMveeIterationCap = 100000;

/// Minimum-volume enclosing ellipsoid of a point set; every point satisfies
/// (x - c)'M(x - c) <= 1 + tol on return.
inline EllipsoidResult mvee(const std::vector<Vector>& points, double tol = kDefaultMveeTolerance,
                            int max_iterations = kMveeIterationCap) {
  if (!(tol > 0.0)) throw InvalidArgument("mvee: tol must be positive");
  Index d = 0;
  detail::check_points(points, d);
  const auto m = static_cast<Index>(points.size());
  if (m < d + 1) throw InvalidArgument("mvee: need at least d + 1 points");
  Matrix lifted(d + 1, m);
  for (Index j = 0; j < m; ++j) {
    lifted.col(j).head(d) = points[static_cast<std::size_t>(j)];
    lifted(d, j) = 1.0;
  }
  // Lifted optimality within n(1 + e) gives containment within 1 + e(d+1)/d.
  const double lifted_tol = tol * static_cast<double>(d) / static_cast<double>(d + 1);
  EllipsoidResult out;
  const Vector u = detail::khachiyan_weights(lifted, lifted_tol, max_iterations, out.iterations);
  const Matrix p = lifted.topRows(d);
  out.center = p * u;
  const Matrix scatter = p * u.asDiagonal() * p.transpose() - out.center * out.center.transpose();
  Eigen::LLT<Matrix> llt(scatter);
  if (llt.info() != Eigen::Success) throw InvalidArgument("mvee: points are affinely degenerate");
  out.M = llt.solve(Matrix::Identity(d, d)) / static_cast<double>(d);
  out.M = 0.5 * (out.M + out.M.transpose()).eval();
  double worst = 0.0;
  for (const auto& x : points) {
    const Vector r = x - out.center;
    worst = std::max(worst, r.dot(out.M * r));
  }
  out.gap = worst - 1.0;
  return out;
}

/// Minimum-volume ellipsoid centred at the origin containing +-x for every
/// given x.
inline EllipsoidResult mvee_centered(const std::vector<Vector>& points, double tol = kDefaultMveeTolerance,
                                     int max_iterations = kMveeIterationCap) {
  if (!(tol > 0.0)) throw InvalidArgument("mvee: tol must be positive");
  Index d = 0;
  detail::check_points(points, d);
  const auto m = static_cast<Index>(points.size());
  Matrix cols(d, m);
  for (Index j = 0; j < m; ++j) cols.col(j) = points[static_cast<std::size_t>(j)];
  EllipsoidResult out;
  const Vector u = detail::khachiyan_weights(cols, tol, max_iterations, out.iterations);
  const Matrix scatter = cols * u.asDiagonal() * cols.transpose();
  Eigen::LLT<Matrix> llt(scatter);
  out.M = llt.solve(Matrix::Identity(d, d)) / static_cast<double>(d);
  out.M = 0.5 * (out.M + out.M.transpose()).eval();
  out.center = Vector::Zero(d);
  double worst = 0.0;
  for (const auto& x : points) worst = std::max(worst, x.dot(out.M * x));
  out.gap = worst - 1.0;
  return out;
}

namespace detail {

// Constraint rows a_k . v <= b_k of {v : 0 <= Uv <= 1}.
struct CoefficientPolytope {
  Matrix a;
  Vector b;
  explicit CoefficientPolytope(const Matrix& u) : a(2 * u.rows(), u.cols()), b(2 * u.rows()) {
    a.topRows(u.rows()) = u;
    a.bottomRows(u.rows()) = -u;
    b.head(u.rows()).setOnes();
    b.tail(u.rows()).setZero();
  }
  double max_violation(const Vector& v) const { return (a * v - b).maxCoeff(); }
};

inline void add_unique(std::vector<Vector>& out, const Vector& v, double tol) {
  for (const auto& w : out) {
    if ((w - v).cwiseAbs().maxCoeff() <= tol) return;
  }
  out.push_back(v);
}

inline bool next_combination(std::vector<Index>& c, Index n) {
  const auto k = static_cast<Index>(c.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (c[static_cast<std::size_t>(i)] < n - k + i) {
      ++c[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Vertices of {v : 0 <= Uv <= 1} by enumerating d-subsets of the 2N
/// constraints.
inline std::vector<Vector> enumerate_coefficient_vertices(const Matrix& u) {
  const Index d = u.cols();
  const Index rows = 2 * u.rows();
  const detail::CoefficientPolytope poly(u);
  const double scale = 1.0 + u.cwiseAbs().maxCoeff();
  std::vector<Vector> out;
  std::vector<Index> pick(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) pick[static_cast<std::size_t>(i)] = i;
  Matrix sub(d, d);
  Vector rhs(d);
  do {
    bool opposite = false;
    for (Index i = 0; i < d && !opposite; ++i) {
      for (Index j = i + 1; j < d; ++j) {
        if (pick[static_cast<std::size_t>(j)] - pick[static_cast<std::size_t>(i)] == u.rows()) {
          opposite = true;
          break;
        }
      }
    }
    if (opposite) continue;
    for (Index i = 0; i < d; ++i) {
      sub.row(i) = poly.a.row(pick[static_cast<std::size_t>(i)]);
      rhs[i] = poly.b[pick[static_cast<std::size_t>(i)]];
    }
    Eigen::FullPivLU<Matrix> lu(sub);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) continue;
    const Vector v = lu.solve(rhs);
    if (poly.max_violation(v) <= 1e-9 * scale) detail::add_unique(out, v, 1e-9 * scale);
  } while (detail::next_combination(pick, rows));
  return out;
}

/// Point maximizing the smallest constraint slack of {v : 0 <= Uv <= 1}, and
/// that slack.
inline std::pair<Vector, double> coefficient_polytope_center(const Matrix& u) {
  const Index d = u.cols();
  const detail::CoefficientPolytope poly(u);
  Eigen::JacobiSVD<Matrix> svd(u);
  const double smin = svd.singularValues().minCoeff();
  const double radius = std::sqrt(static_cast<double>(u.rows())) / smin;
  auto oracle = [&](const Vector& v) {
    const Vector viol = poly.a * v - poly.b;
    Index k = 0;
    detail::OracleValue o;
    o.value = viol.maxCoeff(&k);
    o.subgradient = poly.a.row(k).transpose();
    return o;
  };
  auto done = [](double lo, double hi) { return hi - lo <= 1e-10; };
  const auto search = detail::ellipsoid_minimize(oracle, Vector::Zero(d), radius * 1.01, 20000, done);
  return {search.best_point, -search.upper};
}

/// Boundary points of {v : 0 <= Uv <= 1} from a hit-and-run walk: each chord
/// contributes both endpoints.
inline std::vector<Vector> sample_coefficient_boundary(const Matrix& u, Index count, Rng& rng) {
  const Index d = u.cols();
  const detail::CoefficientPolytope poly(u);
  auto [v, slack] = coefficient_polytope_center(u);
  if (!(slack > 1e-10)) throw InvalidArgument("coefficient polytope is empty or lower-dimensional");
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<Index>(out.size()) < count) {
    Vector dir = normal_vector(rng, d);
    dir.normalize();
    const Vector ad = poly.a * dir;
    const Vector room = poly.b - poly.a * v;
    double hi = std::numeric_limits<double>::infinity();
    double lo = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < ad.size(); ++k) {
      if (ad[k] > 0.0) hi = std::min(hi, room[k] / ad[k]);
      if (ad[k] < 0.0) lo = std::max(lo, room[k] / ad[k]);
    }
    if (!std::isfinite(hi) || !std::isfinite(lo)) throw InvalidArgument("coefficient polytope is unbounded");
    out.push_back(v + hi * dir);
    if (static_cast<Index>(out.size()) < count) out.push_back(v + lo * dir);
    v += uniform(rng, lo, hi) * dir;
  }
  return out;
}

/// Extreme points (or boundary samples when d > 4) of {v : 0 <= Uv <= 1}.
inline std::vector<Vector> coefficient_polytope_points(const SubspaceSpec& subspace, Index sample_count, Rng& rng) {
  const Matrix& u = subspace.basis();
  if (subspace.rank() <= 4) {
    auto vertices = enumerate_coefficient_vertices(u);
    if (static_cast<Index>(vertices.size()) < subspace.rank() + 1) {
      throw InvalidArgument("coefficient polytope is empty or lower-dimensional");
    }
    return vertices;
  }
  return sample_coefficient_boundary(u, sample_count, rng);
}

/// H = I_N + U M U', M the minimum-volume origin-centred ellipsoid of the
/// difference body P - P of the coefficient polytope P = {v : 0 <= Uv <= 1}.
inline Matrix build_H(const SubspaceSpec& subspace, Index sample_count, double tol, Rng& rng) {
  const Index n = subspace.ambient();
  const Index d = subspace.rank();
  if (d > kMaxSubspaceRank || n > kMaxSubspaceAmbient) {
    throw InvalidArgument("build_H: supported up to d = " + std::to_string(kMaxSubspaceRank) +
                          ", N = " + std::to_string(kMaxSubspaceAmbient));
  }
  if (sample_count < 2 * (d + 1)) throw InvalidArgument("build_H: sample_count too small");
  std::vector<Vector> pts = coefficient_polytope_points(subspace, sample_count, rng);
  constexpr std::size_t kMaxPool = 600;
  if (pts.size() > kMaxPool) {
    for (std::size_t i = 0; i < kMaxPool; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_index(rng, pts.size() - i));
      std::swap(pts[i], pts[j]);
    }
    pts.resize(kMaxPool);
  }
  std::vector<Vector> diffs;
  diffs.reserve(pts.size() * (pts.size() - 1) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) diffs.push_back(pts[i] - pts[j]);
  }
  const EllipsoidResult e = mvee_centered(diffs, tol);
  const Matrix& u = subspace.basis();
  Matrix h = Matrix::Identity(n, n) + u * e.M * u.transpose();
  return 0.5 * (h + h.transpose());
}

}  // namespace somd
