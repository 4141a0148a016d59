#pragma once

// Structured loss families: samplers, membership tests, matched
// regularizers with closed-form regret bounds, and the hypercube adversary
// used for lower bounds.

#include "somd/core.hpp"
#include "somd/lowrank_geometry.hpp"
#include "somd/random.hpp"
#include "somd/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace somd {

class LossSpaceSpec {
 public:
  enum class Kind { kStandard, kSparse, kSpherical, kNoisy, kLowRank, kAdditive };

  /// [0,1]^N.
  static LossSpaceSpec standard(Index n) {
    check_dim(n);
    return LossSpaceSpec(Node{Kind::kStandard, n});
  }

  /// Vectors in [0,1]^N with at most s nonzero entries (sampled with exactly s).
  static LossSpaceSpec sparse(Index n, Index s) {
    check_dim(n);
    if (s < 1 || s > n) throw InvalidArgument("sparse: need 1 <= s <= N, got s = " + std::to_string(s));
    Node node{Kind::kSparse, n};
    node.sparsity = s;
    return LossSpaceSpec(std::move(node));
  }

  /// {l in [0,1]^N : l'Al <= eps} for SPD A.
  static LossSpaceSpec spherical(Matrix a, double eps) {
    const Index n = a.rows();
    check_dim(n);
    check_eps(eps, "spherical");
    if (a.cols() != n) throw InvalidArgument("spherical: A must be square");
    if (!a.allFinite() || (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + a.cwiseAbs().maxCoeff())) {
      throw InvalidArgument("spherical: A must be finite and symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()));
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
      throw InvalidArgument("spherical: A must be positive definite");
    }
    Node node{Kind::kSpherical, n};
    node.eps = eps;
    node.eigenvalues = eig.eigenvalues();
    node.eigenvectors = eig.eigenvectors();
    node.shape = 0.5 * (a + a.transpose());
    return LossSpaceSpec(std::move(node));
  }

  /// {l in [0,1]^N : ||l||_2^2 <= eps}.
  static LossSpaceSpec noisy(Index n, double eps) {
    check_dim(n);
    check_eps(eps, "noisy");
    Node node{Kind::kNoisy, n};
    node.eps = eps;
    return LossSpaceSpec(std::move(node));
  }

  /// {Uv in [0,1]^N}. The coefficient polytope and the quadratic form H are
  /// computed once here; `seed` drives boundary sampling when d > 4.
  static LossSpaceSpec low_rank(const SubspaceSpec& subspace, std::uint64_t seed = 0, Index sample_count = 256,
                                double tol = kDefaultMveeTolerance) {
    Node node{Kind::kLowRank, subspace.ambient()};
    Rng rng(seed);
    node.basis = subspace.basis();
    node.sparsity = subspace.rank();
    node.vertices = coefficient_polytope_points(subspace, sample_count, rng);
    node.shape = build_H(subspace, sample_count, tol, rng);
    return LossSpaceSpec(std::move(node));
  }

  /// Minkowski sum left + right.
  static LossSpaceSpec additive(const LossSpaceSpec& left, const LossSpaceSpec& right) {
    if (left.dimension() != right.dimension()) throw InvalidArgument("additive: dimension mismatch");
    Node node{Kind::kAdditive, left.dimension()};
    node.left = left.node_;
    node.right = right.node_;
    return LossSpaceSpec(std::move(node));
  }

  Kind kind() const { return node_->kind; }
  Index dimension() const { return node_->dimension; }
  Index sparsity() const { return node_->sparsity; }
  /// Rank of a low-rank space.
  Index rank() const { return node_->sparsity; }
  double eps() const { return node_->eps; }
  /// A for spherical spaces, H for low-rank spaces.
  const Matrix& shape() const { return node_->shape; }
  const Matrix& basis() const { return node_->basis; }
  const Vector& eigenvalues() const { return node_->eigenvalues; }
  const Matrix& eigenvectors() const { return node_->eigenvectors; }
  const std::vector<Vector>& coefficient_vertices() const { return node_->vertices; }
  LossSpaceSpec left() const { return LossSpaceSpec(node_->left); }
  LossSpaceSpec right() const { return LossSpaceSpec(node_->right); }

  /// A^{-1} from the eigendecomposition.
  Matrix shape_inverse() const {
    return node_->eigenvectors * node_->eigenvalues.cwiseInverse().asDiagonal() * node_->eigenvectors.transpose();
  }

  std::string describe() const {
    switch (node_->kind) {
      case Kind::kStandard:
        return "standard";
      case Kind::kSparse:
        return "sparse(s=" + std::to_string(node_->sparsity) + ")";
      case Kind::kSpherical:
        return "spherical(eps=" + format_real(node_->eps) + ")";
      case Kind::kNoisy:
        return "noisy(eps=" + format_real(node_->eps) + ")";
      case Kind::kLowRank:
        return "lowrank(d=" + std::to_string(node_->sparsity) + ")";
      case Kind::kAdditive:
        return left().describe() + "+" + right().describe();
    }
    return "";
  }

 private:
  struct Node {
    Kind kind;
    Index dimension;
    Index sparsity = 0;
    double eps = 0.0;
    Matrix shape;
    Matrix basis;
    Vector eigenvalues;
    Matrix eigenvectors;
    std::vector<Vector> vertices;
    std::shared_ptr<const Node> left;
    std::shared_ptr<const Node> right;
  };

  explicit LossSpaceSpec(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}
  explicit LossSpaceSpec(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static void check_dim(Index n) {
    if (n < 1) throw InvalidArgument("loss space: dimension must be at least 1");
  }
  static void check_eps(double eps, const char* what) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument(std::string(what) + ": eps must be positive");
  }
  static std::string format_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
  }

  std::shared_ptr<const Node> node_;
};

/// A sampled loss; for additive spaces the two summands are kept.
struct LossDraw {
  Vector loss;
  std::optional<Vector> left_part;
  std::optional<Vector> right_part;
};

namespace detail {

// Nonnegative random direction scaled to quadratic size r^2 under `shape`
// (identity when empty), shrunk further if an entry would exceed 1.
inline Vector sample_quadratic_ball(Rng& rng, Index n, double eps, const Matrix* shape) {
  Vector dir = normal_vector(rng, n).cwiseAbs();
  const double q = shape ? dir.dot(*shape * dir) : dir.squaredNorm();
  if (!(q > 0.0)) return Vector::Zero(n);
  const double radius = std::sqrt(eps) * std::pow(uniform01(rng), 1.0 / static_cast<double>(n));
  Vector l = dir * (radius / std::sqrt(q));
  const double top = l.maxCoeff();
  if (top > 1.0) l /= top;
  return l;
}

}  // namespace detail

inline LossDraw sample_draw(const LossSpaceSpec& space, Rng& rng) {
  const Index n = space.dimension();
  LossDraw out;
  switch (space.kind()) {
    case LossSpaceSpec::Kind::kStandard: {
      out.loss.resize(n);
      for (Index i = 0; i < n; ++i) out.loss[i] = uniform01(rng);
      return out;
    }
    case LossSpaceSpec::Kind::kSparse: {
      out.loss = Vector::Zero(n);
      for (Index i : sample_without_replacement(rng, n, space.sparsity())) out.loss[i] = uniform01(rng);
      return out;
    }
    case LossSpaceSpec::Kind::kSpherical:
      out.loss = detail::sample_quadratic_ball(rng, n, space.eps(), &space.shape());
      return out;
    case LossSpaceSpec::Kind::kNoisy:
      out.loss = detail::sample_quadratic_ball(rng, n, space.eps(), nullptr);
      return out;
    case LossSpaceSpec::Kind::kLowRank: {
      // Random convex combination of d + 1 coefficient-polytope vertices.
      const auto& verts = space.coefficient_vertices();
      const Index d = space.rank();
      const auto pool = static_cast<Index>(verts.size());
      for (int attempt = 0; attempt < 100000; ++attempt) {
        const Vector w = dirichlet_flat(rng, d + 1);
        Vector v = Vector::Zero(d);
        for (Index j = 0; j <= d; ++j) {
          v += w[j] * verts[static_cast<std::size_t>(uniform_index(rng, static_cast<std::uint64_t>(pool)))];
        }
        const Vector l = space.basis() * v;
        if (l.minCoeff() >= -1e-12 && l.maxCoeff() <= 1.0 + 1e-12) {
          out.loss = l.cwiseMax(0.0).cwiseMin(1.0);
          return out;
        }
      }
      throw SolverError("low-rank sampler: rejection cap reached");
    }
    case LossSpaceSpec::Kind::kAdditive: {
      LossDraw a = sample_draw(space.left(), rng);
      LossDraw b = sample_draw(space.right(), rng);
      out.loss = a.loss + b.loss;
      out.left_part = std::move(a.loss);
      out.right_part = std::move(b.loss);
      return out;
    }
  }
  return out;
}

inline LossVector sample(const LossSpaceSpec& space, Rng& rng) { return sample_draw(space, rng).loss; }

/// T losses: each round repeats a per-sequence anchor draw with probability
/// `persistence`, otherwise draws afresh.
inline LossSequence sample_sequence(const LossSpaceSpec& space, Index horizon, Rng& rng, double persistence = 0.5) {
  if (horizon < 1) throw InvalidArgument("sample_sequence: T must be at least 1");
  if (!(persistence >= 0.0 && persistence <= 1.0)) {
    throw InvalidArgument("sample_sequence: persistence must lie in [0, 1]");
  }
  const Vector anchor = sample(space, rng);
  Matrix rows(horizon, space.dimension());
  for (Index t = 0; t < horizon; ++t) {
    if (uniform01(rng) < persistence) {
      rows.row(t) = anchor.transpose();
    } else {
      rows.row(t) = sample(space, rng).transpose();
    }
  }
  return LossSequence(std::move(rows));
}

enum class Membership { kNo, kYes, kIndeterminate };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::kNo:
      return "no";
    case Membership::kYes:
      return "yes";
    case Membership::kIndeterminate:
      return "indeterminate";
  }
  return "";
}

namespace detail {

inline bool in_box(const Vector& l, double tol) { return l.minCoeff() >= -tol && l.maxCoeff() <= 1.0 + tol; }

inline double span_residual(const Matrix& basis, const Vector& l) {
  const Vector v = basis.colPivHouseholderQr().solve(l);
  return (basis * v - l).norm();
}

// Euclidean projection onto {x : x'Ax <= eps} in the eigenbasis of A.
inline Vector project_ellipsoid(const Vector& eigenvalues, const Matrix& eigenvectors, double eps, const Vector& y) {
  const Vector z = eigenvectors.transpose() * y;
  auto excess = [&](double mu) {
    double acc = 0.0;
    for (Index i = 0; i < z.size(); ++i) {
      const double w = z[i] / (1.0 + mu * eigenvalues[i]);
      acc += eigenvalues[i] * w * w;
    }
    return acc - eps;
  };
  if (excess(0.0) <= 0.0) return y;
  double lo = 0.0;
  double hi = 1.0;
  while (excess(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  Vector w(z.size());
  for (Index i = 0; i < z.size(); ++i) w[i] = z[i] / (1.0 + hi * eigenvalues[i]);
  return eigenvectors * w;
}

// Projection onto the closure of a non-additive family (for sparse spaces,
// onto the nonconvex set of s-sparse vectors in the box).
inline Vector project_family(const LossSpaceSpec& space, const Vector& y) {
  switch (space.kind()) {
    case LossSpaceSpec::Kind::kStandard:
      return y.cwiseMax(0.0).cwiseMin(1.0);
    case LossSpaceSpec::Kind::kSparse: {
      const Vector clipped = y.cwiseMax(0.0).cwiseMin(1.0);
      std::vector<std::pair<double, Index>> gain;
      gain.reserve(static_cast<std::size_t>(y.size()));
      for (Index i = 0; i < y.size(); ++i) {
        gain.emplace_back(y[i] * y[i] - (y[i] - clipped[i]) * (y[i] - clipped[i]), i);
      }
      std::stable_sort(gain.begin(), gain.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      Vector out = Vector::Zero(y.size());
      for (Index k = 0; k < space.sparsity(); ++k) {
        const Index i = gain[static_cast<std::size_t>(k)].second;
        out[i] = clipped[i];
      }
      return out;
    }
    case LossSpaceSpec::Kind::kSpherical:
      return project_ellipsoid(space.eigenvalues(), space.eigenvectors(), space.eps(), y);
    case LossSpaceSpec::Kind::kNoisy: {
      const double r = y.norm();
      const double cap = std::sqrt(space.eps());
      return r > cap ? Vector(y * (cap / r)) : y;
    }
    case LossSpaceSpec::Kind::kLowRank: {
      const Matrix& u = space.basis();
      return u * u.colPivHouseholderQr().solve(y);
    }
    case LossSpaceSpec::Kind::kAdditive:
      break;
  }
  throw InvalidArgument("project_family: additive spaces have no direct projection");
}

inline bool is_convex_family(const LossSpaceSpec& space) {
  return space.kind() != LossSpaceSpec::Kind::kSparse && space.kind() != LossSpaceSpec::Kind::kAdditive;
}

}  // namespace detail

inline constexpr int kAdditiveProjectionCap = 10000;

/// Membership with tolerance `tol`. Additive spaces are decided by
/// alternating projections between the left family and l minus the right
/// family: "yes" with a verified decomposition, "no" when both families are
/// convex and the iteration stalls at a positive distance, "indeterminate"
/// otherwise.
inline Membership member(const LossSpaceSpec& space, const Vector& l, double tol) {
  if (l.size() != space.dimension()) throw InvalidArgument("member: dimension mismatch");
  if (!l.allFinite()) return Membership::kNo;
  auto verdict = [](bool ok) { return ok ? Membership::kYes : Membership::kNo; };
  switch (space.kind()) {
    case LossSpaceSpec::Kind::kStandard:
      return verdict(detail::in_box(l, tol));
    case LossSpaceSpec::Kind::kSparse: {
      Index support = 0;
      for (Index i = 0; i < l.size(); ++i) support += std::abs(l[i]) > tol ? 1 : 0;
      return verdict(support <= space.sparsity() && detail::in_box(l, tol));
    }
    case LossSpaceSpec::Kind::kSpherical:
      return verdict(l.dot(space.shape() * l) <= space.eps() + tol);
    case LossSpaceSpec::Kind::kNoisy:
      return verdict(l.squaredNorm() <= space.eps() + tol);
    case LossSpaceSpec::Kind::kLowRank:
      return verdict(detail::span_residual(space.basis(), l) <= tol);
    case LossSpaceSpec::Kind::kAdditive:
      break;
  }
  const LossSpaceSpec a = space.left();
  const LossSpaceSpec b = space.right();
  if (a.kind() == LossSpaceSpec::Kind::kAdditive || b.kind() == LossSpaceSpec::Kind::kAdditive) {
    return Membership::kIndeterminate;
  }
  const bool convex = detail::is_convex_family(a) && detail::is_convex_family(b);
  Vector x = detail::project_family(a, Vector::Zero(l.size()));
  double last_gap = std::numeric_limits<double>::infinity();
  for (int it = 0; it < kAdditiveProjectionCap; ++it) {
    const Vector y = l - detail::project_family(b, l - x);
    const Vector x_next = detail::project_family(a, y);
    const double gap = (x_next - y).norm();
    x = x_next;
    if (gap <= tol) {
      const Vector rest = l - x;
      if (member(a, x, tol) == Membership::kYes && member(b, rest, tol) == Membership::kYes) return Membership::kYes;
    }
    if (convex && std::abs(last_gap - gap) <= 1e-15 * (1.0 + gap) && gap > tol) return Membership::kNo;
    last_gap = gap;
  }
  return Membership::kIndeterminate;
}

/// Regret bound and the regularizer it is proven for.
struct BoundRecipe {
  double upper = 0.0;
  Regularizer regularizer;
  /// Printable form of the bound.
  std::string formula;
};

namespace detail {

inline std::optional<BoundRecipe> catalog_pair(const LossSpaceSpec& a, const LossSpaceSpec& b, Regularizer reg,
                                               double t) {
  using K = LossSpaceSpec::Kind;
  if (a.kind() == K::kLowRank && b.kind() == K::kNoisy) {
    const double d = static_cast<double>(a.rank());
    return BoundRecipe{std::sqrt(2.0 * (16.0 * d + b.eps()) * t), std::move(reg), "sqrt(2(16d+eps)T)"};
  }
  if (a.kind() == K::kSparse && b.kind() == K::kNoisy) {
    const double ls = std::log(static_cast<double>(a.sparsity()) + 1.0);
    return BoundRecipe{2.0 * std::sqrt(2.0 * (1.0 + b.eps()) * ls * t), std::move(reg), "2sqrt(2(1+eps)ln(s+1)T)"};
  }
  if (a.kind() == K::kLowRank && b.kind() == K::kSparse) {
    const double d = static_cast<double>(a.rank());
    const double ls = std::log(static_cast<double>(b.sparsity()) + 1.0);
    return BoundRecipe{2.0 * std::sqrt(2.0 * (16.0 * d + 1.0) * ls * t), std::move(reg), "2sqrt(2(16d+1)ln(s+1)T)"};
  }
  return std::nullopt;
}

}  // namespace detail

/// D G sqrt(2T / alpha) from a certificate.
inline double generic_bound(const Certificate& cert, Index horizon) {
  return std::sqrt(cert.D_squared) * cert.G * std::sqrt(2.0 * static_cast<double>(horizon) / cert.alpha);
}

/// Matched regularizer for the space, without the bound.
Regularizer matched_regularizer(const LossSpaceSpec& space);

/// Closed-form regret bound at horizon T with its matched regularizer.
inline BoundRecipe theoretical_bound(const LossSpaceSpec& space, Index horizon) {
  if (horizon < 1) throw InvalidArgument("theoretical_bound: T must be at least 1");
  const double t = static_cast<double>(horizon);
  const Index n = space.dimension();
  using K = LossSpaceSpec::Kind;
  switch (space.kind()) {
    case K::kStandard:
      return {std::sqrt(2.0 * t * std::log(static_cast<double>(n))), Regularizer::neg_entropy(n), "sqrt(2T ln N)"};
    case K::kSparse: {
      const double ls = std::log(static_cast<double>(space.sparsity()) + 1.0);
      return {2.0 * std::sqrt(ls * t), make_qnorm_for_sparsity(space.sparsity(), n), "2sqrt(ln(s+1)T)"};
    }
    case K::kSpherical: {
      const double lmax = 1.0 / space.eigenvalues().minCoeff();
      return {std::sqrt(lmax * space.eps() * t), Regularizer::ellipsoidal_quadratic(space.shape_inverse(), space.eps()),
              "sqrt(lambda_max(A^-1) eps T)"};
    }
    case K::kNoisy:
      return {std::sqrt(space.eps() * t), Regularizer::scaled_euclidean(n, space.eps()), "sqrt(eps T)"};
    case K::kLowRank:
      return {4.0 * std::sqrt(static_cast<double>(space.rank()) * t),
              Regularizer::low_rank_quadratic(space.shape(), space.rank()), "4sqrt(dT)"};
    case K::kAdditive:
      break;
  }
  const LossSpaceSpec a = space.left();
  const LossSpaceSpec b = space.right();
  const Regularizer ra = theoretical_bound(a, horizon).regularizer;
  const Regularizer rb = theoretical_bound(b, horizon).regularizer;
  Regularizer reg = compose(ra, rb);
  if (auto hit = detail::catalog_pair(a, b, reg, t)) return *hit;
  if (auto hit = detail::catalog_pair(b, a, reg, t)) return *hit;
  return {generic_bound(reg.certificate(), horizon), reg, "D G sqrt(2T/alpha)"};
}

inline Regularizer matched_regularizer(const LossSpaceSpec& space) { return theoretical_bound(space, 1).regularizer; }

// ---------------------------------------------------------------------------
// Lower-bound adversary.

struct AdversaryState {
  Index V = 0;
  double s = 0.0;
  Index N = 0;
  Index T = 0;
  /// N x V; rows 0..2^V-1 enumerate {+1,-1}^V, the rest are zero.
  Matrix U;
  Index block_length = 0;
  Index current_round = 0;
  std::uint64_t seed = 0;
  Rng rng;
};

inline AdversaryState adversary_new(Index v, double s, Index n, Index horizon, std::uint64_t seed) {
  if (v < 1 || v > 30) throw InvalidArgument("adversary: V must lie in [1, 30]");
  if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("adversary: s must be nonnegative");
  const Index cube = Index{1} << v;
  if (cube > n) throw InvalidArgument("adversary: need 2^V <= N");
  if (horizon < v) throw InvalidArgument("adversary: need T >= V");
  AdversaryState st;
  st.V = v;
  st.s = s;
  st.N = n;
  st.T = horizon;
  st.U = Matrix::Zero(n, v);
  for (Index r = 0; r < cube; ++r) {
    for (Index j = 0; j < v; ++j) st.U(r, j) = ((r >> j) & 1) ? -1.0 : 1.0;
  }
  st.block_length = horizon / v;
  st.seed = seed;
  st.rng = Rng(seed);
  return st;
}

/// Loss of the next round: in block i the loss is (s - 2y) U e_i with
/// y uniform on {0, s}; rounds past V * k are zero.
inline LossVector adversary_next_loss(AdversaryState& st) {
  if (st.current_round >= st.T) throw InvalidArgument("adversary: called past the horizon");
  const Index t = st.current_round++;
  const Index block = t / st.block_length;
  if (block >= st.V) return Vector::Zero(st.N);
  const double y = (st.rng() >> 63) ? st.s : 0.0;
  return (st.s - 2.0 * y) * st.U.col(block);
}

/// 2 s sqrt(V T / 8).
inline double lower_bound_value(Index v, double s, Index horizon) {
  return 2.0 * s * std::sqrt(static_cast<double>(v) * static_cast<double>(horizon) / 8.0);
}

/// E|r - k/2| for r ~ Binomial(k, 1/2), by exact summation.
inline double expected_block_deviation(Index k) {
  if (k < 1) throw InvalidArgument("expected_block_deviation: k must be at least 1");
  const double kd = static_cast<double>(k);
  double acc = 0.0;
  if (k <= 1000) {
    double pmf = std::ldexp(1.0, -static_cast<int>(k));
    for (Index r = 0; r <= k; ++r) {
      acc += pmf * std::abs(static_cast<double>(r) - 0.5 * kd);
      pmf *= static_cast<double>(k - r) / static_cast<double>(r + 1);
    }
    return acc;
  }
  const double base = std::lgamma(kd + 1.0) - kd * std::numbers::ln2;
  for (Index r = 0; r <= k; ++r) {
    const double rd = static_cast<double>(r);
    const double logp = base - std::lgamma(rd + 1.0) - std::lgamma(kd - rd + 1.0);
    acc += std::exp(logp) * std::abs(rd - 0.5 * kd);
  }
  return acc;
}

}  // namespace somd
