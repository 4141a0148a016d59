#pragma once

// Regularizers over the simplex together with their certificates
// (diameter bound, strong-convexity modulus, paired norm, loss bound).

#include "somd/atomic_norms.hpp"
#include "somd/core.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <string>

namespace somd {

/// Certified constants for one regularizer. `loss_ball` is the atomic set the
/// losses live in (G = 1 means every loss has gauge at most 1); its support
/// function is the norm in which the regularizer is alpha-strongly convex.
struct Certificate {
  double D_squared = 0.0;
  double alpha = 1.0;
  double G = 1.0;
  AtomicSet loss_ball;
  /// False when the construction lies outside the range the constants are
  /// proven for (squared q-norm with q > 2).
  bool in_proven_range = true;

  double dual_norm(const Vector& x) const { return somd::dual_norm(loss_ball, x); }
};

class Regularizer {
 public:
  enum class Kind {
    kNegEntropy,
    kSquaredQNorm,
    kScaledEuclidean,
    kEllipsoidalQuadratic,
    kLowRankQuadratic,
    kComposite,
  };

  /// sum_i x_i ln x_i - sum_i x_i (unnormalized negative entropy).
  static Regularizer neg_entropy(Index n) {
    check_dim(n);
    Node node{Kind::kNegEntropy, n};
    node.cert = Certificate{std::log(static_cast<double>(n)), 1.0, 1.0,
                            AtomicSet::scaled_pnorm_ball(n, kInf, 1.0), true};
    return Regularizer(std::move(node));
  }

  /// ||x||_q^2 with q in (1, 2].
  static Regularizer squared_qnorm(Index n, double q) {
    if (!(q > 1.0 && q <= 2.0)) {
      throw InvalidArgument("squared_qnorm: q must lie in (1, 2], got " + std::to_string(q));
    }
    return squared_qnorm_unchecked(n, q);
  }

  /// eps * ||x||_2^2.
  static Regularizer scaled_euclidean(Index n, double eps) {
    check_dim(n);
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("scaled_euclidean: eps must be positive");
    Node node{Kind::kScaledEuclidean, n};
    node.scale = eps;
    node.quadratic = Matrix::Identity(n, n) * eps;
    node.isotropic = true;
    node.cert = Certificate{eps, 2.0, 1.0, AtomicSet::scaled_pnorm_ball(n, 2.0, std::sqrt(eps)), true};
    return Regularizer(std::move(node));
  }

  /// scale * x'Qx for SPD Q.
  static Regularizer ellipsoidal_quadratic(Matrix q, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw InvalidArgument("ellipsoidal_quadratic: scale must be positive");
    }
    const Index n = q.rows();
    check_dim(n);
    AtomicSet ball = AtomicSet::ellipsoid_from_dual(q * scale);
    const double lambda_max = ball.ellipsoid_body().lambda_max / scale;
    Node node{Kind::kEllipsoidalQuadratic, n};
    node.scale = scale;
    node.quadratic = ball.ellipsoid_body().shape;
    node.cert = Certificate{scale * lambda_max, 2.0, 1.0, std::move(ball), true};
    return Regularizer(std::move(node));
  }

  /// x'Hx for the low-rank geometry matrix H built from a rank-d subspace.
  static Regularizer low_rank_quadratic(Matrix h, Index rank) {
    const Index n = h.rows();
    check_dim(n);
    if (rank < 1 || rank > n) throw InvalidArgument("low_rank_quadratic: rank must lie in [1, N]");
    AtomicSet ball = AtomicSet::ellipsoid_from_dual(std::move(h));
    Node node{Kind::kLowRankQuadratic, n};
    node.rank = rank;
    node.quadratic = ball.ellipsoid_body().shape;
    node.cert = Certificate{16.0 * static_cast<double>(rank), 2.0, 1.0, std::move(ball), true};
    return Regularizer(std::move(node));
  }

  /// left + right. The certificate adds diameters, halves the smaller
  /// modulus and pairs with the Minkowski sum of the children's loss balls.
  static Regularizer composite(const Regularizer& left, const Regularizer& right) {
    if (left.dimension() != right.dimension()) {
      throw InvalidArgument("compose: dimension mismatch (" + std::to_string(left.dimension()) + " vs " +
                            std::to_string(right.dimension()) + ")");
    }
    const Certificate& a = left.certificate();
    const Certificate& b = right.certificate();
    Node node{Kind::kComposite, left.dimension()};
    node.left = left.node_;
    node.right = right.node_;
    if (left.node_->quadratic && right.node_->quadratic) {
      node.quadratic = *left.node_->quadratic + *right.node_->quadratic;
      node.isotropic = left.node_->isotropic && right.node_->isotropic;
    }
    node.cert = Certificate{a.D_squared + b.D_squared, 0.5 * std::min(a.alpha, b.alpha), 1.0,
                            AtomicSet::minkowski_sum(a.loss_ball, b.loss_ball),
                            a.in_proven_range && b.in_proven_range};
    return Regularizer(std::move(node));
  }

  Kind kind() const { return node_->kind; }
  Index dimension() const { return node_->dimension; }
  const Certificate& certificate() const { return *node_->cert; }

  /// Exponent of a squared q-norm node.
  double q() const { return node_->q; }
  Index rank() const { return node_->rank; }
  double scale() const { return node_->scale; }
  Regularizer left() const { return Regularizer(node_->left); }
  Regularizer right() const { return Regularizer(node_->right); }

  /// Matrix Q with R(x) = x'Qx when the regularizer is a pure quadratic.
  const std::optional<Matrix>& quadratic_matrix() const { return node_->quadratic; }
  /// True when the regularizer is c * ||x||_2^2.
  bool is_isotropic() const { return node_->isotropic; }
  /// True when some term is only differentiable on the open orthant.
  bool requires_interior() const {
    if (node_->kind == Kind::kNegEntropy) return true;
    if (node_->kind == Kind::kComposite) return left().requires_interior() || right().requires_interior();
    return false;
  }

  std::string describe() const {
    switch (node_->kind) {
      case Kind::kNegEntropy:
        return "neg_entropy";
      case Kind::kSquaredQNorm:
        return "squared_qnorm(q=" + std::to_string(node_->q) + ")";
      case Kind::kScaledEuclidean:
        return "scaled_euclidean(eps=" + std::to_string(node_->scale) + ")";
      case Kind::kEllipsoidalQuadratic:
        return "ellipsoidal_quadratic(scale=" + std::to_string(node_->scale) + ")";
      case Kind::kLowRankQuadratic:
        return "low_rank_quadratic(d=" + std::to_string(node_->rank) + ")";
      case Kind::kComposite:
        return left().describe() + " + " + right().describe();
    }
    return "";
  }

  double value(const Vector& x) const {
    check_arg(x, "value");
    return value_impl(*node_, x);
  }

  Vector gradient(const Vector& x) const {
    check_arg(x, "gradient");
    return gradient_impl(*node_, x);
  }

  /// Hessian; coordinates of the q-norm term below `floor` are treated as
  /// `floor` so the matrix stays bounded near the boundary.
  Matrix hessian(const Vector& x, double floor = 0.0) const {
    check_arg(x, "hessian");
    return hessian_impl(*node_, x, floor);
  }

  /// B_R(x, y) = R(x) - R(y) - grad R(y).(x - y).
  double bregman(const Vector& x, const Vector& y) const { return value(x) - value(y) - gradient(y).dot(x - y); }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  struct Node {
    Kind kind;
    Index dimension;
    std::optional<Certificate> cert;
    double q = 0.0;
    double scale = 1.0;
    Index rank = 0;
    std::optional<Matrix> quadratic;
    bool isotropic = false;
    std::shared_ptr<const Node> left;
    std::shared_ptr<const Node> right;
  };

  friend Regularizer make_qnorm_for_sparsity(Index s, Index n);

  explicit Regularizer(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}
  explicit Regularizer(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static void check_dim(Index n) {
    if (n < 1) throw InvalidArgument("regularizer: dimension must be at least 1");
  }

  void check_arg(const Vector& x, const char* what) const {
    if (x.size() != dimension()) {
      throw InvalidArgument(std::string(what) + ": dimension mismatch (regularizer " +
                            std::to_string(dimension()) + ", point " + std::to_string(x.size()) + ")");
    }
    if (!x.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite point");
  }

  static Regularizer squared_qnorm_unchecked(Index n, double q) {
    check_dim(n);
    if (!(q > 1.0) || !std::isfinite(q)) throw InvalidArgument("squared_qnorm: q must exceed 1");
    Node node{Kind::kSquaredQNorm, n};
    node.q = q;
    node.cert = Certificate{1.0, q - 1.0, 1.0, AtomicSet::scaled_pnorm_ball(n, holder_conjugate(q), std::sqrt(2.0)),
                            q <= 2.0};
    return Regularizer(std::move(node));
  }

  static double value_impl(const Node& node, const Vector& x) {
    switch (node.kind) {
      case Kind::kNegEntropy: {
        double acc = 0.0;
        for (Index i = 0; i < x.size(); ++i) {
          if (x[i] < 0.0) throw InvalidArgument("neg_entropy: negative coordinate");
          if (x[i] > 0.0) acc += x[i] * std::log(x[i]);
          acc -= x[i];
        }
        return acc;
      }
      case Kind::kSquaredQNorm: {
        const double nq = pnorm(x, node.q);
        return nq * nq;
      }
      case Kind::kScaledEuclidean:
        return node.scale * x.squaredNorm();
      case Kind::kEllipsoidalQuadratic:
      case Kind::kLowRankQuadratic:
        return x.dot(*node.quadratic * x);
      case Kind::kComposite:
        return value_impl(*node.left, x) + value_impl(*node.right, x);
    }
    return 0.0;
  }

  static Vector gradient_impl(const Node& node, const Vector& x) {
    switch (node.kind) {
      case Kind::kNegEntropy: {
        if (x.minCoeff() <= 0.0) throw InvalidArgument("neg_entropy: gradient undefined at the boundary");
        return x.array().log().matrix();
      }
      case Kind::kSquaredQNorm: {
        // 2 ||x||_q^{2-q} |x_i|^{q-1} sign(x_i), extended by 0 where x_i = 0.
        const double nq = pnorm(x, node.q);
        Vector g = Vector::Zero(x.size());
        if (nq == 0.0) return g;
        for (Index i = 0; i < x.size(); ++i) {
          const double a = std::abs(x[i]) / nq;
          if (a > 0.0) g[i] = 2.0 * nq * std::pow(a, node.q - 1.0) * (x[i] > 0.0 ? 1.0 : -1.0);
        }
        return g;
      }
      case Kind::kScaledEuclidean:
        return 2.0 * node.scale * x;
      case Kind::kEllipsoidalQuadratic:
      case Kind::kLowRankQuadratic:
        return 2.0 * (*node.quadratic * x);
      case Kind::kComposite:
        return gradient_impl(*node.left, x) + gradient_impl(*node.right, x);
    }
    return Vector();
  }

  static Matrix hessian_impl(const Node& node, const Vector& x, double floor) {
    const Index n = x.size();
    switch (node.kind) {
      case Kind::kNegEntropy: {
        if (x.minCoeff() <= 0.0) throw InvalidArgument("neg_entropy: hessian undefined at the boundary");
        return x.cwiseInverse().asDiagonal();
      }
      case Kind::kSquaredQNorm: {
        const double q = node.q;
        Vector y = x.cwiseAbs().cwiseMax(floor);
        const double nq = pnorm(y, q);
        if (nq == 0.0) return Matrix::Identity(n, n) * 2.0;
        // R = S^{2/q}, S = sum |x_i|^q. Scale-free form in a_i = |x_i| / ||x||_q.
        Vector u(n);
        Vector d(n);
        for (Index i = 0; i < n; ++i) {
          const double a = y[i] / nq;
          const double sign = x[i] < 0.0 ? -1.0 : 1.0;
          u[i] = sign * std::pow(a, q - 1.0);
          d[i] = a > 0.0 ? 2.0 * (q - 1.0) * std::pow(a, q - 2.0) : 0.0;
        }
        Matrix h = 2.0 * (2.0 - q) * u * u.transpose();
        h.diagonal() += d;
        return h;
      }
      case Kind::kScaledEuclidean:
        return Matrix::Identity(n, n) * (2.0 * node.scale);
      case Kind::kEllipsoidalQuadratic:
      case Kind::kLowRankQuadratic:
        return 2.0 * *node.quadratic;
      case Kind::kComposite:
        return hessian_impl(*node.left, x, floor) + hessian_impl(*node.right, x, floor);
    }
    return Matrix();
  }

  std::shared_ptr<const Node> node_;
};

inline double value(const Regularizer& r, const Vector& x) { return r.value(x); }
inline double value(const Regularizer& r, const SimplexPoint& x) { return r.value(x.weights()); }
inline Vector gradient(const Regularizer& r, const Vector& x) { return r.gradient(x); }
inline const Certificate& certificate(const Regularizer& r) { return r.certificate(); }
inline Regularizer compose(const Regularizer& a, const Regularizer& b) { return Regularizer::composite(a, b); }

/// q = 2 ln(s+1) / (2 ln(s+1) - 1), the exponent matched to s-sparse losses.
inline double qnorm_exponent_for_sparsity(Index s) {
  if (s < 1) throw InvalidArgument("sparsity must be at least 1");
  const double p = 2.0 * std::log(static_cast<double>(s) + 1.0);
  return p / (p - 1.0);
}

/// Squared q-norm regularizer for s-sparse losses. For s = 1 the exponent
/// exceeds 2; it is still built, with certificate().in_proven_range == false.
inline Regularizer make_qnorm_for_sparsity(Index s, Index n) {
  if (s < 1 || s > n) {
    throw InvalidArgument("make_qnorm_for_sparsity: need 1 <= s <= N, got s = " + std::to_string(s));
  }
  return Regularizer::squared_qnorm_unchecked(n, qnorm_exponent_for_sparsity(s));
}

}  // namespace somd
