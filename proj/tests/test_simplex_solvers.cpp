#include "oracles.hpp"
#include "somd/random.hpp"
#include "somd/regularizers.hpp"
#include "somd/simplex_solvers.hpp"

#include <gtest/gtest.h>

using namespace somd;

namespace {

Matrix random_spd(Rng& rng, Index n, double floor) {
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = standard_normal(rng);
  }
  return g * g.transpose() / static_cast<double>(n) + floor * Matrix::Identity(n, n);
}

/// Largest violation of the simplex KKT conditions for gradient g at x:
/// g_i >= min_j g_j everywhere with equality on the support.
double kkt_violation(const Vector& g, const Vector& x) { return g.dot(x) - g.minCoeff(); }

}  // namespace

TEST(ProjectSimplex, MatchesLatticeSearch) {
  Rng rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    const Vector v = normal_vector(rng, 3);
    const Vector p = project_simplex(v);
    const Vector ref = oracle::simplex3_lattice_argmin([&](const Vector& y) { return (y - v).squaredNorm(); });
    EXPECT_LE((p - ref).cwiseAbs().maxCoeff(), 2e-4);
  }
}

TEST(ProjectSimplex, FixedPointsAndFeasibility) {
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 1 + static_cast<Index>(uniform_index(rng, 30));
    const Vector x = dirichlet_flat(rng, n);
    EXPECT_LE((project_simplex(x) - x).cwiseAbs().maxCoeff(), 1e-14);
    const Vector p = project_simplex(normal_vector(rng, n) * 3.0);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_NEAR(p.sum(), 1.0, 1e-14);
  }
}

TEST(EntropicMinimizer, IsSoftmaxOfNegativeCost) {
  Vector c(3);
  c << 0.0, std::log(2.0), 1000.0;
  const Vector p = entropic_minimizer(c);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(p[2], 0.0);
}

TEST(SimplexQp, MatchesLatticeSearchOnThreeExperts) {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix q = random_spd(rng, 3, 0.2);
    const Vector c = normal_vector(rng, 3);
    const Vector x = simplex_qp(q, c, Vector::Constant(3, 1.0 / 3.0));
    const Vector ref = oracle::simplex3_lattice_argmin([&](const Vector& y) { return y.dot(q * y) + c.dot(y); });
    EXPECT_LE((x - ref).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(SimplexQp, SatisfiesKktFromAnyStart) {
  Rng rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 40));
    const Matrix q = random_spd(rng, n, 0.01);
    const Vector c = normal_vector(rng, n) * uniform(rng, 0.1, 10.0);
    const Vector start = dirichlet_flat(rng, n);
    const Vector x = simplex_qp(q, c, start);
    EXPECT_GE(x.minCoeff(), 0.0);
    EXPECT_NEAR(x.sum(), 1.0, 1e-12);
    const Vector g = 2.0 * q * x + c;
    EXPECT_LE(kkt_violation(g, x), 1e-10 * (1.0 + g.cwiseAbs().maxCoeff()));
  }
}

TEST(SimplexQp, RejectsIndefiniteMatrix) {
  Matrix q = Matrix::Identity(3, 3);
  q(2, 2) = -1.0;
  EXPECT_THROW(simplex_qp(q, Vector::Zero(3), Vector::Constant(3, 1.0 / 3.0)), SolverError);
  EXPECT_THROW(simplex_qp(Matrix::Identity(2, 2), Vector::Zero(3), Vector::Zero(3)), InvalidArgument);
}

TEST(SquaredQNormMinimizer, MatchesLatticeSearch) {
  Rng rng(5);
  for (double q : {1.2, 1.5, 1.9, 2.0}) {
    for (int rep = 0; rep < 10; ++rep) {
      const Vector c = normal_vector(rng, 3);
      const Vector x = squared_qnorm_minimizer(q, c);
      const Vector ref = oracle::simplex3_lattice_argmin(
          [&](const Vector& y) { return oracle::squared_qnorm(y, q) + c.dot(y); });
      EXPECT_LE((x - ref).cwiseAbs().maxCoeff(), 1e-3) << "q = " << q;
    }
  }
}

TEST(SquaredQNormMinimizer, SatisfiesKkt) {
  Rng rng(6);
  for (int rep = 0; rep < 300; ++rep) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 60));
    const double q = uniform(rng, 1.05, 2.0);
    const Vector c = normal_vector(rng, n) * uniform(rng, 0.01, 5.0);
    const Vector x = squared_qnorm_minimizer(q, c);
    const Vector g = oracle::squared_qnorm_gradient(x, q) + c;
    EXPECT_LE(kkt_violation(g, x), 1e-9);
  }
}

TEST(SimplexNewton, SolvesCompositeProblems) {
  Rng rng(7);
  for (int rep = 0; rep < 60; ++rep) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 30));
    const Regularizer r = rep % 3 == 0   ? compose(Regularizer::squared_qnorm(n, 1.5), Regularizer::scaled_euclidean(n, 0.3))
                          : rep % 3 == 1 ? compose(Regularizer::neg_entropy(n), Regularizer::scaled_euclidean(n, 1.0))
                                         : compose(Regularizer::squared_qnorm(n, 1.3),
                                                   Regularizer::ellipsoidal_quadratic(random_spd(rng, n, 0.5), 0.5));
    const Vector c = normal_vector(rng, n);
    const Vector x = simplex_newton(r, c, Vector::Constant(n, 1.0 / static_cast<double>(n)));
    EXPECT_GE(x.minCoeff(), 0.0);
    EXPECT_NEAR(x.sum(), 1.0, 1e-12);
    EXPECT_LE(simplex_gap(r.gradient(x) + c, x), 1e-7) << r.describe();
  }
}

TEST(SimplexNewton, AgreesWithExactSolvers) {
  Rng rng(8);
  for (int rep = 0; rep < 40; ++rep) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 20));
    const Vector c = normal_vector(rng, n);
    const Vector start = Vector::Constant(n, 1.0 / static_cast<double>(n));
    const Regularizer q = Regularizer::squared_qnorm(n, 1.6);
    EXPECT_LE((simplex_newton(q, c, start) - squared_qnorm_minimizer(1.6, c)).cwiseAbs().maxCoeff(), 1e-5);
    const Regularizer e = Regularizer::ellipsoidal_quadratic(random_spd(rng, n, 0.3), 1.0);
    EXPECT_LE((simplex_newton(e, c, start) - simplex_qp(*e.quadratic_matrix(), c, start)).cwiseAbs().maxCoeff(), 1e-6);
    const Regularizer h = Regularizer::neg_entropy(n);
    EXPECT_LE((simplex_newton(h, c, start) - entropic_minimizer(c)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(MinimizeOnSimplex, DispatchAgreesWithGenericSolver) {
  Rng rng(9);
  const Index n = 7;
  const Vector start = Vector::Constant(n, 1.0 / n);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector c = normal_vector(rng, n);
    for (const Regularizer& r : {Regularizer::scaled_euclidean(n, 0.4), Regularizer::squared_qnorm(n, 1.7),
                                 compose(Regularizer::scaled_euclidean(n, 0.4), Regularizer::scaled_euclidean(n, 0.1))}) {
      EXPECT_LE((minimize_on_simplex(r, c, start) - simplex_newton(r, c, start)).cwiseAbs().maxCoeff(), 1e-5)
          << r.describe();
    }
  }
}
