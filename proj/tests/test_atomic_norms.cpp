#include "oracles.hpp"
#include "somd/atomic_norms.hpp"
#include "somd/random.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace somd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Matrix random_spd(Rng& rng, Index n, double spread) {
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = standard_normal(rng);
  }
  return g * g.transpose() / static_cast<double>(n) + spread * Matrix::Identity(n, n);
}

AtomicSet random_leaf(Rng& rng, Index n) {
  switch (uniform_index(rng, 4)) {
    case 0: {
      const double ps[] = {1.0, 1.5, 2.0, 3.0, kInf};
      return AtomicSet::scaled_pnorm_ball(n, ps[uniform_index(rng, 5)], uniform(rng, 0.3, 2.0));
    }
    case 1:
      return AtomicSet::ellipsoid(random_spd(rng, n, 0.2));
    case 2:
      return AtomicSet::ellipsoid_from_dual(random_spd(rng, n, 0.2));
    default:
      return AtomicSet::scaled_pnorm_ball(n, uniform(rng, 1.0, 4.0), uniform(rng, 0.5, 1.5));
  }
}

Vector point_with_gauge_at_most_one(Rng& rng, const AtomicSet& set) {
  const Vector z = normal_vector(rng, set.dimension());
  return z * (uniform01(rng) / norm(set, z));
}

}  // namespace

TEST(Norm, WorkedExamples) {
  EXPECT_NEAR(norm(AtomicSet::scaled_pnorm_ball(2, 1.0, 1.0), vec({0.3, -0.7})), 1.0, 1e-15);
  EXPECT_NEAR(norm(AtomicSet::ellipsoid(Matrix::Identity(2, 2)), vec({3.0, 4.0})), 5.0, 1e-15);
  EXPECT_NEAR(norm(AtomicSet::scaled_pnorm_ball(2, 2.0, 0.5), vec({3.0, 4.0})), 10.0, 1e-14);
  EXPECT_NEAR(norm(AtomicSet::ellipsoid(Matrix{{4.0, 0.0}, {0.0, 1.0}}), vec({1.0, 0.0})), 2.0, 1e-15);
  EXPECT_NEAR(norm(AtomicSet::ellipsoid_from_dual(Matrix{{4.0, 0.0}, {0.0, 1.0}}), vec({1.0, 0.0})), 0.5, 1e-15);
}

TEST(Norm, OriginHasZeroGaugeForEveryVariant) {
  const Vector zero = Vector::Zero(3);
  const AtomicSet l2 = AtomicSet::scaled_pnorm_ball(3, 2.0, 1.0);
  const AtomicSet l1 = AtomicSet::scaled_pnorm_ball(3, 1.0, 2.0);
  const AtomicSet e = AtomicSet::ellipsoid(Matrix::Identity(3, 3) * 3.0);
  const AtomicSet sum = AtomicSet::minkowski_sum(l1, e);
  for (const auto* s : {&l2, &l1, &e, &sum}) {
    EXPECT_EQ(norm(*s, zero), 0.0);
    EXPECT_EQ(dual_norm(*s, zero), 0.0);
  }
  EXPECT_EQ(minkowski_norm(l1, l2, zero, 1e-9), 0.0);
}

TEST(DualNorm, WorkedExamples) {
  EXPECT_NEAR(dual_norm(AtomicSet::scaled_pnorm_ball(2, 2.0, 1.0), vec({3.0, 4.0})), 5.0, 1e-15);
  EXPECT_NEAR(dual_norm(AtomicSet::scaled_pnorm_ball(2, 1.0, 1.0), vec({3.0, -4.0})), 4.0, 1e-15);
  EXPECT_NEAR(dual_norm(AtomicSet::scaled_pnorm_ball(2, kInf, 1.0), vec({3.0, -4.0})), 7.0, 1e-15);
  const AtomicSet ball = AtomicSet::scaled_pnorm_ball(2, 2.0, 1.0);
  EXPECT_NEAR(dual_norm(AtomicSet::minkowski_sum(ball, ball), vec({1.0, 0.0})), 2.0, 1e-15);
  EXPECT_NEAR(dual_norm(AtomicSet::ellipsoid(Matrix{{4.0, 0.0}, {0.0, 1.0}}), vec({1.0, 0.0})), 0.5, 1e-15);
}

TEST(AtomicSet, RejectsInvalidParameters) {
  EXPECT_THROW(AtomicSet::scaled_pnorm_ball(3, 0.5, 1.0), InvalidArgument);
  EXPECT_THROW(AtomicSet::scaled_pnorm_ball(3, 2.0, 0.0), InvalidArgument);
  EXPECT_THROW(AtomicSet::ellipsoid(Matrix{{1.0, 0.0}, {0.0, -1.0}}), InvalidArgument);
  EXPECT_THROW(AtomicSet::ellipsoid(Matrix{{1.0, 0.5}, {0.0, 1.0}}), InvalidArgument);
  EXPECT_THROW(AtomicSet::minkowski_sum(AtomicSet::scaled_pnorm_ball(2, 2.0, 1.0),
                                        AtomicSet::scaled_pnorm_ball(3, 2.0, 1.0)),
               InvalidArgument);
  EXPECT_THROW(norm(AtomicSet::scaled_pnorm_ball(2, 2.0, 1.0), Vector::Zero(3)), InvalidArgument);
  EXPECT_THROW(dual_norm(AtomicSet::scaled_pnorm_ball(2, 2.0, 1.0), Vector::Zero(3)), InvalidArgument);
}

TEST(MinkowskiNorm, EqualBallsSplitEvenly) {
  const AtomicSet ball = AtomicSet::scaled_pnorm_ball(2, 2.0, 1.0);
  EXPECT_NEAR(minkowski_norm(ball, ball, vec({2.0, 0.0}), 1e-10), 1.0, 1e-9);
}

TEST(MinkowskiNorm, BracketContainsValue) {
  const AtomicSet l1 = AtomicSet::scaled_pnorm_ball(3, 1.0, 1.0);
  const AtomicSet l2 = AtomicSet::scaled_pnorm_ball(3, 2.0, 1.0);
  const auto b = minkowski_norm_bracket(l1, l2, vec({0.4, -1.2, 0.7}), 1e-8);
  EXPECT_LE(b.lower, b.upper);
  EXPECT_LE(b.upper - b.lower, 1e-7);
}

TEST(MinkowskiNorm, MatchesLatticeSearchForL1PlusL2) {
  Rng rng(21);
  const AtomicSet l1 = AtomicSet::scaled_pnorm_ball(3, 1.0, 1.0);
  const AtomicSet l2 = AtomicSet::scaled_pnorm_ball(3, 2.0, 1.0);
  for (int rep = 0; rep < 25; ++rep) {
    const Vector x = normal_vector(rng, 3) * uniform(rng, 0.2, 3.0);
    const double expected = oracle::l1_plus_l2_gauge_lattice(x);
    EXPECT_NEAR(minkowski_norm(l1, l2, x, 1e-9), expected, 1e-3) << "x = " << x.transpose();
  }
}

TEST(MinkowskiNorm, TwoEllipsoidsAgreeWithSumOfGaugesBound) {
  Rng rng(22);
  for (int rep = 0; rep < 50; ++rep) {
    const AtomicSet a = AtomicSet::ellipsoid(random_spd(rng, 4, 0.3));
    const AtomicSet b = AtomicSet::ellipsoid_from_dual(random_spd(rng, 4, 0.3));
    const Vector x = normal_vector(rng, 4);
    const double m = minkowski_norm(a, b, x, 1e-9);
    // Splitting x entirely into one summand bounds the gauge from above.
    EXPECT_LE(m, std::min(norm(a, x), norm(b, x)) + 1e-9);
    // Support-function duality bounds it from below.
    const AtomicSet sum = AtomicSet::minkowski_sum(a, b);
    for (int k = 0; k < 20; ++k) {
      const Vector z = normal_vector(rng, 4);
      EXPECT_GE(m + 1e-9, x.dot(z) / dual_norm(sum, z));
    }
  }
}

TEST(MinkowskiGauge, SumOfUnitGaugePointsHasGaugeAtMostTheMax) {
  Rng rng(23);
  for (Index n : {3, 8}) {
    for (int rep = 0; rep < 300; ++rep) {
      const AtomicSet a = random_leaf(rng, n);
      const AtomicSet b = random_leaf(rng, n);
      const Vector x1 = point_with_gauge_at_most_one(rng, a);
      const Vector x2 = point_with_gauge_at_most_one(rng, b);
      const double tol = 1e-8;
      EXPECT_LE(minkowski_norm(a, b, x1 + x2, tol), std::max(norm(a, x1), norm(b, x2)) + tol);
    }
  }
}

TEST(MinkowskiSupport, DualOfSumIsAtMostSumOfDuals) {
  Rng rng(24);
  for (Index n : {3, 8}) {
    for (int rep = 0; rep < 2000; ++rep) {
      const AtomicSet a = random_leaf(rng, n);
      const AtomicSet b = random_leaf(rng, n);
      const Vector x = normal_vector(rng, n);
      EXPECT_LE(dual_norm(AtomicSet::minkowski_sum(a, b), x), dual_norm(a, x) + dual_norm(b, x) + 1e-12);
    }
  }
}

TEST(Duality, InnerProductBoundedBySupportFunction) {
  Rng rng(25);
  for (Index n : {2, 3, 8}) {
    for (int rep = 0; rep < 2000; ++rep) {
      const AtomicSet a = random_leaf(rng, n);
      const Vector x = normal_vector(rng, n);
      const Vector z = point_with_gauge_at_most_one(rng, a);
      EXPECT_LE(x.dot(z), dual_norm(a, x) + 1e-10);
    }
  }
}

TEST(Duality, SupportPointAttainsSupportFunction) {
  Rng rng(26);
  for (int rep = 0; rep < 500; ++rep) {
    const AtomicSet a = random_leaf(rng, 5);
    const Vector x = normal_vector(rng, 5);
    const Vector z = support_point(a, x);
    EXPECT_NEAR(norm(a, z), 1.0, 1e-9);
    EXPECT_NEAR(x.dot(z), dual_norm(a, x), 1e-9 * (1.0 + dual_norm(a, x)));
  }
}

TEST(Homogeneity, GaugeScalesWithAbsoluteFactor) {
  Rng rng(27);
  for (int rep = 0; rep < 500; ++rep) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 6));
    const AtomicSet a = random_leaf(rng, n);
    const Vector x = normal_vector(rng, n);
    const double c = uniform(rng, -5.0, 5.0);
    EXPECT_NEAR(norm(a, c * x), std::abs(c) * norm(a, x), 1e-9 * std::abs(c) * norm(a, x) + 1e-300);
  }
  const AtomicSet l1 = AtomicSet::scaled_pnorm_ball(3, 1.0, 1.0);
  const AtomicSet l2 = AtomicSet::scaled_pnorm_ball(3, 2.0, 1.0);
  const AtomicSet sum = AtomicSet::minkowski_sum(l1, l2);
  for (int rep = 0; rep < 30; ++rep) {
    const Vector x = normal_vector(rng, 3);
    const double c = uniform(rng, 0.1, 5.0);
    EXPECT_NEAR(norm(sum, c * x), c * norm(sum, x), 1e-7 * c * norm(sum, x));
  }
}

TEST(Radii, BracketTheUnitSphereOfTheGauge) {
  Rng rng(28);
  for (int rep = 0; rep < 200; ++rep) {
    const AtomicSet a = random_leaf(rng, 4);
    const Vector u = normal_vector(rng, 4).normalized();
    // ||u||_A in [1/circumradius, 1/inradius] for Euclidean unit u.
    const double g = norm(a, u);
    EXPECT_GE(g, 1.0 / a.circumradius() - 1e-12);
    EXPECT_LE(g, 1.0 / a.inradius() + 1e-12);
  }
}

TEST(HolderConjugate, LimitCases) {
  EXPECT_EQ(holder_conjugate(1.0), kInf);
  EXPECT_EQ(holder_conjugate(kInf), 1.0);
  EXPECT_DOUBLE_EQ(holder_conjugate(2.0), 2.0);
  EXPECT_DOUBLE_EQ(holder_conjugate(3.0), 1.5);
  EXPECT_NEAR(pnorm(vec({3.0, -4.0}), kInf), 4.0, 0.0);
  EXPECT_NEAR(pnorm(vec({1e200, 1e200}), 2.0), std::sqrt(2.0) * 1e200, 1e186);
}
