#include "oracles.hpp"
#include "somd/core.hpp"
#include "somd/random.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace somd;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Matrix random_rows(Rng& rng, Index t, Index n) {
  Matrix m(t, n);
  for (Index i = 0; i < t; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = uniform01(rng);
  }
  return m;
}

std::vector<SimplexPoint> random_decisions(Rng& rng, Index t, Index n) {
  std::vector<SimplexPoint> out;
  for (Index i = 0; i < t; ++i) out.push_back(validate_simplex(dirichlet_flat(rng, n)));
  return out;
}

}  // namespace

TEST(ValidateSimplex, KeepsFeasibleInputBitForBit) {
  const Vector x = vec({0.5, 0.5});
  const SimplexPoint p = validate_simplex(x);
  EXPECT_EQ(p.weights(), x);
  const SimplexPoint v = validate_simplex(vec({1.0, 0.0, 0.0}));
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 0.0);
}

TEST(ValidateSimplex, RejectsSumOutsideTolerance) {
  EXPECT_THROW(validate_simplex(vec({0.3, 0.3, 0.3})), InvalidArgument);
}

TEST(ValidateSimplex, RejectsNegativeEntries) {
  EXPECT_THROW(validate_simplex(vec({1.1, -0.1})), InvalidArgument);
  EXPECT_THROW(validate_simplex(Vector()), InvalidArgument);
  EXPECT_THROW(validate_simplex(vec({std::nan(""), 1.0})), InvalidArgument);
}

TEST(ValidateSimplex, RepairsTinyViolations) {
  const SimplexPoint p = validate_simplex(vec({0.5 + 4e-7, 0.5, -5e-10}));
  EXPECT_GE(p.weights().minCoeff(), 0.0);
  EXPECT_NEAR(p.weights().sum(), 1.0, 1e-15);
}

TEST(BestExpert, HandExample) {
  const LossSequence seq(Matrix{{0.5, 0.2, 0.9}, {0.1, 0.8, 0.0}});
  const BestExpert b = best_expert(seq);
  EXPECT_EQ(b.index, 0);
  EXPECT_NEAR(b.loss, 0.6, 1e-15);
}

TEST(BestExpert, TiesGoToSmallestIndex) {
  const LossSequence seq(Matrix::Constant(7, 3, 0.25));
  const BestExpert b = best_expert(seq);
  EXPECT_EQ(b.index, 0);
  EXPECT_DOUBLE_EQ(b.loss, 7 * 0.25);
}

TEST(BestExpert, MatchesExhaustiveScan) {
  Rng rng(11);
  for (int rep = 0; rep < 500; ++rep) {
    const Index n = 1 + static_cast<Index>(uniform_index(rng, 16));
    const Index t = 1 + static_cast<Index>(uniform_index(rng, 64));
    Matrix m = random_rows(rng, t, n);
    // Quantize so ties occur.
    m = (m * 4.0).array().round().matrix() / 4.0;
    const auto [idx, val] = oracle::min_column(m);
    const BestExpert b = best_expert(LossSequence(m));
    EXPECT_EQ(b.index, idx);
    EXPECT_NEAR(b.loss, val, 1e-12);
  }
}

TEST(RegretOf, BestVertexHasZeroRegret) {
  Rng rng(2);
  const Matrix m = random_rows(rng, 20, 5);
  const LossSequence seq(m);
  const auto b = best_expert(seq);
  const std::vector<SimplexPoint> d(20, SimplexPoint::vertex(5, b.index));
  EXPECT_NEAR(regret_of(d, seq).regret, 0.0, 1e-12);
}

TEST(RegretOf, IdenticalExpertsGiveZeroRegret) {
  Rng rng(3);
  Matrix m(10, 4);
  for (Index t = 0; t < 10; ++t) m.row(t).setConstant(uniform01(rng));
  const auto rep = regret_of(random_decisions(rng, 10, 4), LossSequence(m));
  EXPECT_NEAR(rep.regret, 0.0, 1e-12);
}

TEST(RegretOf, UniformOnTwoExperts) {
  const LossSequence seq(Matrix{{1.0, 0.0}, {0.0, 1.0}});
  const std::vector<SimplexPoint> d(2, SimplexPoint::uniform(2));
  const auto rep = regret_of(d, seq);
  EXPECT_DOUBLE_EQ(rep.cumulative_algorithm_loss, 1.0);
  EXPECT_DOUBLE_EQ(rep.best_expert_loss, 1.0);
  EXPECT_DOUBLE_EQ(rep.regret, 0.0);
  ASSERT_EQ(rep.per_round_regret.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.per_round_regret[0], 0.5);
  EXPECT_DOUBLE_EQ(rep.per_round_regret[1], 0.0);
}

TEST(RegretOf, RegretIsAlgorithmLossMinusBest) {
  Rng rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 10));
    const Index t = 1 + static_cast<Index>(uniform_index(rng, 40));
    Matrix m = random_rows(rng, t, n) * 2.0 - Matrix::Ones(t, n);
    const auto d = random_decisions(rng, t, n);
    const auto r = regret_of(d, LossSequence(m));
    EXPECT_EQ(r.regret, r.cumulative_algorithm_loss - r.best_expert_loss);
    double alg = 0.0;
    for (Index i = 0; i < t; ++i) alg += d[static_cast<std::size_t>(i)].weights().dot(m.row(i).transpose());
    EXPECT_NEAR(r.cumulative_algorithm_loss, alg, 1e-12);
    EXPECT_NEAR(r.per_round_regret.back(), r.regret, 1e-12);
  }
}

TEST(RegretOf, InvariantUnderExpertPermutation) {
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 8));
    const Index t = 1 + static_cast<Index>(uniform_index(rng, 30));
    const Matrix m = random_rows(rng, t, n);
    const auto d = random_decisions(rng, t, n);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (Index i = n - 1; i > 0; --i) {
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(uniform_index(rng, static_cast<std::uint64_t>(i + 1)))]);
    }
    Matrix pm(t, n);
    std::vector<SimplexPoint> pd;
    for (Index j = 0; j < n; ++j) pm.col(j) = m.col(perm[static_cast<std::size_t>(j)]);
    for (const auto& p : d) {
      Vector w(n);
      for (Index j = 0; j < n; ++j) w[j] = p[perm[static_cast<std::size_t>(j)]];
      pd.push_back(validate_simplex(w));
    }
    const auto a = regret_of(d, LossSequence(m));
    const auto b = regret_of(pd, LossSequence(pm));
    EXPECT_NEAR(a.regret, b.regret, 1e-12);
    EXPECT_EQ(perm[static_cast<std::size_t>(b.best_expert_index)], a.best_expert_index);
  }
}

TEST(RegretOf, RejectsMismatchedInputs) {
  const LossSequence seq(Matrix::Zero(3, 2));
  EXPECT_THROW(regret_of(std::vector<SimplexPoint>(2, SimplexPoint::uniform(2)), seq), InvalidArgument);
  EXPECT_THROW(regret_of(std::vector<SimplexPoint>(3, SimplexPoint::uniform(3)), seq), InvalidArgument);
}

TEST(LossSequence, RejectsEmptyAndRagged) {
  EXPECT_THROW(LossSequence(Matrix(0, 3)), InvalidArgument);
  EXPECT_THROW(LossSequence::from_rows({vec({1.0, 2.0}), vec({1.0})}), InvalidArgument);
  EXPECT_THROW(LossSequence::from_rows({vec({1.0, std::numeric_limits<double>::infinity()})}), InvalidArgument);
}
