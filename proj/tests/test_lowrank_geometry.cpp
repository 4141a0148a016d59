#include "somd/lowrank_geometry.hpp"
#include "somd/random.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace somd;

namespace {

std::vector<Vector> hypercube(Index d) {
  std::vector<Vector> pts;
  for (Index mask = 0; mask < (Index{1} << d); ++mask) {
    Vector v(d);
    for (Index j = 0; j < d; ++j) v[j] = ((mask >> j) & 1) ? 1.0 : -1.0;
    pts.push_back(v);
  }
  return pts;
}

Matrix random_orthogonal(Rng& rng, Index d) {
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) g(i, j) = standard_normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(d, d);
}

Matrix uniform_matrix(Rng& rng, Index n, Index d) {
  Matrix u(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) u(i, j) = uniform01(rng);
  }
  return u;
}

}  // namespace

TEST(SubspaceSpec, RejectsRankDeficientBasis) {
  Matrix u(4, 2);
  u << 1, 2, 2, 4, 3, 6, 4, 8;
  EXPECT_THROW(SubspaceSpec{u}, InvalidArgument);
  EXPECT_THROW(SubspaceSpec{Matrix(3, 0)}, InvalidArgument);
  EXPECT_THROW(SubspaceSpec{Matrix::Identity(2, 3)}, InvalidArgument);
  EXPECT_EQ(SubspaceSpec(Matrix::Identity(5, 2)).rank(), 2);
}

TEST(Mvee, HypercubeGivesScaledIdentity) {
  for (Index d : {2, 3, 4}) {
    const EllipsoidResult e = mvee(hypercube(d), 1e-9);
    EXPECT_LE((e.M - Matrix::Identity(d, d) / static_cast<double>(d)).cwiseAbs().maxCoeff(), 1e-6) << "d = " << d;
    EXPECT_LE(e.center.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(e.gap, 1e-9);
  }
}

TEST(Mvee, CrossPolytopeInPlaneGivesUnitDisc) {
  std::vector<Vector> pts;
  for (double s : {1.0, -1.0}) {
    pts.push_back(Vector::Unit(2, 0) * s);
    pts.push_back(Vector::Unit(2, 1) * s);
  }
  const EllipsoidResult e = mvee(pts, 1e-9);
  EXPECT_LE((e.M - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Mvee, RandomPointsAreContainedAndEllipsoidIsTight) {
  Rng rng(1);
  const double tol = 1e-7;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<Vector> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(normal_vector(rng, 3) + Vector::Constant(3, 2.0));
    const EllipsoidResult e = mvee(pts, tol);
    double worst = 0.0;
    for (const auto& x : pts) {
      const Vector r = x - e.center;
      const double v = r.dot(e.M * r);
      EXPECT_LE(v, 1.0 + tol);
      worst = std::max(worst, v);
    }
    // Shrinking by 1 + 10 tol must push some point outside.
    EXPECT_GT(worst * (1.0 + 10.0 * tol), 1.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(e.M);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Mvee, EquivariantUnderOrthogonalMaps) {
  Rng rng(2);
  for (Index d : {2, 3, 5}) {
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<Vector> pts;
      for (int i = 0; i < 15; ++i) pts.push_back(normal_vector(rng, d));
      const Matrix q = random_orthogonal(rng, d);
      std::vector<Vector> rotated;
      for (const auto& x : pts) rotated.push_back(q * x);
      const EllipsoidResult a = mvee(pts, 1e-11);
      const EllipsoidResult b = mvee(rotated, 1e-11);
      EXPECT_LE((b.M - q * a.M * q.transpose()).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LE((b.center - q * a.center).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(Mvee, RejectsDegenerateInput) {
  std::vector<Vector> line;
  for (int i = 0; i < 5; ++i) line.push_back(Vector::Constant(2, static_cast<double>(i)));
  EXPECT_THROW(mvee(line), InvalidArgument);
  EXPECT_THROW(mvee({Vector::Zero(2), Vector::Ones(2)}), InvalidArgument);
  EXPECT_THROW(mvee(hypercube(2), 0.0), InvalidArgument);
}

TEST(MveeCentered, HypercubeGivesScaledIdentity) {
  for (Index d : {2, 3, 4}) {
    const EllipsoidResult e = mvee_centered(hypercube(d), 1e-9);
    EXPECT_LE((e.M - Matrix::Identity(d, d) / static_cast<double>(d)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(CoefficientPolytope, IdentityBasisGivesUnitCube) {
  const auto verts = enumerate_coefficient_vertices(Matrix::Identity(6, 3));
  EXPECT_EQ(verts.size(), 8u);
  for (const auto& v : verts) {
    for (Index j = 0; j < 3; ++j) EXPECT_TRUE(v[j] == 0.0 || v[j] == 1.0);
  }
}

TEST(CoefficientPolytope, VerticesAndSamplesAreFeasible) {
  Rng rng(3);
  for (Index d : {1, 2, 3, 5, 6}) {
    const Matrix u = uniform_matrix(rng, 24, d);
    const auto pts = coefficient_polytope_points(SubspaceSpec(u), 80, rng);
    EXPECT_GE(static_cast<Index>(pts.size()), d + 1);
    for (const auto& v : pts) {
      const Vector l = u * v;
      EXPECT_GE(l.minCoeff(), -1e-9);
      EXPECT_LE(l.maxCoeff(), 1.0 + 1e-9);
    }
  }
}

TEST(BuildH, IdentityBasisGivesClosedForm) {
  Rng rng(4);
  for (Index d : {1, 2, 3}) {
    const Index n = 7;
    const Matrix h = build_H(SubspaceSpec(Matrix::Identity(n, d)), 64, 1e-9, rng);
    Matrix expected = Matrix::Identity(n, n);
    expected.topLeftCorner(d, d) += Matrix::Identity(d, d) / static_cast<double>(d);
    EXPECT_LE((h - expected).cwiseAbs().maxCoeff(), 1e-6) << "d = " << d;
  }
}

TEST(BuildH, RankOneUpdateTouchesOnlyItsSupport) {
  Rng rng(5);
  const Matrix h = build_H(SubspaceSpec(Matrix::Identity(5, 1)), 16, 1e-9, rng);
  Matrix diff = h - Matrix::Identity(5, 5);
  EXPECT_GT(diff(0, 0), 0.0);
  diff(0, 0) = 0.0;
  EXPECT_EQ(diff.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildH, RandomBasisGivesIdentityPlusLowRankPsd) {
  Rng rng(6);
  for (Index d : {1, 2, 3, 5}) {
    for (int rep = 0; rep < 3; ++rep) {
      const Index n = 12 + static_cast<Index>(uniform_index(rng, 20));
      const Matrix h = build_H(SubspaceSpec(uniform_matrix(rng, n, d)), 60, 1e-7, rng);
      EXPECT_LE((h - h.transpose()).cwiseAbs().maxCoeff(), 0.0);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(h - Matrix::Identity(n, n));
      const Vector ev = eig.eigenvalues();
      EXPECT_GE(ev.minCoeff(), -1e-9);
      const double top = ev.maxCoeff();
      Index positive = 0;
      for (Index i = 0; i < n; ++i) positive += ev[i] > 1e-9 * std::max(1.0, top);
      EXPECT_LE(positive, d);
      Eigen::SelfAdjointEigenSolver<Matrix> full(h);
      EXPECT_GE(full.eigenvalues().minCoeff(), 1.0 - 1e-9);
    }
  }
}

TEST(BuildH, EnforcesDeskScaleLimits) {
  Rng rng(7);
  EXPECT_THROW(build_H(SubspaceSpec(Matrix::Identity(12, 11)), 64, 1e-7, rng), InvalidArgument);
  EXPECT_THROW(build_H(SubspaceSpec(Matrix::Identity(6, 2)), 2, 1e-7, rng), InvalidArgument);
}

TEST(BuildH, DeterministicForFixedSeed) {
  Rng seed_rng(8);
  const Matrix u = uniform_matrix(seed_rng, 20, 5);
  Rng a(42);
  Rng b(42);
  EXPECT_EQ(build_H(SubspaceSpec(u), 50, 1e-7, a), build_H(SubspaceSpec(u), 50, 1e-7, b));
}
