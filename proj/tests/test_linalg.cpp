#include <hbs/linalg.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hbs;
using hbs::testing::random_matrix;

TEST(GaussianMatrix, DeterministicPerSeedAndStream) {
  const DenseMatrix a = gaussian_matrix(3, 2, RngSeed{7}, 0);
  const DenseMatrix b = gaussian_matrix(3, 2, RngSeed{7}, 0);
  EXPECT_EQ(a, b);
}

TEST(GaussianMatrix, StreamsDiffer) {
  const DenseMatrix a = gaussian_matrix(3, 2, RngSeed{7}, 0);
  const DenseMatrix b = gaussian_matrix(3, 2, RngSeed{7}, 1);
  EXPECT_NE(a, b);
  EXPECT_NE(a, gaussian_matrix(3, 2, RngSeed{8}, 0));
}

TEST(GaussianMatrix, SampleMoments) {
  const DenseMatrix g = gaussian_matrix(10000, 1, RngSeed{7}, 0);
  const double mean = g.mean();
  const double var = (g.array() - mean).square().sum() / static_cast<double>(g.size() - 1);
  EXPECT_GE(mean, -0.05);
  EXPECT_LE(mean, 0.05);
  EXPECT_GE(var, 0.9);
  EXPECT_LE(var, 1.1);
  // Regression values for this generator and seed.
  EXPECT_NEAR(mean, -0.013831786602188293, 1e-12);
  EXPECT_NEAR(var, 0.97040677993108315, 1e-12);
}

TEST(Col, IdentityKeepsLeadingCoordinates) {
  const DenseMatrix q = col(DenseMatrix::Identity(3, 3), 2);
  ASSERT_EQ(q.rows(), 3);
  ASSERT_EQ(q.cols(), 2);
  EXPECT_LE((q.transpose() * q - DenseMatrix::Identity(2, 2)).norm(), 1e-14);
  // Spans span(e1, e2): no component along e3.
  EXPECT_LE(q.row(2).norm(), 1e-15);
}

TEST(Col, RankOneSpan) {
  Vector u = random_matrix(6, 1, 3).col(0);
  u.normalize();
  DenseMatrix b(6, 2);
  b << u, 2.0 * u;
  const DenseMatrix q = col(b, 1);
  EXPECT_LE((u - q * (q.transpose() * u)).norm(), 1e-13);
}

TEST(Col, FullRankResidual) {
  const DenseMatrix b = random_matrix(50, 10, 11);
  const DenseMatrix q = col(b, 10);
  EXPECT_LE((b - q * (q.transpose() * b)).norm() / b.norm(), 1e-13);
  EXPECT_LE((q.transpose() * q - DenseMatrix::Identity(10, 10)).norm(), 1e-13 * 10);
  // Same range as the full QR: the trailing columns of the full Q are orthogonal to q.
  const DenseMatrix full = Eigen::HouseholderQR<DenseMatrix>(b).householderQ();
  EXPECT_LE((full.rightCols(40).transpose() * q).norm(), 1e-13);
}

TEST(Col, RejectsTooManyColumns) {
  EXPECT_THROW(col(DenseMatrix::Zero(3, 2), 3), DimensionError);
  EXPECT_THROW(col(DenseMatrix::Zero(2, 5), 3), DimensionError);
}

TEST(Col, OrthonormalOnRandomShapes) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Index rows = 2 + static_cast<Index>(seed % 17);
    const Index cols = 1 + static_cast<Index>((seed * 7) % 13);
    const Index k = std::min(rows, cols);
    const DenseMatrix q = col(random_matrix(rows, cols, seed), k);
    EXPECT_LE((q.transpose() * q - DenseMatrix::Identity(k, k)).norm(), 1e-12) << seed;
  }
}

TEST(Nullspace, CoordinateVector) {
  DenseMatrix b(1, 3);
  b << 1, 0, 0;
  const DenseMatrix z = nullspace(b, 2);
  ASSERT_EQ(z.rows(), 3);
  ASSERT_EQ(z.cols(), 2);
  EXPECT_LE((b * z).norm(), 1e-15);
  EXPECT_LE((z.transpose() * z - DenseMatrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(Nullspace, RandomWideResidual) {
  const DenseMatrix b = random_matrix(5, 15, 5);
  const DenseMatrix z = nullspace(b, 10);
  EXPECT_LE((b * z).norm(), 1e-12 * b.norm());
  EXPECT_LE((z.transpose() * z - DenseMatrix::Identity(10, 10)).norm(), 1e-12);
}

TEST(Nullspace, ZeroMatrix) {
  const DenseMatrix z = nullspace(DenseMatrix::Zero(2, 4), 2);
  EXPECT_EQ((DenseMatrix::Zero(2, 4) * z).norm(), 0.0);
  EXPECT_LE((z.transpose() * z - DenseMatrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(Nullspace, RejectsExcessNullity) {
  EXPECT_THROW(nullspace(random_matrix(5, 8, 1), 4), DimensionError);
}

TEST(Nullspace, PropertyOnRandomShapes) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Index rows = 1 + static_cast<Index>(seed % 12);
    const Index cols = rows + 1 + static_cast<Index>((seed * 5) % 20);
    const Index k = cols - rows;
    DenseMatrix b = random_matrix(rows, cols, 100 + seed);
    b *= std::pow(10.0, static_cast<double>(seed % 7) - 3.0);
    const DenseMatrix z = nullspace(b, k);
    EXPECT_LE((b * z).norm(), 1e-12 * std::max(1.0, b.norm())) << seed;
    EXPECT_LE((z.transpose() * z - DenseMatrix::Identity(k, k)).norm(), 1e-12) << seed;
  }
}

TEST(LstsqRight, SelfSolve) {
  DenseMatrix m = DenseMatrix::Zero(2, 4);
  m(0, 0) = 2;
  m(1, 1) = 2;
  const DenseMatrix x = lstsq_right(m, m);
  EXPECT_LE((x - DenseMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(LstsqRight, PlantedSolution) {
  const DenseMatrix m = random_matrix(4, 12, 21);
  const DenseMatrix c = random_matrix(3, 4, 22);
  const DenseMatrix x = lstsq_right(c * m, m);
  EXPECT_LE((x - c).norm(), 1e-12 * c.norm());
}

TEST(LstsqRight, ZeroRightHandSide) {
  const DenseMatrix x = lstsq_right(DenseMatrix::Zero(3, 12), random_matrix(4, 12, 2));
  EXPECT_EQ(x.rows(), 3);
  EXPECT_EQ(x.cols(), 4);
  EXPECT_EQ(x.norm(), 0.0);
}

TEST(LstsqRight, MatchesPseudoinverse) {
  const DenseMatrix m = random_matrix(5, 9, 31);
  const DenseMatrix b = random_matrix(3, 9, 32);
  const DenseMatrix pinv = m.transpose() * (m * m.transpose()).inverse();
  EXPECT_LE((lstsq_right(b, m) - b * pinv).norm(), 1e-12 * (b * pinv).norm());
}

TEST(LstsqRight, ResidualIsMinimal) {
  const DenseMatrix m = random_matrix(4, 10, 41);
  const DenseMatrix b = random_matrix(3, 10, 42);
  const DenseMatrix x = lstsq_right(b, m);
  const double best = (x * m - b).norm();
  for (std::uint64_t t = 0; t < 10; ++t) {
    DenseMatrix delta = random_matrix(3, 4, 500 + t);
    delta *= 1e-3 / delta.norm();
    EXPECT_GE(((x + delta) * m - b).norm(), best - 1e-9);
  }
}

TEST(LstsqRight, RankDeficientProbeThrows) {
  DenseMatrix m = random_matrix(3, 10, 51);
  m.row(2) = m.row(0) + m.row(1);
  EXPECT_THROW(lstsq_right(random_matrix(2, 10, 52), m), IllConditionedError);
}

TEST(LstsqRight, ShapeErrors) {
  EXPECT_THROW(lstsq_right(DenseMatrix::Zero(2, 3), DenseMatrix::Zero(2, 4)), DimensionError);
  EXPECT_THROW(lstsq_right(DenseMatrix::Zero(2, 3), DenseMatrix::Zero(4, 3)), DimensionError);
}

namespace {

LinearMap matrix_map(const DenseMatrix& m) {
  return [m](const Vector& x) -> Vector { return m * x; };
}
LinearMap transpose_map(const DenseMatrix& m) {
  return [m](const Vector& x) -> Vector { return m.transpose() * x; };
}

} // namespace

TEST(PowerMethod, ZeroOperator) {
  const DenseMatrix zero = DenseMatrix::Zero(16, 16);
  const DenseMatrix eye = DenseMatrix::Identity(16, 16);
  EXPECT_EQ(power_method_relnorm(matrix_map(zero), transpose_map(zero), matrix_map(eye),
                                 transpose_map(eye), 16, 20, RngSeed{1}),
            0.0);
}

TEST(PowerMethod, DiagonalDominantValue) {
  DenseMatrix e = DenseMatrix::Identity(8, 8);
  e(0, 0) = 3.0;
  const DenseMatrix eye = DenseMatrix::Identity(8, 8);
  const double est = power_method_relnorm(matrix_map(e), transpose_map(e), matrix_map(eye),
                                          transpose_map(eye), 8, 50, RngSeed{2});
  EXPECT_GE(est, 2.999);
  EXPECT_LE(est, 3.001);
}

TEST(PowerMethod, IdenticalOperatorsGiveRatioNearOne) {
  const DenseMatrix a = random_matrix(32, 32, 61);
  const double est = power_method_relnorm(matrix_map(a), transpose_map(a), matrix_map(a),
                                          transpose_map(a), 32, 20, RngSeed{3});
  EXPECT_GE(est, 0.9);
  EXPECT_LE(est, 1.0);
}

TEST(PowerMethod, NeverExceedsSpectralNorm) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DenseMatrix e = random_matrix(20, 20, 700 + seed);
    const Vector start = gaussian_matrix(20, 1, RngSeed{seed}, 2).col(0).normalized();
    const double est = spectral_norm_estimate(matrix_map(e), transpose_map(e), start, 20);
    EXPECT_LE(est, hbs::testing::spectral_norm(e) * (1 + 1e-12));
  }
}

TEST(PowerMethod, Deterministic) {
  const DenseMatrix a = random_matrix(12, 12, 71);
  const DenseMatrix e = random_matrix(12, 12, 72);
  const auto run = [&] {
    return power_method_relnorm(matrix_map(e), transpose_map(e), matrix_map(a),
                                transpose_map(a), 12, 20, RngSeed{9});
  };
  EXPECT_EQ(run(), run());
}
