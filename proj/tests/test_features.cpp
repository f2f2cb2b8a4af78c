#include <gtest/gtest.h>

#include <random>

#include "dlrr/features.hpp"
#include "oracles.hpp"

using namespace dlrr;

TEST(FitPca, IdenticalColumnsAreDegenerate) {
  Vector col(4);
  col << 0.1, 0.2, 0.3, 0.4;
  const Matrix d = col.replicate(1, 6);
  EXPECT_THROW(fit_pca(d, 1), ConfigError);
}

TEST(FitPca, LineInFiveDimensions) {
  std::mt19937_64 rng(1);
  Vector dir(5);
  dir << 1, -2, 0.5, 3, 1;
  dir.normalize();
  Vector offset(5);
  offset << 4, 4, 4, 4, 4;
  Matrix d(5, 30);
  std::normal_distribution<double> g;
  for (Eigen::Index j = 0; j < d.cols(); ++j) d.col(j) = offset + g(rng) * dir;
  const FeatureSpace fs = fit_pca(d, 1);
  EXPECT_GT(std::abs(fs.basis.col(0).dot(dir)), 1.0 - 1e-8);
}

TEST(FitPca, ProjectedCovarianceIsDiagonal) {
  std::mt19937_64 rng(2);
  const Matrix d = oracle::gaussian(20, 50, rng);
  const FeatureSpace fs = fit_pca(d, 10);
  const Matrix f = project_all(fs, d);
  const Matrix cov = f * f.transpose() / static_cast<double>(d.cols() - 1);
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) {
      if (i != j) EXPECT_LE(std::abs(cov(i, j)), 1e-8);
    }
    if (i > 0) EXPECT_GE(cov(i - 1, i - 1), cov(i, i) - 1e-12);
    EXPECT_NEAR(cov(i, i), fs.explained_variance(i), 1e-10);
  }
  EXPECT_LE((fs.basis.transpose() * fs.basis - Matrix::Identity(10, 10)).norm(), 1e-8);
}

TEST(FitPca, DimensionLimits) {
  std::mt19937_64 rng(3);
  const Matrix d = oracle::gaussian(6, 5, rng);
  EXPECT_NO_THROW(fit_pca(d, 4));
  EXPECT_THROW(fit_pca(d, 5), ConfigError);
  EXPECT_THROW(fit_pca(d, 0), ConfigError);
  // Rank-2 data has only two usable directions.
  const Matrix low = oracle::gaussian(10, 2, rng) * oracle::gaussian(2, 8, rng);
  EXPECT_NO_THROW(fit_pca(low, 2));
  EXPECT_THROW(fit_pca(low, 3), ConfigError);
}

TEST(Project, MeanMapsToOrigin) {
  std::mt19937_64 rng(4);
  const FeatureSpace fs = fit_pca(oracle::gaussian(8, 12, rng), 3);
  EXPECT_LE(project(fs, fs.mean).norm(), 1e-14);
}

TEST(Project, BasisColumnGivesUnitCoordinate) {
  std::mt19937_64 rng(5);
  const FeatureSpace fs = fit_pca(oracle::gaussian(8, 12, rng), 4);
  for (Eigen::Index k = 0; k < 4; ++k) {
    const Vector e = project(fs, fs.mean + fs.basis.col(k));
    EXPECT_LE((e - Vector::Unit(4, k)).norm(), 1e-12);
  }
}

TEST(Project, BatchMatchesSingle) {
  std::mt19937_64 rng(6);
  const Matrix d = oracle::gaussian(9, 15, rng);
  const FeatureSpace fs = fit_pca(d, 5);
  const Matrix batch = project_all(fs, d);
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    EXPECT_LE((batch.col(j) - project(fs, d.col(j))).norm(), 1e-13);
  }
  EXPECT_THROW(project(fs, Vector::Ones(8)), DataError);
}

TEST(Project, ReconstructionErrorNonIncreasingInDim) {
  std::mt19937_64 rng(7);
  const Matrix d = oracle::gaussian(10, 20, rng);
  const Vector v = oracle::gaussian(10, 1, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 1; k <= 10; ++k) {
    const FeatureSpace fs = fit_pca(d, k);
    const double err = (v - reconstruct(fs, project(fs, v))).norm();
    EXPECT_LE(err, prev + 1e-12);
    prev = err;
  }
}

TEST(Project, PreservesDistancesInSpan) {
  std::mt19937_64 rng(8);
  const FeatureSpace fs = fit_pca(oracle::gaussian(12, 20, rng), 4);
  const Vector u = fs.mean + fs.basis * oracle::gaussian(4, 1, rng);
  const Vector v = fs.mean + fs.basis * oracle::gaussian(4, 1, rng);
  EXPECT_NEAR((project(fs, u) - project(fs, v)).norm(), (u - v).norm(), 1e-8);
}

TEST(FitPca, SignConventionIsDeterministic) {
  std::mt19937_64 rng(9);
  const Matrix d = oracle::gaussian(7, 11, rng);
  const FeatureSpace a = fit_pca(d, 3), b = fit_pca(d, 3);
  EXPECT_EQ(a.basis, b.basis);
  for (Eigen::Index k = 0; k < 3; ++k) {
    Eigen::Index arg = 0;
    a.basis.col(k).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(a.basis(arg, k), 0.0);
  }
}
