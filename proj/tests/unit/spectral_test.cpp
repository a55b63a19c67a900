#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "halluguard/error.hpp"
#include "halluguard/spectral.hpp"
#include "helpers.hpp"

using namespace halluguard;
using Eigen::MatrixXd;

TEST(BuildGram, IdenticalUnitRows) {
  MatrixXd e(2, 2);
  e << 1, 0, 1, 0;
  const GramMatrix g = build_gram(e, 1e-3, true);
  EXPECT_NEAR(g.entries(0, 0), 1.001, 1e-12);
  EXPECT_NEAR(g.entries(1, 1), 1.001, 1e-12);
  EXPECT_NEAR(g.entries(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(g.entries(1, 0), 1.0, 1e-12);
}

TEST(BuildGram, OrthonormalRows) {
  const GramMatrix g = build_gram(MatrixXd::Identity(4, 6), 1e-3, true);
  EXPECT_TRUE(g.entries.isApprox(1.001 * MatrixXd::Identity(4, 4), 1e-14));
}

TEST(BuildGram, DotProductOracle) {
  MatrixXd e(2, 2);
  e << 1, 0, 1, 1;
  const GramMatrix g = build_gram(e, 0.0, true);
  EXPECT_NEAR(g.entries(0, 1), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(g.entries(0, 1), 0.70711, 1e-5);
}

TEST(BuildGram, NormalizationAndSymmetry) {
  std::mt19937_64 rng(3);
  const MatrixXd e = hgtest::random_matrix(rng, 10, 16) * 7.0;
  const GramMatrix g = build_gram(e);
  EXPECT_TRUE(g.normalized);
  for (int i = 0; i < 10; ++i) {
    EXPECT_NEAR(g.entries(i, i), 1.0 + kDefaultRidge, 1e-9);
    for (int j = 0; j < 10; ++j) EXPECT_NEAR(g.entries(i, j), g.entries(j, i), 1e-12);
  }
  const GramMatrix raw = build_gram(e, 0.5, false);
  EXPECT_TRUE(raw.entries.isApprox(e * e.transpose() + 0.5 * MatrixXd::Identity(10, 10)));
}

TEST(BuildGram, Errors) {
  EXPECT_THROW(build_gram(MatrixXd::Ones(1, 3)), Error);
  EXPECT_THROW(build_gram(MatrixXd::Ones(2, 3), -1.0), Error);
  MatrixXd zero = MatrixXd::Ones(2, 3);
  zero.row(1).setZero();
  try {
    build_gram(zero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateEmbedding);
  }
  MatrixXd bad = MatrixXd::Ones(2, 3);
  bad(0, 0) = std::nan("");
  try {
    build_gram(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(SpectralSummary, Identity) {
  const Spectrum s = spectral_summary(MatrixXd::Identity(2, 2));
  EXPECT_NEAR(s.eigenvalues[0], 1.0, 1e-14);
  EXPECT_NEAR(s.eigenvalues[1], 1.0, 1e-14);
  EXPECT_NEAR(s.log_det, 0.0, 1e-14);
  EXPECT_NEAR(s.kappa, 1.0, 1e-14);
}

TEST(SpectralSummary, TwoByTwo) {
  MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  const Spectrum s = spectral_summary(a);
  EXPECT_NEAR(s.eigenvalues[0], 3.0, 1e-12);
  EXPECT_NEAR(s.eigenvalues[1], 1.0, 1e-12);
  EXPECT_NEAR(s.log_det, std::log(3.0), 1e-12);
  EXPECT_NEAR(s.kappa, 3.0, 1e-12);
  EXPECT_NEAR(s.trace, 4.0, 1e-12);
}

TEST(SpectralSummary, NearlySingular) {
  MatrixXd a(2, 2);
  a << 1.001, 1, 1, 1.001;
  const Spectrum s = spectral_summary(a);
  EXPECT_NEAR(s.eigenvalues[0], 2.001, 1e-12);
  EXPECT_NEAR(s.eigenvalues[1], 0.001, 1e-12);
  EXPECT_NEAR(s.kappa, 2001.0, 1e-6);
}

TEST(SpectralSummary, CholeskyMatchesEigenSum) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 9);
    const MatrixXd a = hgtest::random_spd(rng, n);
    const Spectrum s = spectral_summary(a);
    // Independent oracle: characteristic roots from a fresh solver.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    const auto w = es.eigenvalues();
    EXPECT_NEAR(s.log_det, w.array().log().sum(), 1e-8);
    EXPECT_NEAR(s.kappa, w.maxCoeff() / w.minCoeff(), 1e-9 * s.kappa);
    // Geometric mean never exceeds the arithmetic mean.
    EXPECT_LE(std::exp(s.log_det / n), s.trace / n * (1 + 1e-12));
    EXPECT_TRUE(std::is_sorted(s.eigenvalues.rbegin(), s.eigenvalues.rend()));
  }
}

TEST(CholeskyLogDet, NotPositiveDefinite) {
  MatrixXd a(2, 2);
  a << 1, 2, 2, 1;
  try {
    cholesky_log_det(a);
    FAIL();
  } catch (const NotPositiveDefiniteError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPositiveDefinite);
    EXPECT_EQ(e.pivot(), 1u);
    EXPECT_NEAR(e.pivot_value(), -3.0, 1e-12);
  }
}
