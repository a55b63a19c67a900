#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "halluguard/bound.hpp"
#include "halluguard/bound_checks.hpp"
#include "halluguard/error.hpp"
#include "halluguard/keyvalue.hpp"
#include "helpers.hpp"

using namespace halluguard;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<int> range(int lo, int hi) {
  std::vector<int> v(static_cast<std::size_t>(hi - lo + 1));
  std::iota(v.begin(), v.end(), lo);
  return v;
}

}  // namespace

TEST(DataTerm, Examples) {
  BoundParams p;
  EXPECT_NEAR(data_term(p), 1.25, 1e-12);
  p.k_pt = 0;
  p.k = 0;
  EXPECT_NEAR(data_term(p), p.inf_approx, 1e-15);
  p = BoundParams{};
  p.inf_approx = 0;
  EXPECT_EQ(data_term(p), 0.0);
}

TEST(ReasoningTerm, Examples) {
  BoundParams p;
  EXPECT_NEAR(reasoning_term(p), 7.0, 1e-12);
  EXPECT_EQ(reasoning_term(with_T(p, 0)), 0.0);
  p.beta = 0;
  for (int t : {0, 1, 5, 50}) EXPECT_EQ(reasoning_term(with_T(p, t)), 0.0);
}

TEST(RiskBound, Examples) {
  BoundParams p;
  EXPECT_NEAR(risk_bound(p), 8.25, 1e-12);
  EXPECT_LE(risk_bound(with_T(p, 3)), risk_bound(with_T(p, 4)));
  p.inf_approx = 0;
  p.T = 0;
  EXPECT_EQ(risk_bound(p), 0.0);
}

TEST(RiskBound, Validation) {
  BoundParams p;
  p.complexity_PL = 0.5;
  try {
    risk_bound(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("complexity_PL"), std::string::npos);
  }
  p = BoundParams{};
  p.T = -1;
  EXPECT_THROW(validate_params(p), Error);
}

TEST(BoundParamsFile, RoundTrip) {
  BoundParams p;
  p.beta = 0.25;
  p.T = 7;
  std::stringstream s;
  write_bound_params(s, p);
  const BoundParams back = parse_bound_params(KeyValueFile::parse(s));
  EXPECT_EQ(back.beta, 0.25);
  EXPECT_EQ(back.T, 7);
  std::istringstream bad("bogus = 1\n");
  EXPECT_THROW(parse_bound_params(KeyValueFile::parse(bad)), Error);
}

TEST(Simulate, NoiseFreeEqualsSum) {
  for (const auto& r : simulate_empirical_risk(BoundParams{}, 0.0, 1, range(0, 10))) {
    EXPECT_EQ(r.empirical, r.data + r.reasoning);
    EXPECT_EQ(r.bound, r.data + r.reasoning);
  }
}

TEST(Simulate, Envelope) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& r : simulate_empirical_risk(BoundParams{}, 0.05, seed, range(0, 24))) {
      EXPECT_LE(r.empirical, r.bound);
      EXPECT_GE(r.empirical, 0.0);
    }
  }
}

TEST(Simulate, RatioSettles) {
  const auto rows = simulate_empirical_risk(BoundParams{}, 0.05, 3, range(0, 24));
  std::vector<double> ratio;
  for (std::size_t i = rows.size() * 3 / 4; i < rows.size(); ++i) ratio.push_back(rows[i].empirical / rows[i].bound);
  const double mean = std::accumulate(ratio.begin(), ratio.end(), 0.0) / ratio.size();
  for (double r : ratio) EXPECT_NEAR(r / mean, 1.0, 0.10);
}

TEST(Crossover, Examples) {
  BoundParams p;
  p.beta = 0;
  EXPECT_FALSE(decomposition_crossover(p, range(0, 50)).has_value());
  p = BoundParams{};
  p.inf_approx = 0;
  EXPECT_EQ(decomposition_crossover(p, range(0, 50)), 1);
  // Linear-scan oracle: reasoning(T) = 2^T - 1 against the constant 1.25.
  p = BoundParams{};
  int expected = -1;
  for (int t = 0; t <= 50 && expected < 0; ++t) {
    if (std::pow(2.0, t) - 1.0 > 1.25) expected = t;
  }
  EXPECT_EQ(decomposition_crossover(p, range(0, 50)), expected);
  EXPECT_EQ(expected, 2);
}

TEST(Submultiplicativity, Identity) {
  const auto r = verify_submultiplicativity({MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3)});
  EXPECT_NEAR(r.lhs, 1.0, 1e-12);
  EXPECT_NEAR(r.rhs_product, 1.0, 1e-12);
  EXPECT_NEAR(r.rhs_sigma_max_T, 1.0, 1e-12);
  EXPECT_TRUE(r.holds);
}

TEST(Submultiplicativity, AlignedRankOne) {
  MatrixXd j = MatrixXd::Zero(3, 3);
  j(0, 0) = 2.0;
  const auto r = verify_submultiplicativity({j, j, j});
  EXPECT_EQ(r.lhs, 8.0);
  EXPECT_EQ(r.rhs_product, 8.0);
  EXPECT_EQ(r.gap, 0.0);
  EXPECT_TRUE(r.holds);
}

TEST(Submultiplicativity, RandomStrict) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    std::vector<MatrixXd> js;
    for (int t = 0; t < 3; ++t) js.push_back(hgtest::random_matrix(rng, 4, 4));
    const auto r = verify_submultiplicativity(js);
    // Dense oracle.
    const MatrixXd prod = js[2] * js[1] * js[0];
    double rhs = 1.0, mx = 0.0;
    for (const auto& j : js) {
      const double s = Eigen::JacobiSVD<MatrixXd>(j).singularValues()(0);
      rhs *= s;
      mx = std::max(mx, s);
    }
    EXPECT_NEAR(r.lhs, Eigen::JacobiSVD<MatrixXd>(prod).singularValues()(0), 1e-9 * rhs);
    EXPECT_LT(r.lhs, r.rhs_product);
    EXPECT_LE(r.rhs_product, r.rhs_sigma_max_T * (1 + 1e-12));
    EXPECT_NEAR(r.rhs_sigma_max_T, mx * mx * mx, 1e-9 * mx * mx * mx);
  }
}

TEST(DetLowerBound, Examples) {
  auto r = verify_det_lower_bound(spectral_summary(MatrixXd::Identity(3, 3)), 1.0);
  EXPECT_NEAR(r.slack, 0.0, 1e-12);
  EXPECT_TRUE(r.holds);
  MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  r = verify_det_lower_bound(spectral_summary(a), 3.0);
  EXPECT_NEAR(r.lower_bound, 1.0, 1e-12);
  EXPECT_NEAR(r.slack, 0.0, 1e-12);
  EXPECT_TRUE(r.holds);
  const Eigen::Vector3d diag(2, 1, 0.5);
  r = verify_det_lower_bound(spectral_summary(MatrixXd(diag.asDiagonal())), 2.0);
  EXPECT_NEAR(r.lower_bound, 0.25, 1e-12);
  EXPECT_NEAR(r.lambda_min, 0.5, 1e-12);
  EXPECT_GT(r.slack, 0.0);
  EXPECT_THROW(verify_det_lower_bound(spectral_summary(a), 2.0), Error);
}

TEST(ProjectorDeviation, ZeroAndInRange) {
  std::mt19937_64 rng(5);
  const MatrixXd phi = hgtest::random_matrix(rng, 6, 3);
  const VectorXd u = hgtest::random_matrix(rng, 6, 1);
  EXPECT_NEAR(projector_deviation(phi, MatrixXd::Zero(6, 3), u).deviation, 0.0, 1e-12);
  // A perturbation that keeps the column space.
  const MatrixXd inside = phi * hgtest::random_matrix(rng, 3, 3) * 0.1;
  EXPECT_NEAR(projector_deviation(phi, inside, u).deviation, 0.0, 1e-10);
}

TEST(ProjectorDeviation, OrthonormalBound) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const MatrixXd phi = Eigen::HouseholderQR<MatrixXd>(hgtest::random_matrix(rng, 8, 3))
                             .householderQ() * MatrixXd::Identity(8, 3);
    const MatrixXd delta = 1e-2 * hgtest::random_matrix(rng, 8, 3);
    const VectorXd u = hgtest::random_matrix(rng, 8, 1);
    const auto r = projector_deviation(phi, delta, u);
    EXPECT_NEAR(r.kappa, 1.0, 1e-10);
    // Dense oracle for both projectors.
    const MatrixXd p0 = phi * (phi.transpose() * phi).inverse() * phi.transpose();
    const MatrixXd q = phi + delta;
    const MatrixXd p1 = q * (q.transpose() * q).inverse() * q.transpose();
    EXPECT_NEAR(r.deviation, (p1 * u - p0 * u).norm(), 1e-10);
    const double dn = Eigen::JacobiSVD<MatrixXd>(delta).singularValues()(0);
    EXPECT_LE(r.deviation, 2.0 * dn * u.norm());
    EXPECT_TRUE(r.holds);
  }
}

TEST(ProjectorDeviation, Errors) {
  MatrixXd phi = MatrixXd::Zero(4, 2);
  phi(0, 0) = 1;
  EXPECT_THROW(projector_deviation(phi, MatrixXd::Zero(4, 2), VectorXd::Ones(4)), Error);
  phi(1, 1) = 1;
  MatrixXd kill = MatrixXd::Zero(4, 2);
  kill(1, 1) = -1;
  try {
    projector_deviation(phi, kill, VectorXd::Ones(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegeneratePerturbation);
  }
}

TEST(KappaScaling, ConstantGridRejected) {
  KappaScalingConfig c;
  c.kappa_grid = {10, 10, 10};
  try {
    kappa_scaling_experiment(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
  }
}

TEST(KappaScaling, LinearInDelta) {
  KappaScalingConfig c;
  c.trials = 30;
  const auto a = kappa_scaling_experiment(c);
  c.delta_norm *= 10;
  const auto b = kappa_scaling_experiment(c);
  for (std::size_t i = 0; i < a.kappa.size(); ++i) {
    EXPECT_NEAR(std::sqrt(b.max_sq_deviation[i] / a.max_sq_deviation[i]), 10.0, 2.0);
  }
}

TEST(KappaScaling, BoundSlopeIsTwo) {
  KappaScalingConfig c;
  c.trials = 20;
  const auto r = kappa_scaling_experiment(c);
  EXPECT_NEAR(r.bound_slope, 2.0, 0.05);
  for (std::size_t i = 0; i < r.kappa.size(); ++i) EXPECT_LE(r.max_sq_deviation[i], r.max_sq_bound[i]);
}

TEST(Freedman, Examples) {
  FreedmanConfig c;
  c.trials = 10000;
  const auto r = freedman_sanity(c);
  EXPECT_LT(r.exceedance.back(), r.exceedance.front());
  EXPECT_TRUE(r.monotone);
  EXPECT_TRUE(r.bounded);
  EXPECT_LT(r.envelope.back(), r.envelope.front());
  c.eps = c.increment_bound * c.horizon + 1;
  for (double p : freedman_sanity(c).exceedance) EXPECT_EQ(p, 0.0);
  c = FreedmanConfig{};
  c.rollouts = {1, 1000, 100000};
  c.trials = 10;
  c.C = 1.0;
  const auto big = freedman_sanity(c);
  EXPECT_LT(big.envelope.back(), 1e-100);
}
