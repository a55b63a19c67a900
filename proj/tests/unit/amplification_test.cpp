#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "halluguard/amplification.hpp"
#include "halluguard/error.hpp"
#include "helpers.hpp"

using namespace halluguard;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct DenseOps {
  std::vector<MatrixXd> j;
  StepOperator jvp() const {
    return [this](int t, const VectorXd& v) -> VectorXd { return j[t] * v; };
  }
  StepOperator vjp() const {
    return [this](int t, const VectorXd& u) -> VectorXd { return j[t].transpose() * u; };
  }
};

}  // namespace

TEST(AmplificationExact, Diagonal) {
  MatrixXd d(2, 2);
  d << 3, 0, 0, 1;
  DenseOps ops{{d, d, d}};
  const auto est = amplification_exact(ops.jvp(), ops.vjp(), 3, 2);
  EXPECT_NEAR(est.sigma_max, 3.0, 1e-6);
  EXPECT_NEAR(est.beta_avg, std::log(3.0), 1e-6);
  EXPECT_EQ(est.per_step.size(), 3u);
  EXPECT_EQ(est.mode, AmplificationMode::kExactJacobian);
}

TEST(AmplificationExact, Rotation) {
  const double a = 0.7;
  MatrixXd r(2, 2);
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  DenseOps ops{{r, r}};
  const auto est = amplification_exact(ops.jvp(), ops.vjp(), 2, 2);
  EXPECT_NEAR(est.sigma_max, 1.0, 1e-9);
  EXPECT_NEAR(est.beta_avg, 0.0, 1e-9);
}

TEST(AmplificationExact, MatchesDenseSvd) {
  std::mt19937_64 rng(5);
  DenseOps ops;
  for (int t = 0; t < 20; ++t) ops.j.push_back(hgtest::random_matrix(rng, 5, 5));
  PowerIterationOptions opt;
  opt.max_iters = 5000;
  opt.tol = 1e-14;
  const auto est = amplification_exact(ops.jvp(), ops.vjp(), 20, 5, opt);
  double log_sum = 0.0, mx = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double s = Eigen::JacobiSVD<MatrixXd>(ops.j[t]).singularValues()(0);
    EXPECT_NEAR(est.per_step[t], s, 1e-6 * s) << "step " << t;
    log_sum += std::log(s);
    mx = std::max(mx, s);
  }
  EXPECT_NEAR(est.sigma_max, mx, 1e-6 * mx);
  EXPECT_NEAR(est.beta_avg, log_sum / 20, 1e-6);
  EXPECT_LE(est.beta_avg, std::log(est.sigma_max) + 1e-12);
}

TEST(AmplificationExact, InconsistentOracle) {
  std::mt19937_64 rng(6);
  const MatrixXd j = hgtest::random_matrix(rng, 4, 4);
  StepOperator jvp = [&](int, const VectorXd& v) -> VectorXd { return j * v; };
  StepOperator wrong = [&](int, const VectorXd& u) -> VectorXd { return j * u; };
  try {
    amplification_exact(jvp, wrong, 1, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInconsistentOracle);
  }
}

TEST(AmplificationExact, NotConverged) {
  // Two equal singular values in different directions plus a slow third keep
  // the Rayleigh quotient moving for a while.
  std::mt19937_64 rng(8);
  const MatrixXd j = hgtest::random_matrix(rng, 6, 6);
  DenseOps ops{{j}};
  PowerIterationOptions opt;
  opt.max_iters = 1;
  EXPECT_THROW(amplification_exact(ops.jvp(), ops.vjp(), 1, 6, opt), ConvergenceError);
}

TEST(AmplificationProxy, Geometric) {
  MatrixXd s(5, 2);
  s << 0, 0, 1, 0, 3, 0, 7, 0, 15, 0;
  const auto est = amplification_proxy(s);
  ASSERT_EQ(est.per_step.size(), 3u);
  for (double a : est.per_step) EXPECT_NEAR(a, 2.0, 1e-12);
  EXPECT_NEAR(est.sigma_max, 2.0, 1e-12);
  EXPECT_NEAR(est.beta_avg, std::log(2.0), 1e-12);
}

TEST(AmplificationProxy, ConstantStates) {
  const auto est = amplification_proxy(MatrixXd::Ones(4, 3));
  EXPECT_EQ(est.sigma_max, 1.0);
  EXPECT_EQ(est.beta_avg, 0.0);
}

TEST(AmplificationProxy, HandArithmetic) {
  MatrixXd s(4, 1);
  s << 0, 1, 3, 11;  // delta norms 1, 2, 8
  const auto est = amplification_proxy(s);
  ASSERT_EQ(est.per_step.size(), 2u);
  EXPECT_NEAR(est.per_step[0], 2.0, 1e-12);
  EXPECT_NEAR(est.per_step[1], 4.0, 1e-12);
  EXPECT_NEAR(est.sigma_max, 4.0, 1e-12);
  EXPECT_NEAR(est.beta_avg, 1.5 * std::log(2.0), 1e-12);
}

TEST(AmplificationProxy, TooShort) {
  try {
    amplification_proxy(MatrixXd::Ones(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSteps);
  }
}

TEST(AmplificationProxy, ZeroNumeratorStaysFinite) {
  MatrixXd s(3, 1);
  s << 0, 1, 1;
  const auto est = amplification_proxy(s);
  EXPECT_TRUE(std::isfinite(est.beta_avg));
  EXPECT_NEAR(est.per_step[0], kDefaultProxyFloor, 1e-20);
}
