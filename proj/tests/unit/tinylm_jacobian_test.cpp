#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "halluguard/error.hpp"
#include "halluguard/tinylm/jacobian.hpp"
#include "halluguard/tinylm/sample.hpp"
#include "tiny_models.hpp"

using namespace halluguard;
using namespace halluguard::tinylm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0, 1);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

const std::vector<TokenId> kTokens{1, 4, 7, 3, 9, 5, 12, 6, 8};

}  // namespace

TEST(StepJacobian, ReplayConsistency) {
  const TinyLM m = hgtest::random_model(15, 16, 3);
  const StepJacobian j(m, kTokens);
  EXPECT_EQ(j.positions(), static_cast<int>(kTokens.size()));
  for (int p = 1; p < j.positions(); ++p) {
    EXPECT_TRUE(j.step_map(p, j.state(p - 1)).isApprox(j.state(p), 1e-12)) << p;
  }
  EXPECT_THROW(j.jvp(0, VectorXd::Zero(16)), Error);
  EXPECT_THROW(j.jvp(99, VectorXd::Zero(16)), Error);
}

TEST(StepJacobian, Linearity) {
  const TinyLM m = hgtest::random_model(15, 16, 3);
  const StepJacobian j(m, kTokens);
  std::mt19937_64 rng(1);
  EXPECT_EQ(j.jvp(3, VectorXd::Zero(16)).norm(), 0.0);
  EXPECT_EQ(j.vjp(3, VectorXd::Zero(16)).norm(), 0.0);
  const VectorXd v = random_vec(rng, 16), w = random_vec(rng, 16);
  EXPECT_LE((j.jvp(4, 2.5 * v) - 2.5 * j.jvp(4, v)).norm(), 1e-9 * j.jvp(4, v).norm());
  EXPECT_LE((j.jvp(4, v + w) - j.jvp(4, v) - j.jvp(4, w)).norm(), 1e-9 * j.jvp(4, v).norm());
}

TEST(StepJacobian, AdjointIdentity) {
  const TinyLM m = hgtest::random_model(15, 16, 3);
  const StepJacobian j(m, kTokens);
  std::mt19937_64 rng(2);
  for (int probe = 0; probe < 100; ++probe) {
    const int p = 1 + static_cast<int>(rng() % (kTokens.size() - 1));
    const VectorXd v = random_vec(rng, 16), u = random_vec(rng, 16);
    const double lhs = j.jvp(p, v).dot(u);
    const double rhs = v.dot(j.vjp(p, u));
    EXPECT_NEAR(lhs, rhs, 1e-6 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(StepJacobian, DenseMatchesCentralDifferences) {
  for (int layers : {2, 3, 4}) {
    const TinyLM m = hgtest::random_model(15, 32, layers, 3 + layers);
    const StepJacobian j(m, kTokens);
    for (int p = 1; p < j.positions(); ++p) {
      const MatrixXd dense = j.dense(p);
      MatrixXd fd(32, 32);
      const VectorXd h0 = j.state(p - 1);
      const double eps = 1e-5;
      for (int c = 0; c < 32; ++c) {
        VectorXd up = h0, down = h0;
        up(c) += eps;
        down(c) -= eps;
        fd.col(c) = (j.step_map(p, up) - j.step_map(p, down)) / (2 * eps);
      }
      EXPECT_LE((dense - fd).norm(), 1e-4 * fd.norm()) << "layers " << layers << " p " << p;
    }
  }
}

TEST(ExactAmplification, MatchesDenseSvd) {
  const TinyLM m = hgtest::random_model(15, 32, 4, 11);
  const std::vector<TokenId> context{1, 4, 7, 3};
  const std::vector<TokenId> generated{9, 5, 12, 2};
  PowerIterationOptions opt;
  opt.max_iters = 2000;
  opt.tol = 1e-12;
  const auto est = exact_amplification(m, context, generated, opt);
  ASSERT_EQ(est.per_step.size(), generated.size());
  std::vector<TokenId> all = context;
  all.insert(all.end(), generated.begin(), generated.end() - 1);
  const StepJacobian j(m, all);
  for (std::size_t t = 0; t < generated.size(); ++t) {
    const int p = static_cast<int>(context.size()) - 1 + static_cast<int>(t);
    const double s = Eigen::JacobiSVD<MatrixXd>(j.dense(p)).singularValues()(0);
    EXPECT_NEAR(est.per_step[t], s, 1e-4 * s);
  }
  EXPECT_THROW(exact_amplification(m, {1}, generated), Error);
}

TEST(ExactAmplification, BundleAmplifier) {
  const auto& m = hgtest::small_addition_model();
  const Vocabulary vocab = Vocabulary::arithmetic();
  DecodeConfig d;
  d.k = 3;
  d.temperature = 1.0;
  const auto b = sample_k(m, vocab, "p", "04+05=", d);
  PowerIterationOptions opt;
  opt.max_iters = 500;
  const ExactAmplifier amp = make_exact_amplifier(m, vocab, b, opt);
  for (std::size_t g = 0; g < b.generations.size(); ++g) {
    const auto est = amp(g);
    EXPECT_EQ(est.per_step.size(), b.generations[g].tokens.size());
    EXPECT_GT(est.sigma_max, 0.0);
    EXPECT_LE(est.beta_avg, std::log(est.sigma_max) + 1e-12);
  }
}
