#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "halluguard/spectral.hpp"

namespace halluguard {

struct SubmultiplicativityReport {
  double lhs = 0.0;              // ||J_T ... J_1||_2
  double rhs_product = 0.0;      // prod_t ||J_t||_2
  double rhs_sigma_max_T = 0.0;  // (max_t ||J_t||_2)^T
  bool holds = false;
  double gap = 0.0;  // rhs_product - lhs
};

// Dense-SVD evaluation of ||prod J_t|| <= prod ||J_t|| <= sigma_max^T with a
// 1e-9 relative tolerance.
SubmultiplicativityReport verify_submultiplicativity(const std::vector<Eigen::MatrixXd>& jacobians);

struct DetLowerBoundReport {
  double lambda_min = 0.0;
  double lower_bound = 0.0;  // det / lambda_bar^(K-1)
  bool holds = false;
  double slack = 0.0;  // lambda_min - lower_bound
};

// Error(kPrecondition) when lambda_bar is below the top eigenvalue.
DetLowerBoundReport verify_det_lower_bound(const Spectrum& spectrum, double lambda_bar);

inline constexpr double kDefaultProjectorConstant = 2.0;

struct ProjectorDeviation {
  double deviation = 0.0;  // ||P~ u - P u||
  double kappa = 0.0;      // condition number of Phi^T Phi
  double lambda_min = 0.0;
  double bound_rhs = 0.0;  // C_Pi kappa ||dPhi||_2 / sqrt(lambda_min) ||u||
  bool holds = false;
};

// Phi must have full column rank (Error(kPrecondition)); a perturbation that
// drops the rank raises Error(kDegeneratePerturbation).
ProjectorDeviation projector_deviation(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& delta_phi,
                                       const Eigen::VectorXd& target,
                                       double c_pi = kDefaultProjectorConstant);

struct KappaScalingConfig {
  std::vector<double> kappa_grid{10.0, 100.0, 1000.0};
  double delta_norm = 1e-3;
  int trials = 100;
  std::uint64_t seed = 0x6b617070;
  int ambient_dim = 8;
  int rank = 4;
};

struct KappaScalingResult {
  std::vector<double> kappa;
  std::vector<double> max_sq_deviation;
  std::vector<double> max_sq_bound;  // squared bound_rhs for the same trials
  double slope = 0.0;                // least squares, log max_sq_deviation vs log kappa
  double bound_slope = 0.0;
};

// Phi = U diag(sqrt(kappa), 1, ..., 1) V^T with seeded random orthonormal
// U, V; each trial perturbs along the smallest right singular vector in a
// direction orthogonal to range(Phi). Needs >= 3 grid points spanning at
// least a decade (Error(kPrecondition)).
KappaScalingResult kappa_scaling_experiment(const KappaScalingConfig& config);

struct FreedmanConfig {
  std::vector<int> rollouts{1, 2, 4, 8, 16, 32, 64};
  double eps = 4.0;
  // Envelope constant; <= 0 means fit the smallest C that dominates.
  double C = 0.0;
  int horizon = 16;
  double increment_bound = 1.0;
  int trials = 10000;
  std::uint64_t seed = 0xf4eed;
};

struct FreedmanResult {
  std::vector<int> rollouts;
  std::vector<double> exceedance;  // P(|mean_k M_k| > eps)
  std::vector<double> envelope;    // K exp(-K eps^2 / C)
  double C = 0.0;
  double azuma_C = 0.0;  // 2 n c^2, the analytic constant
  bool monotone = false;  // non-increasing up to Monte-Carlo slack
  bool bounded = false;   // exceedance <= envelope everywhere
};

// Each rollout is a +/- c random walk of `horizon` steps; the deviation is
// the average of the K endpoint values.
FreedmanResult freedman_sanity(const FreedmanConfig& config);

}  // namespace halluguard
