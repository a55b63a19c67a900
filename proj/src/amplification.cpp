#include "halluguard/amplification.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "halluguard/error.hpp"

namespace halluguard {

const char* amplification_mode_name(AmplificationMode mode) {
  return mode == AmplificationMode::kExactJacobian ? "exact-jacobian" : "state-delta-proxy";
}

namespace {

Eigen::VectorXd random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  return v / v.norm();
}

void check_adjoint(const StepOperator& jvp, const StepOperator& vjp, int t, int dim,
                   std::mt19937_64& rng, const PowerIterationOptions& opt) {
  for (int p = 0; p < opt.adjoint_probes; ++p) {
    const Eigen::VectorXd v = random_unit(rng, dim);
    const Eigen::VectorXd u = random_unit(rng, dim);
    const Eigen::VectorXd jv = jvp(t, v);
    const Eigen::VectorXd jtu = vjp(t, u);
    if (jv.size() != dim || jtu.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "oracle returned a vector of the wrong length at step " + std::to_string(t));
    }
    const double lhs = jv.dot(u);
    const double rhs = v.dot(jtu);
    const double scale = std::max({jv.norm(), jtu.norm(), 1.0});
    if (std::abs(lhs - rhs) > opt.adjoint_tol * scale) {
      throw Error(ErrorCode::kInconsistentOracle,
                  "adjoint identity fails at step " + std::to_string(t) + ": <Jv,u>=" +
                      std::to_string(lhs) + " vs <v,J^T u>=" + std::to_string(rhs));
    }
  }
}

double spectral_norm(const StepOperator& jvp, const StepOperator& vjp, int t, int dim,
                     std::mt19937_64& rng, const PowerIterationOptions& opt) {
  Eigen::VectorXd v = random_unit(rng, dim);
  double mu = 0.0;
  double residual = 0.0;
  for (int it = 0; it < opt.max_iters; ++it) {
    const Eigen::VectorXd w = vjp(t, jvp(t, v));
    const double prev = mu;
    mu = v.dot(w);  // Rayleigh quotient of J^T J, = |J v|^2
    if (mu <= 0.0) return 0.0;
    residual = std::abs(mu - prev) / mu;
    if (it > 0 && residual <= opt.tol) return std::sqrt(mu);
    v = w / w.norm();
  }
  throw ConvergenceError(t, std::sqrt(std::max(mu, 0.0)), residual);
}

}  // namespace

AmplificationEstimate amplification_exact(const StepOperator& jvp, const StepOperator& vjp,
                                          int steps, int dim,
                                          const PowerIterationOptions& options) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one step");
  if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "dimension must be positive");

  std::mt19937_64 rng(options.seed);
  AmplificationEstimate est;
  est.mode = AmplificationMode::kExactJacobian;
  est.sigma_max = 0.0;
  double log_sum = 0.0;
  for (int t = 0; t < steps; ++t) {
    check_adjoint(jvp, vjp, t, dim, rng, options);
    const double sigma = spectral_norm(jvp, vjp, t, dim, rng, options);
    if (!(sigma > 0.0)) {
      throw Error(ErrorCode::kDegeneratePerturbation,
                  "step Jacobian " + std::to_string(t) + " is zero");
    }
    est.per_step.push_back(sigma);
    est.sigma_max = std::max(est.sigma_max, sigma);
    log_sum += std::log(sigma);
  }
  est.beta_avg = log_sum / steps;
  return est;
}

AmplificationEstimate amplification_proxy(const Eigen::MatrixXd& states, double floor) {
  if (states.rows() < 3) {
    throw Error(ErrorCode::kInsufficientSteps,
                "state-delta proxy needs T >= 3, got " + std::to_string(states.rows()));
  }
  if (!(floor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "floor must be positive");

  std::vector<double> delta(static_cast<std::size_t>(states.rows() - 1));
  for (Eigen::Index t = 0; t + 1 < states.rows(); ++t) {
    delta[static_cast<std::size_t>(t)] = (states.row(t + 1) - states.row(t)).norm();
  }

  AmplificationEstimate est;
  est.mode = AmplificationMode::kStateDeltaProxy;
  if (std::all_of(delta.begin(), delta.end(), [&](double d) { return d < floor; })) {
    est.per_step.assign(delta.size() - 1, 1.0);
    return est;
  }
  est.sigma_max = 0.0;
  double log_sum = 0.0;
  for (std::size_t t = 1; t < delta.size(); ++t) {
    const double ratio = std::max(delta[t], floor) / std::max(delta[t - 1], floor);
    est.per_step.push_back(ratio);
    est.sigma_max = std::max(est.sigma_max, ratio);
    log_sum += std::log(ratio);
  }
  est.beta_avg = log_sum / static_cast<double>(est.per_step.size());
  return est;
}

}  // namespace halluguard
