#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace halluguard {

enum class AmplificationMode { kExactJacobian, kStateDeltaProxy };

const char* amplification_mode_name(AmplificationMode mode);

struct AmplificationEstimate {
  double sigma_max = 1.0;
  double beta_avg = 0.0;  // mean over steps of log(per-step amplification)
  AmplificationMode mode = AmplificationMode::kStateDeltaProxy;
  std::vector<double> per_step;
};

// (step t, vector) -> J_t * v  or  J_t^T * u.
using StepOperator = std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)>;

struct PowerIterationOptions {
  int max_iters = 20;
  double tol = 1e-6;  // relative change of the Rayleigh quotient of J^T J
  std::uint64_t seed = 0x5eed;
  int adjoint_probes = 3;
  double adjoint_tol = 1e-6;
};

// Spectral norm of J_t for t in [0, steps) by power iteration on J_t^T J_t.
// Throws Error(kInconsistentOracle) when <J v, u> != <v, J^T u> on random
// probes and ConvergenceError when a step does not converge in max_iters.
AmplificationEstimate amplification_exact(const StepOperator& jvp, const StepOperator& vjp,
                                          int steps, int dim,
                                          const PowerIterationOptions& options = {});

inline constexpr double kDefaultProxyFloor = 1e-8;

// Bundle-only fallback from consecutive hidden-state deltas:
//   a_t = max(|h_{t+1} - h_t|, floor) / max(|h_t - h_{t-1}|, floor).
// The numerator is floored too so log(a_t) stays finite. Needs T >= 3.
AmplificationEstimate amplification_proxy(const Eigen::MatrixXd& step_states,
                                          double floor = kDefaultProxyFloor);

}  // namespace halluguard
