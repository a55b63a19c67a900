#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>

#include "halluguard/amplification.hpp"
#include "halluguard/bundle.hpp"
#include "halluguard/clipping.hpp"
#include "halluguard/spectral.hpp"

namespace halluguard {

struct HalluGuardConfig {
  double ridge = kDefaultRidge;
  bool normalize = true;
  AmplificationMode amp_mode = AmplificationMode::kStateDeltaProxy;
  double proxy_floor = kDefaultProxyFloor;
  // Replace log(sigma_max) by the per-step average beta_avg.
  bool use_beta_avg = false;
  bool clip = true;
  double clip_quantile = kDefaultClipQuantile;
  std::size_t bank_capacity = kDefaultBankCapacity;
};

// The three additive terms: log det(K), log sigma_max, log kappa(K)^2.
struct HalluGuardComponents {
  double log_det = 0.0;
  double log_sigma_max = 0.0;
  double log_kappa_sq = 0.0;

  std::array<double, 3> as_array() const { return {log_det, log_sigma_max, log_kappa_sq}; }
};

inline constexpr std::array<const char*, 3> kComponentNames = {"log_det", "log_sigma_max",
                                                               "log_kappa_sq"};

// Per-component z-normalization fitted on a validation split.
struct CalibrationStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};
};

// Supplies the exact-Jacobian estimate for generation g of the bundle being
// scored (the core itself never touches a model).
using ExactAmplifier = std::function<AmplificationEstimate(std::size_t)>;

// Per-bundle sigma_max is the maximum over generations. With clipping on,
// `bank` receives this bundle's vectors before thresholds are taken; a
// bundle-local bank is used when none is supplied.
HalluGuardComponents halluguard_components(const TrajectoryBundle& bundle,
                                           const HalluGuardConfig& config = {},
                                           MemoryBank* bank = nullptr,
                                           const ExactAmplifier* exact = nullptr);

// Raw: log_det + log_sigma_max - log_kappa_sq. Calibrated: the same sum over
// z-scores. Higher means more reliable. Throws Error(kDegenerateCalibration)
// for a non-positive std and Error(kNonFinite) for non-finite components.
double halluguard_score(const HalluGuardComponents& components,
                        const std::optional<CalibrationStats>& calibration = std::nullopt);

}  // namespace halluguard
