#include "halluguard/score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "halluguard/error.hpp"

namespace halluguard {

HalluGuardComponents halluguard_components(const TrajectoryBundle& bundle,
                                           const HalluGuardConfig& config, MemoryBank* bank,
                                           const ExactAmplifier* exact) {
  const ValidationReport report = validate_bundle(bundle);
  if (!report.ok) {
    throw Error(ErrorCode::kInvalidBundle, report.violations.front());
  }

  const std::size_t d = bundle.embed_dim;
  Eigen::MatrixXd embeddings = bundle.embedding_matrix();
  std::vector<std::optional<Eigen::MatrixXd>> states(bundle.k());
  for (std::size_t g = 0; g < bundle.k(); ++g) {
    if (bundle.generations[g].has_states()) states[g] = bundle.generations[g].states_matrix(d);
  }

  if (config.clip) {
    std::optional<MemoryBank> local;
    if (bank == nullptr) {
      local.emplace(d, config.bank_capacity);
      bank = &*local;
    }
    bank->update(embeddings);
    for (const auto& s : states) {
      if (s) bank->update(*s);
    }
    const ClipThresholds th = compute_thresholds(*bank, config.clip_quantile);
    embeddings = clip_features(embeddings, th).clipped;
    for (auto& s : states) {
      if (s) s = clip_features(*s, th).clipped;
    }
  }

  const Spectrum spectrum = spectral_summary(build_gram(embeddings, config.ridge, config.normalize));

  double log_sigma = -std::numeric_limits<double>::infinity();
  double beta = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t g = 0; g < bundle.k(); ++g) {
    AmplificationEstimate est;
    if (config.amp_mode == AmplificationMode::kExactJacobian) {
      if (exact == nullptr) {
        throw Error(ErrorCode::kPrecondition, "exact amplification needs a model handle");
      }
      est = (*exact)(g);
    } else {
      if (!states[g] || states[g]->rows() < 3) continue;
      est = amplification_proxy(*states[g], config.proxy_floor);
    }
    log_sigma = std::max(log_sigma, std::log(est.sigma_max));
    beta = std::max(beta, est.beta_avg);
    any = true;
  }
  if (!any) {
    throw Error(ErrorCode::kInsufficientSteps,
                "state-delta proxy needs step_states with T >= 3 on at least one generation");
  }

  HalluGuardComponents c;
  c.log_det = spectrum.log_det;
  c.log_sigma_max = config.use_beta_avg ? beta : log_sigma;
  c.log_kappa_sq = 2.0 * std::log(spectrum.kappa);
  return c;
}

double halluguard_score(const HalluGuardComponents& components,
                        const std::optional<CalibrationStats>& calibration) {
  const auto x = components.as_array();
  for (std::size_t i = 0; i < 3; ++i) {
    if (!std::isfinite(x[i])) {
      throw Error(ErrorCode::kNonFinite,
                  std::string("component ") + kComponentNames[i] + " is not finite");
    }
  }
  if (!calibration) return x[0] + x[1] - x[2];

  std::array<double, 3> z{};
  for (std::size_t i = 0; i < 3; ++i) {
    const double s = calibration->std[i];
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kDegenerateCalibration,
                  std::string("calibration std for ") + kComponentNames[i] + " is not positive");
    }
    z[i] = (x[i] - calibration->mean[i]) / s;
  }
  return z[0] + z[1] - z[2];
}

}  // namespace halluguard
