#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "halluguard/keyvalue.hpp"

namespace halluguard {

// Every constant of the hallucination risk bound that cannot be measured
// from a bundle. Field names double as keys of the key=value params file.
struct BoundParams {
  // Data-driven term.
  double inf_approx = 0.5;
  double k_pt = 1.0;
  double complexity_PL = 2.718281828459045;
  double k = 2.0;
  double eps_mismatch = 1.0;
  double signal_k = 4.0;
  // Reasoning-driven term.
  double L_size = 2.0;
  int K_rollouts = 1;
  double eps = 0.8325546111576977;  // eps^2 / C = ln 2 with C = 1
  double C = 1.0;
  double alpha_amp = 1.0;
  double beta = 0.6931471805599453;
  int T = 3;
  // Source condition and spectral envelope.
  double s = 1.0;
  double R_s = 1.0;
  double lambda_bar = 1.0;
  double lambda_lower = 0.01;
  double decay_alpha = 2.0;
  double H_star = 1.0;
  double rho = 1.0;
  double L_Phi = 1.0;
  double c_v = 1.0;
  double C_Pi = 2.0;
  double C_d = 1.0;
  double c_d = 1.0;
  double sigma_delta = 1.0;
};

// Throws Error(kInvalidArgument) naming the first out-of-range field.
void validate_params(const BoundParams& p);

// Missing keys keep their defaults; unknown keys and malformed values throw
// Error(kParse) naming the field.
BoundParams parse_bound_params(const KeyValueFile& kv);
const std::set<std::string>& bound_param_keys();
void write_bound_params(std::ostream& out, const BoundParams& p);

// (1 + k_pt log O(P,L) + k eps_mismatch / signal_k) * inf_approx
double data_term(const BoundParams& p);

// |L| exp(-K eps^2 / C) alpha (e^{beta T} - 1)
double reasoning_term(const BoundParams& p);

double risk_bound(const BoundParams& p);

BoundParams with_T(BoundParams p, int T);

struct BoundRow {
  int T = 0;
  double data = 0.0;
  double reasoning = 0.0;
  double bound = 0.0;
  double empirical = 0.0;
};

// Perturbs the two terms multiplicatively by (1 - |g|), g ~ N(0, noise_std^2)
// drawn per T, then clamps to [0, bound]. noise_std = 0 reproduces the
// bound exactly.
std::vector<BoundRow> simulate_empirical_risk(const BoundParams& p, double noise_std,
                                              std::uint64_t seed, const std::vector<int>& T_range);

// Smallest T in the (sorted) range whose reasoning term exceeds the data term.
std::optional<int> decomposition_crossover(const BoundParams& p, const std::vector<int>& T_range);

void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows);

}  // namespace halluguard
