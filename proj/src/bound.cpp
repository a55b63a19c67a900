#include "halluguard/bound.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "halluguard/csv.hpp"
#include "halluguard/error.hpp"

namespace halluguard {

namespace {

enum class Range { kNonNegative, kPositive, kAboveOne };

struct RealField {
  const char* name;
  double BoundParams::*member;
  Range range;
};

struct IntField {
  const char* name;
  int BoundParams::*member;
  int min;
};

constexpr RealField kRealFields[] = {
    {"inf_approx", &BoundParams::inf_approx, Range::kNonNegative},
    {"k_pt", &BoundParams::k_pt, Range::kNonNegative},
    {"complexity_PL", &BoundParams::complexity_PL, Range::kAboveOne},
    {"k", &BoundParams::k, Range::kNonNegative},
    {"eps_mismatch", &BoundParams::eps_mismatch, Range::kNonNegative},
    {"signal_k", &BoundParams::signal_k, Range::kPositive},
    {"L_size", &BoundParams::L_size, Range::kPositive},
    {"eps", &BoundParams::eps, Range::kPositive},
    {"C", &BoundParams::C, Range::kPositive},
    {"alpha_amp", &BoundParams::alpha_amp, Range::kPositive},
    {"beta", &BoundParams::beta, Range::kNonNegative},
    {"s", &BoundParams::s, Range::kPositive},
    {"R_s", &BoundParams::R_s, Range::kPositive},
    {"lambda_bar", &BoundParams::lambda_bar, Range::kPositive},
    {"lambda_lower", &BoundParams::lambda_lower, Range::kPositive},
    {"decay_alpha", &BoundParams::decay_alpha, Range::kAboveOne},
    {"H_star", &BoundParams::H_star, Range::kPositive},
    {"rho", &BoundParams::rho, Range::kPositive},
    {"L_Phi", &BoundParams::L_Phi, Range::kPositive},
    {"c_v", &BoundParams::c_v, Range::kPositive},
    {"C_Pi", &BoundParams::C_Pi, Range::kPositive},
    {"C_d", &BoundParams::C_d, Range::kPositive},
    {"c_d", &BoundParams::c_d, Range::kPositive},
    {"sigma_delta", &BoundParams::sigma_delta, Range::kPositive},
};

constexpr IntField kIntFields[] = {
    {"K_rollouts", &BoundParams::K_rollouts, 1},
    {"T", &BoundParams::T, 0},
};

const char* range_text(Range r) {
  switch (r) {
    case Range::kNonNegative: return ">= 0";
    case Range::kPositive: return "> 0";
    case Range::kAboveOne: return "> 1";
  }
  return "";
}

bool in_range(double v, Range r) {
  if (!std::isfinite(v)) return false;
  switch (r) {
    case Range::kNonNegative: return v >= 0.0;
    case Range::kPositive: return v > 0.0;
    case Range::kAboveOne: return v > 1.0;
  }
  return false;
}

}  // namespace

void validate_params(const BoundParams& p) {
  for (const auto& f : kRealFields) {
    if (!in_range(p.*f.member, f.range)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("field '") + f.name + "' must be finite and " + range_text(f.range));
    }
  }
  for (const auto& f : kIntFields) {
    if (p.*f.member < f.min) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("field '") + f.name + "' must be >= " + std::to_string(f.min));
    }
  }
  if (p.lambda_bar < p.lambda_lower) {
    throw Error(ErrorCode::kInvalidArgument, "field 'lambda_bar' must be >= lambda_lower");
  }
}

const std::set<std::string>& bound_param_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k;
    for (const auto& f : kRealFields) k.insert(f.name);
    for (const auto& f : kIntFields) k.insert(f.name);
    return k;
  }();
  return keys;
}

BoundParams parse_bound_params(const KeyValueFile& kv) {
  kv.reject_unknown(bound_param_keys());
  BoundParams p;
  for (const auto& f : kRealFields) p.*f.member = kv.get_double(f.name, p.*f.member);
  for (const auto& f : kIntFields) {
    const long long v = kv.get_int(f.name, p.*f.member);
    if (v < f.min || v > 1'000'000) {
      throw Error(ErrorCode::kParse, std::string("field '") + f.name + "' out of range");
    }
    p.*f.member = static_cast<int>(v);
  }
  try {
    validate_params(p);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return p;
}

void write_bound_params(std::ostream& out, const BoundParams& p) {
  for (const auto& f : kRealFields) out << f.name << " = " << csv::format_number(p.*f.member) << '\n';
  for (const auto& f : kIntFields) out << f.name << " = " << p.*f.member << '\n';
}

double data_term(const BoundParams& p) {
  if (!(p.signal_k > 0.0)) throw Error(ErrorCode::kInvalidArgument, "signal_k must be > 0");
  validate_params(p);
  const double multiplier = 1.0 + p.k_pt * std::log(p.complexity_PL) + p.k * p.eps_mismatch / p.signal_k;
  return multiplier * p.inf_approx;
}

double reasoning_term(const BoundParams& p) {
  validate_params(p);
  const double concentration = std::exp(-static_cast<double>(p.K_rollouts) * p.eps * p.eps / p.C);
  return p.L_size * concentration * p.alpha_amp * std::expm1(p.beta * static_cast<double>(p.T));
}

double risk_bound(const BoundParams& p) { return data_term(p) + reasoning_term(p); }

BoundParams with_T(BoundParams p, int T) {
  p.T = T;
  return p;
}

std::vector<BoundRow> simulate_empirical_risk(const BoundParams& p, double noise_std,
                                              std::uint64_t seed, const std::vector<int>& T_range) {
  if (!(noise_std >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_std must be >= 0");
  if (T_range.empty()) throw Error(ErrorCode::kInvalidArgument, "empty T range");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<BoundRow> rows;
  for (int T : T_range) {
    if (T < 0) throw Error(ErrorCode::kInvalidArgument, "T must be >= 0");
    const BoundParams q = with_T(p, T);
    BoundRow r;
    r.T = T;
    r.data = data_term(q);
    r.reasoning = reasoning_term(q);
    r.bound = r.data + r.reasoning;
    const double g1 = noise_std * normal(rng);
    const double g2 = noise_std * normal(rng);
    const double e = r.data * (1.0 - std::abs(g1)) + r.reasoning * (1.0 - std::abs(g2));
    r.empirical = std::clamp(e, 0.0, r.bound);
    rows.push_back(r);
  }
  return rows;
}

std::optional<int> decomposition_crossover(const BoundParams& p, const std::vector<int>& T_range) {
  if (!std::is_sorted(T_range.begin(), T_range.end())) {
    throw Error(ErrorCode::kInvalidArgument, "T range must be sorted");
  }
  const double d = data_term(p);
  for (int T : T_range) {
    if (reasoning_term(with_T(p, T)) > d) return T;
  }
  return std::nullopt;
}

void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows) {
  csv::write_row(out, {"T", "data_term", "reasoning_term", "bound", "empirical"});
  for (const auto& r : rows) {
    csv::write_row(out, {std::to_string(r.T), csv::format_number(r.data),
                         csv::format_number(r.reasoning), csv::format_number(r.bound),
                         csv::format_number(r.empirical)});
  }
}

}  // namespace halluguard
