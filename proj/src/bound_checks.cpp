#include "halluguard/bound_checks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "halluguard/error.hpp"
#include "halluguard/seed.hpp"

namespace halluguard {

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Eigen::MatrixXd random_orthonormal(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

SubmultiplicativityReport verify_submultiplicativity(const std::vector<Eigen::MatrixXd>& jacobians) {
  if (jacobians.empty()) throw Error(ErrorCode::kInvalidArgument, "need at least one Jacobian");
  const Eigen::Index n = jacobians.front().rows();
  Eigen::MatrixXd product = Eigen::MatrixXd::Identity(n, n);
  double rhs_product = 1.0;
  double sigma_max = 0.0;
  for (std::size_t t = 0; t < jacobians.size(); ++t) {
    const auto& j = jacobians[t];
    if (j.rows() != n || j.cols() != n) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "Jacobian " + std::to_string(t) + " is not " + std::to_string(n) + "x" +
                      std::to_string(n));
    }
    product = j * product;
    const double s = spectral_norm(j);
    rhs_product *= s;
    sigma_max = std::max(sigma_max, s);
  }
  SubmultiplicativityReport r;
  r.lhs = spectral_norm(product);
  r.rhs_product = rhs_product;
  r.rhs_sigma_max_T = std::pow(sigma_max, static_cast<double>(jacobians.size()));
  constexpr double tol = 1e-9;
  r.holds = r.lhs <= r.rhs_product * (1.0 + tol) &&
            r.rhs_product <= r.rhs_sigma_max_T * (1.0 + tol);
  r.gap = r.rhs_product - r.lhs;
  return r;
}

DetLowerBoundReport verify_det_lower_bound(const Spectrum& spectrum, double lambda_bar) {
  if (spectrum.eigenvalues.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty spectrum");
  if (lambda_bar < spectrum.lambda_max() * (1.0 - 1e-12)) {
    throw Error(ErrorCode::kPrecondition, "lambda_bar is below the largest eigenvalue");
  }
  const auto k = static_cast<double>(spectrum.eigenvalues.size());
  DetLowerBoundReport r;
  r.lambda_min = spectrum.lambda_min();
  r.lower_bound = std::exp(spectrum.log_det - (k - 1.0) * std::log(lambda_bar));
  r.slack = r.lambda_min - r.lower_bound;
  r.holds = r.slack >= -1e-9 * std::max(1.0, r.lower_bound);
  return r;
}

ProjectorDeviation projector_deviation(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& delta_phi,
                                       const Eigen::VectorXd& target, double c_pi) {
  if (phi.rows() != delta_phi.rows() || phi.cols() != delta_phi.cols() ||
      phi.rows() != target.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "Phi, dPhi and u* have inconsistent shapes");
  }
  if (phi.cols() == 0 || phi.cols() > phi.rows()) {
    throw Error(ErrorCode::kPrecondition, "Phi must be tall with at least one column");
  }
  const Eigen::Index r = phi.cols();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  if (!(s(r - 1) > 1e-10 * s(0))) {
    throw Error(ErrorCode::kPrecondition, "Phi does not have full column rank");
  }
  const Eigen::MatrixXd perturbed = phi + delta_phi;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_p(perturbed, Eigen::ComputeThinU);
  const auto& sp = svd_p.singularValues();
  if (!(sp(r - 1) > 1e-10 * sp(0))) {
    throw Error(ErrorCode::kDegeneratePerturbation, "Phi + dPhi loses column rank");
  }
  const Eigen::MatrixXd& q = svd.matrixU();
  const Eigen::MatrixXd& qp = svd_p.matrixU();
  const Eigen::VectorXd pu = q * (q.transpose() * target);
  const Eigen::VectorXd ppu = qp * (qp.transpose() * target);

  ProjectorDeviation out;
  out.deviation = (ppu - pu).norm();
  out.lambda_min = s(r - 1) * s(r - 1);
  out.kappa = (s(0) * s(0)) / out.lambda_min;
  out.bound_rhs = c_pi * out.kappa * spectral_norm(delta_phi) / std::sqrt(out.lambda_min) * target.norm();
  out.holds = out.deviation <= out.bound_rhs * (1.0 + 1e-12);
  return out;
}

KappaScalingResult kappa_scaling_experiment(const KappaScalingConfig& config) {
  const auto& grid = config.kappa_grid;
  if (grid.size() < 3) throw Error(ErrorCode::kPrecondition, "kappa grid needs >= 3 points");
  const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
  if (!(*lo >= 1.0) || !(*hi >= 10.0 * *lo)) {
    throw Error(ErrorCode::kPrecondition, "kappa grid must be >= 1 and span at least one decade");
  }
  if (config.trials < 1 || config.rank < 1 || config.ambient_dim <= config.rank) {
    throw Error(ErrorCode::kInvalidArgument, "need trials >= 1 and ambient_dim > rank >= 1");
  }
  if (!(config.delta_norm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "delta_norm must be > 0");

  const int d = config.ambient_dim;
  const int r = config.rank;
  KappaScalingResult out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(g)));
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0, worst_bound = 0.0;
    for (int trial = 0; trial < config.trials; ++trial) {
      const Eigen::MatrixXd basis = random_orthonormal(d, d, rng);
      const Eigen::MatrixXd u = basis.leftCols(r);
      const Eigen::MatrixXd complement = basis.rightCols(d - r);
      const Eigen::MatrixXd v = random_orthonormal(r, r, rng);
      Eigen::VectorXd sv = Eigen::VectorXd::Ones(r);
      sv(0) = std::sqrt(grid[g]);
      const Eigen::MatrixXd phi = u * sv.asDiagonal() * v.transpose();

      // Smallest right singular direction, pushed out of range(Phi).
      Eigen::VectorXd w(d - r);
      for (int i = 0; i < d - r; ++i) w(i) = normal(rng);
      const Eigen::VectorXd out_dir = complement * w.normalized();
      const Eigen::MatrixXd delta = config.delta_norm * out_dir * v.col(r - 1).transpose();

      Eigen::VectorXd target(d);
      for (int i = 0; i < d; ++i) target(i) = normal(rng);
      target.normalize();

      const ProjectorDeviation pd = projector_deviation(phi, delta, target);
      worst = std::max(worst, pd.deviation * pd.deviation);
      worst_bound = std::max(worst_bound, pd.bound_rhs * pd.bound_rhs);
    }
    out.kappa.push_back(grid[g]);
    out.max_sq_deviation.push_back(worst);
    out.max_sq_bound.push_back(worst_bound);
  }
  std::vector<double> lx, ly, lb;
  for (std::size_t i = 0; i < out.kappa.size(); ++i) {
    lx.push_back(std::log(out.kappa[i]));
    ly.push_back(std::log(std::max(out.max_sq_deviation[i], std::numeric_limits<double>::min())));
    lb.push_back(std::log(out.max_sq_bound[i]));
  }
  out.slope = least_squares_slope(lx, ly);
  out.bound_slope = least_squares_slope(lx, lb);
  return out;
}

FreedmanResult freedman_sanity(const FreedmanConfig& config) {
  if (config.rollouts.empty()) throw Error(ErrorCode::kInvalidArgument, "empty rollout grid");
  if (config.horizon < 1 || config.horizon > 64 || config.trials < 1) {
    throw Error(ErrorCode::kInvalidArgument, "horizon must lie in [1, 64] and trials >= 1");
  }
  if (!(config.eps > 0.0) || !(config.increment_bound > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "eps and increment bound must be > 0");
  }
  const int n = config.horizon;
  const double c = config.increment_bound;
  const std::uint64_t mask = n == 64 ? ~0ULL : ((1ULL << n) - 1);

  FreedmanResult out;
  out.rollouts = config.rollouts;
  out.azuma_C = 2.0 * n * c * c;
  for (std::size_t gi = 0; gi < config.rollouts.size(); ++gi) {
    const int k = config.rollouts[gi];
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "rollout counts must be >= 1");
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(k)));
    long long hits = 0;
    for (int trial = 0; trial < config.trials; ++trial) {
      long long total = 0;
      for (int j = 0; j < k; ++j) {
        const int ups = std::popcount(rng() & mask);
        total += 2LL * ups - n;
      }
      const double mean = c * static_cast<double>(total) / static_cast<double>(k);
      if (std::abs(mean) > config.eps) ++hits;
    }
    out.exceedance.push_back(static_cast<double>(hits) / config.trials);
  }

  if (config.C > 0.0) {
    out.C = config.C;
  } else {
    double fitted = 0.0;
    for (std::size_t i = 0; i < out.rollouts.size(); ++i) {
      const double p = out.exceedance[i];
      const double k = out.rollouts[i];
      if (p <= 0.0) continue;
      if (p >= k) {
        fitted = std::numeric_limits<double>::infinity();
        break;
      }
      fitted = std::max(fitted, k * config.eps * config.eps / std::log(k / p));
    }
    out.C = fitted > 0.0 ? fitted : out.azuma_C;
  }

  out.monotone = true;
  out.bounded = true;
  for (std::size_t i = 0; i < out.rollouts.size(); ++i) {
    const double k = out.rollouts[i];
    out.envelope.push_back(k * std::exp(-k * config.eps * config.eps / out.C));
    if (out.exceedance[i] > out.envelope[i] * (1.0 + 1e-12)) out.bounded = false;
    if (i > 0 && out.rollouts[i] > out.rollouts[i - 1]) {
      const double p = out.exceedance[i - 1];
      const double slack = 3.0 * std::sqrt(std::max(p * (1.0 - p), 1e-12) / config.trials);
      if (out.exceedance[i] > p + slack) out.monotone = false;
    }
  }
  return out;
}

}  // namespace halluguard
