#pragma once

#include <vector>

#include <Eigen/Dense>

namespace halluguard {

inline constexpr double kDefaultRidge = 1e-3;

// G = E * E^T + ridge * I over the (optionally unit-normalized) rows of E.
struct GramMatrix {
  Eigen::MatrixXd entries;
  double ridge = 0.0;
  bool normalized = false;

  Eigen::Index size() const { return entries.rows(); }
};

struct Spectrum {
  std::vector<double> eigenvalues;  // descending
  double log_det = 0.0;             // from the Cholesky factor
  double kappa = 1.0;               // lambda_max / lambda_min
  double trace = 0.0;

  double lambda_max() const { return eigenvalues.front(); }
  double lambda_min() const { return eigenvalues.back(); }
};

// Throws Error(kInvalidArgument) when fewer than 2 rows or ridge < 0,
// Error(kNonFinite) for non-finite input, Error(kDegenerateEmbedding) when
// normalizing a row with norm <= 1e-12.
GramMatrix build_gram(const Eigen::MatrixXd& embeddings, double ridge = kDefaultRidge,
                      bool normalize = true);

// log det(A) = 2 * sum(log diag(L)) for A = L L^T. Throws
// NotPositiveDefiniteError carrying the first non-positive pivot.
double cholesky_log_det(const Eigen::MatrixXd& spd);

// Eigenvalues from a symmetric eigensolver, log-det from Cholesky.
Spectrum spectral_summary(const GramMatrix& gram);
Spectrum spectral_summary(const Eigen::MatrixXd& spd);

}  // namespace halluguard
