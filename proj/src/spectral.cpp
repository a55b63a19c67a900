#include "halluguard/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "halluguard/error.hpp"

namespace halluguard {

GramMatrix build_gram(const Eigen::MatrixXd& embeddings, double ridge, bool normalize) {
  if (embeddings.rows() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "Gram matrix needs at least 2 rows");
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw Error(ErrorCode::kInvalidArgument, "ridge must be finite and >= 0");
  }
  if (!embeddings.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "embedding matrix has non-finite entries");
  }

  Eigen::MatrixXd rows = embeddings;
  if (normalize) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const double norm = rows.row(i).norm();
      if (norm <= 1e-12) {
        throw Error(ErrorCode::kDegenerateEmbedding,
                    "embedding row " + std::to_string(i) + " has zero norm");
      }
      rows.row(i) /= norm;
    }
  }

  GramMatrix gram;
  gram.ridge = ridge;
  gram.normalized = normalize;
  gram.entries = rows * rows.transpose();
  // Symmetrize exactly; the product is symmetric only up to rounding.
  gram.entries = 0.5 * (gram.entries + gram.entries.transpose()).eval();
  if (normalize) gram.entries.diagonal().setOnes();
  gram.entries.diagonal().array() += ridge;
  return gram;
}

double cholesky_log_det(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "Cholesky needs a non-empty square matrix");
  }
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0)) {
      throw NotPositiveDefiniteError(static_cast<std::size_t>(j), pivot);
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    log_det += 2.0 * std::log(ljj);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return log_det;
}

Spectrum spectral_summary(const Eigen::MatrixXd& spd) {
  Spectrum s;
  s.log_det = cholesky_log_det(spd);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(spd, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotConverged, "symmetric eigensolver failed");
  }
  const Eigen::VectorXd& ev = solver.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), std::greater<>());
  if (!(s.lambda_min() > 0.0)) {
    // Cholesky accepted a matrix whose smallest eigenvalue rounds to <= 0.
    throw NotPositiveDefiniteError(s.eigenvalues.size() - 1, s.lambda_min());
  }
  s.kappa = s.lambda_max() / s.lambda_min();
  s.trace = spd.trace();
  return s;
}

Spectrum spectral_summary(const GramMatrix& gram) {
  return spectral_summary(gram.entries);
}

}  // namespace halluguard
