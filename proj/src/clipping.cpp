#include "halluguard/clipping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "halluguard/error.hpp"

namespace halluguard {

MemoryBank::MemoryBank(std::size_t dim, std::size_t capacity)
    : dim_(dim), capacity_(capacity) {
  if (dim == 0 || capacity == 0) {
    throw Error(ErrorCode::kInvalidArgument, "memory bank needs positive dim and capacity");
  }
  slots_.resize(static_cast<Eigen::Index>(capacity), static_cast<Eigen::Index>(dim));
}

void MemoryBank::update(const Eigen::MatrixXd& vectors) {
  if (static_cast<std::size_t>(vectors.cols()) != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "bank dimension " + std::to_string(dim_) + " vs vectors with " +
                    std::to_string(vectors.cols()) + " columns");
  }
  if (!vectors.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "cannot bank non-finite vectors");
  }
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    if (count_ < capacity_) {
      slots_.row(static_cast<Eigen::Index>(count_)) = vectors.row(i);
      ++count_;
    } else {
      slots_.row(static_cast<Eigen::Index>(head_)) = vectors.row(i);
      head_ = (head_ + 1) % capacity_;
    }
  }
}

void MemoryBank::update(const std::vector<float>& vector) {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(vector.size()));
  for (std::size_t j = 0; j < vector.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = vector[j];
  update(row);
}

Eigen::MatrixXd MemoryBank::snapshot() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count_), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < count_; ++i) {
    const std::size_t slot = count_ < capacity_ ? i : (head_ + i) % capacity_;
    out.row(static_cast<Eigen::Index>(i)) = slots_.row(static_cast<Eigen::Index>(slot));
  }
  return out;
}

namespace {

// 1-based nearest rank ceil(p * n), clamped to [1, n]. The small slack keeps
// products like 0.002 * 1000 from rounding up past an exact integer.
std::size_t nearest_rank(double p, std::size_t n) {
  const double x = p * static_cast<double>(n);
  auto r = static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
  return std::clamp<std::size_t>(r, 1, n);
}

}  // namespace

ClipThresholds compute_thresholds(const MemoryBank& bank, double q) {
  if (!(q > 0.0 && q < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "clip quantile must lie in (0, 0.5)");
  }
  if (bank.count() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "memory bank holds " + std::to_string(bank.count()) + " vectors, need >= 2");
  }
  const Eigen::MatrixXd data = bank.snapshot();
  const std::size_t n = bank.count();
  const std::size_t lo_rank = nearest_rank(q, n);
  const std::size_t hi_rank = nearest_rank(1.0 - q, n);

  ClipThresholds th;
  th.quantile = q;
  th.lo.resize(data.cols());
  th.hi.resize(data.cols());
  std::vector<double> column(n);
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = data(static_cast<Eigen::Index>(i), j);
    std::sort(column.begin(), column.end());
    th.lo(j) = column[lo_rank - 1];
    th.hi(j) = column[hi_rank - 1];
  }
  return th;
}

ClipResult clip_features(const Eigen::MatrixXd& matrix, const ClipThresholds& th) {
  if (matrix.cols() != th.lo.size() || matrix.cols() != th.hi.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "threshold dimension does not match matrix");
  }
  ClipResult out;
  out.clipped = matrix;
  std::size_t modified = 0;
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      const double x = matrix(i, j);
      const double c = std::min(std::max(x, th.lo(j)), th.hi(j));
      if (c != x) ++modified;
      out.clipped(i, j) = c;
    }
  }
  const auto total = static_cast<double>(matrix.size());
  out.clip_fraction = total > 0 ? static_cast<double>(modified) / total : 0.0;
  return out;
}

}  // namespace halluguard
