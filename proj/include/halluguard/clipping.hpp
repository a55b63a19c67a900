#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace halluguard {

inline constexpr std::size_t kDefaultBankCapacity = 3000;
inline constexpr double kDefaultClipQuantile = 0.002;

// Fixed-capacity FIFO of d-dimensional activation vectors. Single writer.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t dim, std::size_t capacity = kDefaultBankCapacity);

  // Appends rows of `vectors` (n x d) in order, evicting the oldest entries
  // once full. Throws Error(kDimensionMismatch) or Error(kNonFinite).
  void update(const Eigen::MatrixXd& vectors);
  void update(const std::vector<float>& vector);

  std::size_t dim() const { return dim_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t count() const { return count_; }

  // Entries oldest-first, count x d.
  Eigen::MatrixXd snapshot() const;

 private:
  std::size_t dim_;
  std::size_t capacity_;
  std::size_t count_ = 0;
  std::size_t head_ = 0;  // slot of the oldest entry once full
  Eigen::MatrixXd slots_;
};

struct ClipThresholds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  double quantile = kDefaultClipQuantile;
};

// Per-dimension nearest-rank quantiles of the bank: lo is the ceil(q n)-th
// smallest value, hi the ceil((1-q) n)-th smallest (1-based ranks).
// Throws Error(kInsufficientData) when count < 2.
ClipThresholds compute_thresholds(const MemoryBank& bank, double q = kDefaultClipQuantile);

struct ClipResult {
  Eigen::MatrixXd clipped;
  double clip_fraction = 0.0;
};

ClipResult clip_features(const Eigen::MatrixXd& matrix, const ClipThresholds& thresholds);

}  // namespace halluguard
