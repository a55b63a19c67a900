#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace halluguard {

enum class ErrorCode {
  kInvalidArgument,
  kNonFinite,
  kDimensionMismatch,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kInvalidBundle,
  kDegenerateEmbedding,
  kNotPositiveDefinite,
  kInconsistentOracle,
  kNotConverged,
  kInsufficientSteps,
  kInsufficientData,
  kDegenerateCalibration,
  kUndefinedMetric,
  kDegeneratePerturbation,
  kPrecondition,
  kDivergence,
  kOutOfRange,
  kContextOverflow,
  kParse,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Base exception for the library. Every failure surfaced to callers carries
// a code so the CLI can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class TruncatedError : public Error {
 public:
  TruncatedError(std::string section, std::size_t offset);

  const std::string& section() const noexcept { return section_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string section_;
  std::size_t offset_;
};

class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(std::size_t pivot, double pivot_value);

  std::size_t pivot() const noexcept { return pivot_; }
  double pivot_value() const noexcept { return pivot_value_; }

 private:
  std::size_t pivot_;
  double pivot_value_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(int step, double last_estimate, double residual);

  int step() const noexcept { return step_; }
  double last_estimate() const noexcept { return last_estimate_; }
  double residual() const noexcept { return residual_; }

 private:
  int step_;
  double last_estimate_;
  double residual_;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(int step);

  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace halluguard
