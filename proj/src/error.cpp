#include "halluguard/error.hpp"

#include <sstream>
#include <utility>

namespace halluguard {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kInvalidBundle: return "invalid-bundle";
    case ErrorCode::kDegenerateEmbedding: return "degenerate-embedding";
    case ErrorCode::kNotPositiveDefinite: return "not-positive-definite";
    case ErrorCode::kInconsistentOracle: return "inconsistent-oracle";
    case ErrorCode::kNotConverged: return "not-converged";
    case ErrorCode::kInsufficientSteps: return "insufficient-steps";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerateCalibration: return "degenerate-calibration";
    case ErrorCode::kUndefinedMetric: return "undefined-metric";
    case ErrorCode::kDegeneratePerturbation: return "degenerate-perturbation";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kContextOverflow: return "context-overflow";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

namespace {

std::string truncated_message(const std::string& section, std::size_t offset) {
  std::ostringstream os;
  os << "stream ended inside section '" << section << "' at byte " << offset;
  return os.str();
}

std::string pivot_message(std::size_t pivot, double value) {
  std::ostringstream os;
  os << "Cholesky pivot " << pivot << " is not positive (" << value << ")";
  return os.str();
}

std::string convergence_message(int step, double estimate, double residual) {
  std::ostringstream os;
  os << "power iteration did not converge at step " << step
     << " (last estimate " << estimate << ", relative residual " << residual
     << ")";
  return os.str();
}

}  // namespace

TruncatedError::TruncatedError(std::string section, std::size_t offset)
    : Error(ErrorCode::kTruncated, truncated_message(section, offset)),
      section_(std::move(section)),
      offset_(offset) {}

NotPositiveDefiniteError::NotPositiveDefiniteError(std::size_t pivot,
                                                   double pivot_value)
    : Error(ErrorCode::kNotPositiveDefinite, pivot_message(pivot, pivot_value)),
      pivot_(pivot),
      pivot_value_(pivot_value) {}

ConvergenceError::ConvergenceError(int step, double last_estimate,
                                   double residual)
    : Error(ErrorCode::kNotConverged,
            convergence_message(step, last_estimate, residual)),
      step_(step),
      last_estimate_(last_estimate),
      residual_(residual) {}

DivergenceError::DivergenceError(int step)
    : Error(ErrorCode::kDivergence,
            "training loss became non-finite at step " + std::to_string(step)),
      step_(step) {}

}  // namespace halluguard
