#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "halluguard/bundle.hpp"
#include "halluguard/score.hpp"

namespace halluguard {

enum class Orientation { kHigherIsHallucinated, kLowerIsHallucinated };

enum class Similarity { kRougeL, kEmbedCosine };

// Detector names used in score CSV columns and on the command line.
namespace detector {
inline constexpr std::string_view kHalluGuard = "halluguard";
inline constexpr std::string_view kPerplexity = "perplexity";
inline constexpr std::string_view kLnEntropy = "ln_entropy";
inline constexpr std::string_view kEnergy = "energy";
inline constexpr std::string_view kLexicalConsistency = "lexical_consistency";
inline constexpr std::string_view kCosineConsistency = "cosine_consistency";
inline constexpr std::string_view kSemanticEntropy = "semantic_entropy";
}  // namespace detector

// Every detector this library can compute from a bundle, in column order.
const std::vector<std::string>& all_detectors();

// Throws Error(kInvalidArgument) for an unknown detector name.
Orientation detector_orientation(std::string_view name);

// -(1/T) * sum(logprob).
double perplexity(std::span<const float> logprob);

// Mean over generations of the length-normalized NLL.
double ln_entropy(const TrajectoryBundle& bundle);

// -(1/T) * sum(step_lse): mean free energy at unit temperature.
double energy_score(std::span<const float> step_lse);

// LCS-based F-measure over whitespace tokens; 0 when either side is empty.
double rouge_l(std::string_view candidate, std::string_view reference);

// Mean pairwise similarity over the K (K-1) / 2 pairs.
double lexical_consistency(const std::vector<std::string>& texts);
double cosine_consistency(const Eigen::MatrixXd& embeddings);

inline constexpr double kDefaultLinkThreshold = 0.9;

// Entropy of the single-linkage clusters formed by cosine >= threshold.
double semantic_entropy_lite(const Eigen::MatrixXd& embeddings,
                             double link_threshold = kDefaultLinkThreshold);

struct DetectorConfig {
  HalluGuardConfig halluguard;
  std::optional<CalibrationStats> calibration;
  double link_threshold = kDefaultLinkThreshold;
};

struct DetectorScores {
  std::string prompt_id;
  // Absent value = detector unavailable for this bundle.
  std::map<std::string, std::optional<double>> scores;
  std::map<std::string, Orientation> orientation;
  std::map<std::string, std::string> unavailable_reason;
};

// Scores one bundle. A detector whose inputs are missing is reported as
// unavailable instead of failing the whole call.
DetectorScores score_sample(const TrajectoryBundle& bundle,
                            const std::vector<std::string>& detectors,
                            const DetectorConfig& config = {}, MemoryBank* bank = nullptr,
                            const ExactAmplifier* exact = nullptr);

}  // namespace halluguard
