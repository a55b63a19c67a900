#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "halluguard/bundle.hpp"
#include "halluguard/detectors.hpp"
#include "halluguard/metrics.hpp"
#include "halluguard/score.hpp"

namespace halluguard {

inline constexpr double kDefaultRougeTau = 0.5;

// 1 (hallucinated) iff the best ROUGE-L against any reference is below tau.
int label_by_rouge(const std::string& text, const std::vector<std::string>& references,
                   double tau = kDefaultRougeTau);

// Stored label if present, otherwise label_by_rouge on generation 0.
int bundle_label(const TrajectoryBundle& bundle, double tau = kDefaultRougeTau);

// Population statistics; Error(kInsufficientData) for fewer than two
// triples, Error(kDegenerateCalibration) naming a zero-variance component.
CalibrationStats fit_z_calibration(const std::vector<HalluGuardComponents>& triples);

// Components for every bundle, banking vectors in arrival order.
std::vector<HalluGuardComponents> dataset_components(const std::vector<TrajectoryBundle>& bundles,
                                                     const HalluGuardConfig& config = {});

// One row of the score CSV.
struct ScoreRow {
  std::string prompt_id;
  std::optional<int> label;
  std::optional<double> rouge_to_ref;
  std::map<std::string, std::optional<double>> scores;
};

struct ScoreTable {
  std::vector<std::string> detectors;
  std::vector<ScoreRow> rows;  // sorted by prompt_id
};

// Builds the exact-Jacobian amplifier for one bundle.
using AmplifierFactory = std::function<ExactAmplifier(const TrajectoryBundle&)>;

// Scores bundles in the given order (the clipping bank sees them in that
// order) and returns rows sorted by prompt_id.
ScoreTable score_dataset(const std::vector<TrajectoryBundle>& bundles,
                         const std::vector<std::string>& detectors,
                         const DetectorConfig& config = {}, double rouge_tau = kDefaultRougeTau,
                         const AmplifierFactory& amplifiers = {});

void write_score_csv(std::ostream& out, const ScoreTable& table);
ScoreTable read_score_csv(std::istream& in);

struct EvalConfig {
  ThresholdRule threshold;
  std::vector<double> fpr_points{0.05, 0.10};
};

struct DetectorMetrics {
  std::string detector;
  Orientation orientation = Orientation::kHigherIsHallucinated;
  double auroc = 0.0;
  double auprc = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;  // in oriented (higher = hallucinated) units
  std::map<double, double> tpr_at_fpr;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t n_missing = 0;  // rows where the detector was unavailable
};

struct EvalReport {
  std::vector<DetectorMetrics> detectors;
  std::optional<CalibrationStats> calibration;
  std::size_t n_rows = 0;
};

// Oriented scores for one detector column; rows with a missing score or
// label are skipped.
std::vector<LabeledScore> oriented_scores(const ScoreTable& table, const std::string& detector);

// Error(kUndefinedMetric) listing class counts when a detector column has
// only one class.
EvalReport evaluate_table(const ScoreTable& table, const EvalConfig& config = {});

EvalReport evaluate(const std::vector<TrajectoryBundle>& bundles,
                    const std::vector<std::string>& detectors,
                    const DetectorConfig& detector_config = {}, const EvalConfig& config = {},
                    double rouge_tau = kDefaultRougeTau);

void write_report_csv(std::ostream& out, const EvalReport& report);
void write_report_table(std::ostream& out, const EvalReport& report);

enum class ProxyKind { kLogDet, kAmpMinusCond };

// Pearson correlation between the proxy and the non-hallucination
// indicator (1 - label). Needs at least 10 labeled bundles.
double proxy_task_correlation(const std::vector<TrajectoryBundle>& bundles, ProxyKind proxy,
                              const HalluGuardConfig& config = {},
                              double rouge_tau = kDefaultRougeTau);

}  // namespace halluguard
