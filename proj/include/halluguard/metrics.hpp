#pragma once

#include <string>
#include <vector>

namespace halluguard {

// score is oriented so that higher means "more likely hallucinated";
// label 1 = hallucinated.
struct LabeledScore {
  std::string prompt_id;
  double score = 0.0;
  int label = 0;
};

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts count_classes(const std::vector<LabeledScore>& scores);

// Pairwise estimator; tied pairs count 1/2. Needs both classes.
double auroc(const std::vector<LabeledScore>& scores);

// Average precision, sum_k (R_k - R_{k-1}) P_k over the descending ranking.
// Equal scores keep their input order.
double auprc(const std::vector<LabeledScore>& scores);

// Highest TPR over thresholds "score >= t" whose FPR does not exceed fpr.
double tpr_at_fpr(const std::vector<LabeledScore>& scores, double fpr);

// F1 of the rule "score >= threshold => hallucinated".
double f1_at_threshold(const std::vector<LabeledScore>& scores, double threshold);

enum class ThresholdMode { kQuantile, kFixedFpr, kBayes };

struct ThresholdRule {
  ThresholdMode mode = ThresholdMode::kQuantile;
  // Quantile mode: target predicted-positive rate. Negative = use the
  // empirical positive rate of the validation scores.
  double pi_target = -1.0;
  double fpr = 0.05;
  double c_fp = 1.0;
  double c_fn = 1.0;
  double prior = 0.5;
};

// Quantile: the (1 - pi_target) score quantile, midpoint of the two
// neighbouring order statistics when the split falls between them.
// Fixed FPR: the lowest score threshold with FPR <= fpr.
// Bayes: c_fn / (c_fp + c_fn) * (1 - prior) / prior, independent of scores.
double select_threshold(const std::vector<LabeledScore>& scores, const ThresholdRule& rule);

double bayes_threshold(double c_fp, double c_fn, double prior);

// Pearson correlation; Error(kUndefinedMetric) when either side is constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace halluguard
