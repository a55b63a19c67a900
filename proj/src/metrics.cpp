#include "halluguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "halluguard/error.hpp"

namespace halluguard {

namespace {

void check_finite(const std::vector<LabeledScore>& scores) {
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) {
      throw Error(ErrorCode::kNonFinite, "score for '" + s.prompt_id + "' is not finite");
    }
    if (s.label != 0 && s.label != 1) {
      throw Error(ErrorCode::kInvalidArgument, "label for '" + s.prompt_id + "' is not 0/1");
    }
  }
}

void require_both(const ClassCounts& c) {
  if (c.positives == 0 || c.negatives == 0) {
    throw Error(ErrorCode::kUndefinedMetric,
                "need both classes (positives=" + std::to_string(c.positives) +
                    ", negatives=" + std::to_string(c.negatives) + ")");
  }
}

// Indices sorted by descending score, stable in input order.
std::vector<std::size_t> descending_order(const std::vector<LabeledScore>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].score > scores[b].score; });
  return idx;
}

}  // namespace

ClassCounts count_classes(const std::vector<LabeledScore>& scores) {
  ClassCounts c;
  for (const auto& s : scores) (s.label == 1 ? c.positives : c.negatives)++;
  return c;
}

double auroc(const std::vector<LabeledScore>& scores) {
  check_finite(scores);
  const ClassCounts c = count_classes(scores);
  require_both(c);

  // Rank-sum form of the pairwise estimator, with average ranks for ties.
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a].score < scores[b].score; });
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]].score == scores[idx[i]].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (scores[idx[k]].label == 1) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const auto np = static_cast<double>(c.positives);
  const auto nn = static_cast<double>(c.negatives);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auprc(const std::vector<LabeledScore>& scores) {
  check_finite(scores);
  const ClassCounts c = count_classes(scores);
  if (c.positives == 0) throw Error(ErrorCode::kUndefinedMetric, "no positives");
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t rank = 0;
  for (std::size_t i : descending_order(scores)) {
    ++rank;
    if (scores[i].label == 1) {
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(rank);
    }
  }
  return ap / static_cast<double>(c.positives);
}

double tpr_at_fpr(const std::vector<LabeledScore>& scores, double fpr) {
  if (!(fpr > 0.0 && fpr < 1.0)) throw Error(ErrorCode::kInvalidArgument, "fpr must lie in (0, 1)");
  check_finite(scores);
  const ClassCounts c = count_classes(scores);
  require_both(c);
  const auto order = descending_order(scores);
  std::size_t tp = 0, fp = 0;
  double best = 0.0;
  // Sweep thresholds at each distinct score, highest first.
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]].score;
    while (i < order.size() && scores[order[i]].score == s) {
      (scores[order[i]].label == 1 ? tp : fp)++;
      ++i;
    }
    const double f = static_cast<double>(fp) / static_cast<double>(c.negatives);
    if (f <= fpr + 1e-12) {
      best = std::max(best, static_cast<double>(tp) / static_cast<double>(c.positives));
    }
  }
  return best;
}

double f1_at_threshold(const std::vector<LabeledScore>& scores, double threshold) {
  check_finite(scores);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& s : scores) {
    const bool predicted = s.score >= threshold;
    if (predicted && s.label == 1) ++tp;
    if (predicted && s.label == 0) ++fp;
    if (!predicted && s.label == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double bayes_threshold(double c_fp, double c_fn, double prior) {
  if (!(c_fp >= 0.0) || !(c_fn >= 0.0) || c_fp + c_fn <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "costs must be non-negative and not both zero");
  }
  if (!(prior > 0.0 && prior <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "prior must lie in (0, 1]");
  }
  return c_fn / (c_fp + c_fn) * (1.0 - prior) / prior;
}

double select_threshold(const std::vector<LabeledScore>& scores, const ThresholdRule& rule) {
  if (rule.mode == ThresholdMode::kBayes) return bayes_threshold(rule.c_fp, rule.c_fn, rule.prior);
  if (scores.empty()) throw Error(ErrorCode::kInsufficientData, "no validation scores");
  check_finite(scores);

  if (rule.mode == ThresholdMode::kFixedFpr) {
    if (!(rule.fpr > 0.0 && rule.fpr < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "fpr must lie in (0, 1)");
    }
    const ClassCounts c = count_classes(scores);
    if (c.negatives == 0) throw Error(ErrorCode::kUndefinedMetric, "no negatives for FPR");
    const auto order = descending_order(scores);
    double threshold = std::numeric_limits<double>::infinity();
    std::size_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
      const double s = scores[order[i]].score;
      while (i < order.size() && scores[order[i]].score == s) {
        if (scores[order[i]].label == 0) ++fp;
        ++i;
      }
      if (static_cast<double>(fp) / static_cast<double>(c.negatives) > rule.fpr + 1e-12) break;
      threshold = s;
    }
    return threshold;
  }

  double pi = rule.pi_target;
  if (pi < 0.0) {
    pi = static_cast<double>(count_classes(scores).positives) / static_cast<double>(scores.size());
  }
  if (!(pi > 0.0 && pi < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target positive rate must lie in (0, 1)");
  }
  std::vector<double> sorted;
  sorted.reserve(scores.size());
  for (const auto& s : scores) sorted.push_back(s.score);
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const double m = (1.0 - pi) * n;  // number of samples below the threshold
  const double mr = std::round(m);
  if (std::abs(m - mr) < 1e-9 && mr >= 1.0 && mr < n) {
    const auto k = static_cast<std::size_t>(mr);
    return 0.5 * (sorted[k - 1] + sorted[k]);
  }
  const auto k = std::min(static_cast<std::size_t>(std::floor(m)), sorted.size() - 1);
  return sorted[k];
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "pearson length mismatch");
  if (x.size() < 2) throw Error(ErrorCode::kInsufficientData, "pearson needs >= 2 points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw Error(ErrorCode::kUndefinedMetric, "pearson undefined for a constant vector");
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace halluguard
