#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "halluguard/error.hpp"
#include "halluguard/metrics.hpp"

using namespace halluguard;

namespace {

std::vector<LabeledScore> make(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<LabeledScore> out;
  for (double s : pos) out.push_back({"p" + std::to_string(out.size()), s, 1});
  for (double s : neg) out.push_back({"n" + std::to_string(out.size()), s, 0});
  return out;
}

double pairwise_auroc(const std::vector<LabeledScore>& s) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& a : s) {
    if (a.label != 1) continue;
    for (const auto& b : s) {
      if (b.label != 0) continue;
      pairs += 1.0;
      wins += a.score > b.score ? 1.0 : (a.score == b.score ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

double trapezoid_auroc(const std::vector<LabeledScore>& s) {
  std::set<double, std::greater<>> thresholds;
  double np = 0, nn = 0;
  for (const auto& x : s) {
    thresholds.insert(x.score);
    (x.label ? np : nn) += 1;
  }
  double area = 0.0, px = 0.0, py = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (const auto& x : s) {
      if (x.score >= t) (x.label ? tp : fp) += 1;
    }
    const double fx = fp / nn, fy = tp / np;
    area += (fx - px) * (fy + py) / 2.0;
    px = fx;
    py = fy;
  }
  return area;
}

}  // namespace

TEST(Auroc, Examples) {
  EXPECT_EQ(auroc(make({3, 4}, {1, 2})), 1.0);
  EXPECT_EQ(auroc(make({1, 1}, {1, 1, 1})), 0.5);
  EXPECT_NEAR(auroc(make({0.9, 0.4}, {0.5, 0.1})), 0.75, 1e-15);
}

TEST(Auroc, MatchesOracles) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LabeledScore> s;
    const int n = 2 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) s.push_back({"", static_cast<double>(rng() % 8), static_cast<int>(rng() % 2)});
    s.push_back({"", 0.5, 1});
    s.push_back({"", 0.5, 0});
    const double a = auroc(s);
    EXPECT_NEAR(a, pairwise_auroc(s), 1e-12);
    EXPECT_NEAR(a, trapezoid_auroc(s), 1e-12);
  }
}

TEST(Auroc, SingleClass) {
  try {
    auroc(make({1, 2}, {}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
  EXPECT_THROW(auroc(make({NAN}, {1})), Error);
}

TEST(Auprc, Examples) {
  EXPECT_EQ(auprc(make({4, 3}, {2, 1})), 1.0);
  EXPECT_NEAR(auprc(make({2, 1}, {4, 3})), 5.0 / 12.0, 1e-15);
  std::vector<double> neg(9, 0.0);
  EXPECT_EQ(auprc(make({1}, neg)), 1.0);
}

TEST(TprAtFpr, Examples) {
  EXPECT_EQ(tpr_at_fpr(make({5, 6}, {1, 2}), 0.05), 1.0);
  EXPECT_EQ(tpr_at_fpr(make({3, 2}, {4, 1}), 0.5), 1.0);
  EXPECT_EQ(tpr_at_fpr(make({1, 2}, {5, 6}), 0.05), 0.0);
}

TEST(TprAtFpr, Monotone) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0, 1);
  std::vector<LabeledScore> s;
  for (int i = 0; i < 300; ++i) {
    const int y = static_cast<int>(rng() % 2);
    s.push_back({"", normal(rng) + y, y});
  }
  double prev = 0.0;
  for (double f = 0.01; f < 1.0; f += 0.01) {
    const double t = tpr_at_fpr(s, f);
    EXPECT_GE(t, prev);
    prev = t;
  }
  EXPECT_THROW(tpr_at_fpr(s, 0.0), Error);
}

TEST(Threshold, Bayes) {
  ThresholdRule r;
  r.mode = ThresholdMode::kBayes;
  EXPECT_DOUBLE_EQ(select_threshold({}, r), 0.5);
  r.c_fn = 3;
  EXPECT_DOUBLE_EQ(select_threshold({}, r), 0.75);
  EXPECT_THROW(bayes_threshold(0, 0, 0.5), Error);
}

TEST(Threshold, QuantileMedian) {
  ThresholdRule r;
  r.pi_target = 0.5;
  EXPECT_DOUBLE_EQ(select_threshold(make({1, 2}, {3, 4}), r), 2.5);
}

TEST(Threshold, FixedFpr) {
  ThresholdRule r;
  r.mode = ThresholdMode::kFixedFpr;
  r.fpr = 0.5;
  const auto s = make({3, 2}, {4, 1});
  const double t = select_threshold(s, r);
  EXPECT_EQ(t, 2.0);
  std::size_t fp = 0;
  for (const auto& x : s) fp += x.label == 0 && x.score >= t;
  EXPECT_LE(fp, 1u);
}

TEST(F1, AtThreshold) {
  EXPECT_DOUBLE_EQ(f1_at_threshold(make({3, 2}, {4, 1}), 2.0), 2.0 * 2 / (2 * 2 + 1));
  EXPECT_EQ(f1_at_threshold(make({1}, {4}), 2.0), 0.0);
}

TEST(Pearson, Basic) {
  EXPECT_NEAR(pearson({1, 2, 3}, {2, 4, 6}), 1.0, 1e-12);
  EXPECT_NEAR(pearson({1, 2, 3}, {3, 2, 1}), -1.0, 1e-12);
  EXPECT_THROW(pearson({1, 1}, {1, 2}), Error);
}
