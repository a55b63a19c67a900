#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "halluguard/error.hpp"
#include "halluguard/eval.hpp"
#include "helpers.hpp"

using namespace halluguard;

namespace {

// Reliable bundles have well-spread embeddings, hallucinated ones collapse
// onto one direction, so their score is strictly lower.
std::vector<TrajectoryBundle> separated_dataset(int n) {
  std::vector<TrajectoryBundle> out;
  for (int i = 0; i < n; ++i) {
    TrajectoryBundle b = hgtest::random_bundle(100 + i, 4, 4, 4, true);
    const bool bad = i % 2 == 1;
    for (int g = 0; g < 4; ++g) {
      auto& e = b.generations[g].sent_embed;
      e.assign(4, 0.0f);
      e[bad ? 0 : g] = 1.0f;
      if (bad) e[1] = 0.01f * static_cast<float>(g);
      b.generations[g].step_states = std::vector<float>(16, 0.0f);
      for (int t = 0; t < 4; ++t) (*b.generations[g].step_states)[t * 4] = static_cast<float>(t);
    }
    b.label = bad ? 1 : 0;
    out.push_back(b);
  }
  return out;
}

}  // namespace

TEST(Labels, ByRouge) {
  EXPECT_EQ(label_by_rouge("0 4 6", {"0 4 6"}), 0);
  EXPECT_EQ(label_by_rouge("x", {"0 4 6"}), 1);
  EXPECT_EQ(label_by_rouge("a b c d", {"a c d"}, 0.9), 1);
  EXPECT_EQ(label_by_rouge("a b c d", {"a c d"}, 0.8), 0);
  EXPECT_THROW(label_by_rouge("a", {}), Error);
}

TEST(Calibration, Fit) {
  const auto s = fit_z_calibration({{0, 0, 0}, {2, 2, 2}});
  for (int c = 0; c < 3; ++c) {
    EXPECT_DOUBLE_EQ(s.mean[c], 1.0);
    EXPECT_DOUBLE_EQ(s.std[c], 1.0);
  }
  try {
    fit_z_calibration({{1, 2, 3}, {1, 2, 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCalibration);
  }
  try {
    fit_z_calibration({{1, 2, 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

TEST(Evaluate, ConstructedSeparation) {
  DetectorConfig cfg;
  cfg.halluguard.clip = false;
  const auto report = evaluate(separated_dataset(20), {"halluguard"}, cfg);
  ASSERT_EQ(report.detectors.size(), 1u);
  EXPECT_EQ(report.detectors[0].auroc, 1.0);
  EXPECT_EQ(report.detectors[0].n_pos, 10u);
}

TEST(Evaluate, ShuffledLabelsNearHalf) {
  std::mt19937_64 rng(42);
  std::vector<TrajectoryBundle> data;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    TrajectoryBundle b = hgtest::random_bundle(1000 + i, 4, 6, 4, true);
    b.label = static_cast<std::uint8_t>(i % 2);
    data.push_back(b);
  }
  std::vector<std::uint8_t> labels;
  for (const auto& b : data) labels.push_back(*b.label);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (int i = 0; i < n; ++i) data[i].label = labels[i];
  const auto report = evaluate(data, all_detectors());
  for (const auto& m : report.detectors) {
    EXPECT_NEAR(m.auroc, 0.5, 3.0 / std::sqrt(n)) << m.detector;
  }
}

TEST(Evaluate, Deterministic) {
  const auto data = separated_dataset(12);
  std::ostringstream a, b;
  write_report_csv(a, evaluate(data, all_detectors()));
  write_report_csv(b, evaluate(data, all_detectors()));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Evaluate, SingleClassIsUndefined) {
  auto data = separated_dataset(6);
  for (auto& b : data) b.label = 0;
  try {
    evaluate(data, {"perplexity"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
}

TEST(ScoreCsv, RoundTrip) {
  DetectorConfig cfg;
  auto data = separated_dataset(6);
  data[0].generations[0].step_states.reset();
  data[0].generations[1].step_states.reset();
  data[0].generations[2].step_states.reset();
  data[0].generations[3].step_states.reset();
  const ScoreTable t = score_dataset(data, all_detectors(), cfg);
  std::ostringstream out;
  write_score_csv(out, t);
  std::istringstream in(out.str());
  const ScoreTable back = read_score_csv(in);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  EXPECT_EQ(back.detectors, t.detectors);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].prompt_id, t.rows[i].prompt_id);
    EXPECT_EQ(back.rows[i].label, t.rows[i].label);
    EXPECT_EQ(back.rows[i].scores, t.rows[i].scores);
  }
  EXPECT_FALSE(t.rows[0].scores.at("halluguard").has_value());
}

TEST(ProxyCorrelation, Extremes) {
  // log-det equal to the non-hallucination indicator up to an affine map.
  auto data = separated_dataset(20);
  HalluGuardConfig cfg;
  cfg.clip = false;
  EXPECT_NEAR(proxy_task_correlation(data, ProxyKind::kLogDet, cfg), 1.0, 1e-9);
  for (auto& b : data) b.label = static_cast<std::uint8_t>(1 - *b.label);
  EXPECT_NEAR(proxy_task_correlation(data, ProxyKind::kLogDet, cfg), -1.0, 1e-9);
}

TEST(ProxyCorrelation, Null) {
  std::vector<TrajectoryBundle> data;
  std::mt19937_64 rng(7);
  const int n = 300;
  for (int i = 0; i < n; ++i) {
    TrajectoryBundle b = hgtest::random_bundle(5000 + i, 4, 6, 4, true);
    b.label = static_cast<std::uint8_t>(rng() % 2);
    data.push_back(b);
  }
  EXPECT_LE(std::abs(proxy_task_correlation(data, ProxyKind::kLogDet)), 3.0 / std::sqrt(n));
  EXPECT_LE(std::abs(proxy_task_correlation(data, ProxyKind::kAmpMinusCond)), 3.0 / std::sqrt(n));
}
