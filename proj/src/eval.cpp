#include "halluguard/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

#include "halluguard/csv.hpp"
#include "halluguard/error.hpp"

namespace halluguard {

int label_by_rouge(const std::string& text, const std::vector<std::string>& references,
                   double tau) {
  if (references.empty()) throw Error(ErrorCode::kInvalidArgument, "no references to label against");
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, rouge_l(text, r));
  return best < tau ? 1 : 0;
}

int bundle_label(const TrajectoryBundle& bundle, double tau) {
  if (bundle.label) return *bundle.label;
  if (bundle.references.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "bundle '" + bundle.prompt_id + "' has neither a label nor references");
  }
  return label_by_rouge(bundle.generations.front().text, bundle.references, tau);
}

CalibrationStats fit_z_calibration(const std::vector<HalluGuardComponents>& triples) {
  if (triples.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "calibration needs >= 2 component triples");
  }
  CalibrationStats stats;
  const auto n = static_cast<double>(triples.size());
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (const auto& t : triples) mean += t.as_array()[c];
    mean /= n;
    double var = 0.0;
    for (const auto& t : triples) {
      const double d = t.as_array()[c] - mean;
      var += d * d;
    }
    var /= n;
    if (!(var > 0.0) || !std::isfinite(var)) {
      throw Error(ErrorCode::kDegenerateCalibration,
                  std::string("zero variance in component ") + kComponentNames[c]);
    }
    stats.mean[c] = mean;
    stats.std[c] = std::sqrt(var);
  }
  return stats;
}

std::vector<HalluGuardComponents> dataset_components(const std::vector<TrajectoryBundle>& bundles,
                                                     const HalluGuardConfig& config) {
  std::map<std::size_t, MemoryBank> banks;
  std::vector<HalluGuardComponents> out;
  out.reserve(bundles.size());
  for (const auto& b : bundles) {
    auto it = banks.find(b.embed_dim);
    if (it == banks.end()) it = banks.emplace(b.embed_dim, MemoryBank(b.embed_dim, config.bank_capacity)).first;
    out.push_back(halluguard_components(b, config, &it->second));
  }
  return out;
}

ScoreTable score_dataset(const std::vector<TrajectoryBundle>& bundles,
                         const std::vector<std::string>& detectors, const DetectorConfig& config,
                         double rouge_tau, const AmplifierFactory& amplifiers) {
  ScoreTable table;
  table.detectors = detectors;
  std::map<std::size_t, MemoryBank> banks;
  for (const auto& b : bundles) {
    auto it = banks.find(b.embed_dim);
    if (it == banks.end()) {
      it = banks.emplace(b.embed_dim, MemoryBank(b.embed_dim, config.halluguard.bank_capacity)).first;
    }
    std::optional<ExactAmplifier> exact;
    if (amplifiers) exact = amplifiers(b);
    DetectorScores s = score_sample(b, detectors, config, &it->second, exact ? &*exact : nullptr);
    ScoreRow row;
    row.prompt_id = b.prompt_id;
    if (b.label || !b.references.empty()) row.label = bundle_label(b, rouge_tau);
    if (b.rouge_to_ref) {
      row.rouge_to_ref = *b.rouge_to_ref;
    } else if (!b.references.empty()) {
      double best = 0.0;
      for (const auto& r : b.references) best = std::max(best, rouge_l(b.generations.front().text, r));
      row.rouge_to_ref = best;
    }
    row.scores = std::move(s.scores);
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const ScoreRow& a, const ScoreRow& b) { return a.prompt_id < b.prompt_id; });
  return table;
}

namespace {

const std::string kNA = "NA";

std::string opt_number(const std::optional<double>& v) {
  return v ? csv::format_number(*v) : kNA;
}

std::optional<double> parse_optional(const std::string& field, const std::string& column,
                                     std::size_t line) {
  if (field == kNA || field.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ", column '" + column +
                                       "': '" + field + "' is not a number");
  }
}

}  // namespace

void write_score_csv(std::ostream& out, const ScoreTable& table) {
  csv::Row header{"prompt_id", "label", "rouge_to_ref"};
  header.insert(header.end(), table.detectors.begin(), table.detectors.end());
  csv::write_row(out, header);
  for (const auto& r : table.rows) {
    csv::Row row{r.prompt_id, r.label ? std::to_string(*r.label) : kNA, opt_number(r.rouge_to_ref)};
    for (const auto& d : table.detectors) {
      const auto it = r.scores.find(d);
      row.push_back(it == r.scores.end() ? kNA : opt_number(it->second));
    }
    csv::write_row(out, row);
  }
}

ScoreTable read_score_csv(std::istream& in) {
  std::vector<csv::Row> rows;
  for (auto& r : csv::read_all(in)) {
    if (r.empty() || (r.size() == 1 && r[0].empty())) continue;
    if (!r[0].empty() && r[0][0] == '#') continue;
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(ErrorCode::kParse, "score CSV is empty");
  const csv::Row& header = rows.front();
  if (header.size() < 3 || header[0] != "prompt_id" || header[1] != "label" ||
      header[2] != "rouge_to_ref") {
    throw Error(ErrorCode::kParse, "score CSV header must start with prompt_id,label,rouge_to_ref");
  }
  ScoreTable table;
  table.detectors.assign(header.begin() + 3, header.end());
  for (const auto& d : table.detectors) detector_orientation(d);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const csv::Row& r = rows[i];
    if (r.size() != header.size()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(i + 1) + ": expected " +
                                         std::to_string(header.size()) + " fields");
    }
    ScoreRow row;
    row.prompt_id = r[0];
    if (const auto l = parse_optional(r[1], "label", i + 1)) {
      if (*l != 0.0 && *l != 1.0) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(i + 1) + ": label must be 0 or 1");
      }
      row.label = static_cast<int>(*l);
    }
    row.rouge_to_ref = parse_optional(r[2], "rouge_to_ref", i + 1);
    for (std::size_t j = 0; j < table.detectors.size(); ++j) {
      row.scores[table.detectors[j]] = parse_optional(r[j + 3], table.detectors[j], i + 1);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<LabeledScore> oriented_scores(const ScoreTable& table, const std::string& detector) {
  const double sign =
      detector_orientation(detector) == Orientation::kHigherIsHallucinated ? 1.0 : -1.0;
  std::vector<LabeledScore> out;
  for (const auto& r : table.rows) {
    const auto it = r.scores.find(detector);
    if (!r.label || it == r.scores.end() || !it->second) continue;
    out.push_back({r.prompt_id, sign * *it->second, *r.label});
  }
  return out;
}

EvalReport evaluate_table(const ScoreTable& table, const EvalConfig& config) {
  EvalReport report;
  report.n_rows = table.rows.size();
  for (const auto& d : table.detectors) {
    DetectorMetrics m;
    m.detector = d;
    m.orientation = detector_orientation(d);
    const auto scores = oriented_scores(table, d);
    std::size_t labeled = 0;
    for (const auto& r : table.rows) labeled += r.label ? 1 : 0;
    m.n_missing = labeled - scores.size();
    const ClassCounts c = count_classes(scores);
    m.n_pos = c.positives;
    m.n_neg = c.negatives;
    if (c.positives == 0 || c.negatives == 0) {
      throw Error(ErrorCode::kUndefinedMetric,
                  "detector '" + d + "': need both classes (positives=" +
                      std::to_string(c.positives) + ", negatives=" + std::to_string(c.negatives) + ")");
    }
    m.auroc = auroc(scores);
    m.auprc = auprc(scores);
    m.threshold = select_threshold(scores, config.threshold);
    m.f1 = f1_at_threshold(scores, m.threshold);
    for (double f : config.fpr_points) m.tpr_at_fpr[f] = tpr_at_fpr(scores, f);
    report.detectors.push_back(std::move(m));
  }
  return report;
}

EvalReport evaluate(const std::vector<TrajectoryBundle>& bundles,
                    const std::vector<std::string>& detectors,
                    const DetectorConfig& detector_config, const EvalConfig& config,
                    double rouge_tau) {
  const ScoreTable table = score_dataset(bundles, detectors, detector_config, rouge_tau);
  EvalReport report = evaluate_table(table, config);
  report.calibration = detector_config.calibration;
  return report;
}

namespace {

std::string fpr_label(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "tpr_at_fpr_%.2f", f);
  return buf;
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& report) {
  csv::Row header{"detector", "orientation", "auroc", "auprc", "f1", "threshold"};
  std::set<double> fprs;
  for (const auto& m : report.detectors) {
    for (const auto& [f, v] : m.tpr_at_fpr) fprs.insert(f);
  }
  for (double f : fprs) header.push_back(fpr_label(f));
  header.insert(header.end(), {"n_pos", "n_neg", "n_missing"});
  csv::write_row(out, header);
  for (const auto& m : report.detectors) {
    csv::Row row{m.detector,
                 m.orientation == Orientation::kHigherIsHallucinated ? "higher" : "lower",
                 csv::format_number(m.auroc), csv::format_number(m.auprc),
                 csv::format_number(m.f1), csv::format_number(m.threshold)};
    for (double f : fprs) {
      const auto it = m.tpr_at_fpr.find(f);
      row.push_back(it == m.tpr_at_fpr.end() ? "NA" : csv::format_number(it->second));
    }
    row.push_back(std::to_string(m.n_pos));
    row.push_back(std::to_string(m.n_neg));
    row.push_back(std::to_string(m.n_missing));
    csv::write_row(out, row);
  }
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %7s %7s %7s %8s %8s %6s %6s\n", "detector", "AUROC",
                "AUPRC", "F1", "TPR@5%", "TPR@10%", "pos", "neg");
  out << line;
  for (const auto& m : report.detectors) {
    auto tpr = [&](double f) {
      const auto it = m.tpr_at_fpr.find(f);
      return it == m.tpr_at_fpr.end() ? std::nan("") : it->second;
    };
    std::snprintf(line, sizeof line, "%-20s %7.4f %7.4f %7.4f %8.4f %8.4f %6zu %6zu\n",
                  m.detector.c_str(), m.auroc, m.auprc, m.f1, tpr(0.05), tpr(0.10), m.n_pos,
                  m.n_neg);
    out << line;
  }
}

double proxy_task_correlation(const std::vector<TrajectoryBundle>& bundles, ProxyKind proxy,
                              const HalluGuardConfig& config, double rouge_tau) {
  if (bundles.size() < 10) {
    throw Error(ErrorCode::kInsufficientData, "proxy correlation needs >= 10 labeled bundles");
  }
  const auto comps = dataset_components(bundles, config);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    x.push_back(proxy == ProxyKind::kLogDet ? comps[i].log_det
                                            : comps[i].log_sigma_max - comps[i].log_kappa_sq);
    y.push_back(1.0 - bundle_label(bundles[i], rouge_tau));
  }
  return pearson(x, y);
}

}  // namespace halluguard
