#include "halluguard/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "halluguard/error.hpp"

namespace halluguard {

const std::vector<std::string>& all_detectors() {
  static const std::vector<std::string> names = {
      std::string(detector::kHalluGuard),         std::string(detector::kPerplexity),
      std::string(detector::kLnEntropy),          std::string(detector::kEnergy),
      std::string(detector::kLexicalConsistency), std::string(detector::kCosineConsistency),
      std::string(detector::kSemanticEntropy)};
  return names;
}

Orientation detector_orientation(std::string_view name) {
  if (name == detector::kHalluGuard || name == detector::kLexicalConsistency ||
      name == detector::kCosineConsistency) {
    return Orientation::kLowerIsHallucinated;
  }
  if (name == detector::kPerplexity || name == detector::kLnEntropy ||
      name == detector::kEnergy || name == detector::kSemanticEntropy) {
    return Orientation::kHigherIsHallucinated;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown detector '" + std::string(name) + "'");
}

double perplexity(std::span<const float> logprob) {
  if (logprob.empty()) throw Error(ErrorCode::kInvalidArgument, "empty sequence");
  double sum = 0.0;
  for (float lp : logprob) sum += lp;
  return -sum / static_cast<double>(logprob.size());
}

double ln_entropy(const TrajectoryBundle& bundle) {
  if (bundle.k() < 2) throw Error(ErrorCode::kInvalidArgument, "need K >= 2");
  double total = 0.0;
  for (const auto& g : bundle.generations) total += perplexity(g.logprob);
  return total / static_cast<double>(bundle.k());
}

double energy_score(std::span<const float> step_lse) {
  if (step_lse.empty()) throw Error(ErrorCode::kInvalidArgument, "empty sequence");
  double sum = 0.0;
  for (float v : step_lse) sum += v;
  return -sum / static_cast<double>(step_lse.size());
}

namespace {

std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Eigen::MatrixXd unit_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!(n > 1e-12)) {
      throw Error(ErrorCode::kDegenerateEmbedding,
                  "embedding " + std::to_string(i) + " has zero norm");
    }
    out.row(i) /= n;
  }
  return out;
}

}  // namespace

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = whitespace_tokens(candidate);
  const auto r = whitespace_tokens(reference);
  if (c.empty() || r.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(c, r));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(c.size());
  const double rec = lcs / static_cast<double>(r.size());
  return 2.0 * p * rec / (p + rec);
}

double lexical_consistency(const std::vector<std::string>& texts) {
  if (texts.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need K >= 2 texts");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (std::size_t j = i + 1; j < texts.size(); ++j) {
      sum += rouge_l(texts[i], texts[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double cosine_consistency(const Eigen::MatrixXd& embeddings) {
  if (embeddings.rows() < 2) throw Error(ErrorCode::kInvalidArgument, "need K >= 2 embeddings");
  const Eigen::MatrixXd u = unit_rows(embeddings);
  const Eigen::MatrixXd cos = u * u.transpose();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < cos.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < cos.cols(); ++j) {
      sum += cos(i, j);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double semantic_entropy_lite(const Eigen::MatrixXd& embeddings, double link_threshold) {
  const Eigen::Index k = embeddings.rows();
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "need K >= 2 embeddings");
  const Eigen::MatrixXd u = unit_rows(embeddings);
  const Eigen::MatrixXd cos = u * u.transpose();

  // Single linkage = connected components of the thresholded graph.
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(k));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      if (cos(i, j) >= link_threshold) {
        const Eigen::Index a = find(i), b = find(j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
    }
  }
  std::vector<double> sizes(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < k; ++i) sizes[static_cast<std::size_t>(find(i))] += 1.0;
  double h = 0.0;
  for (double n : sizes) {
    if (n > 0.0) {
      const double p = n / static_cast<double>(k);
      h -= p * std::log(p);
    }
  }
  return h;
}

DetectorScores score_sample(const TrajectoryBundle& bundle,
                            const std::vector<std::string>& detectors,
                            const DetectorConfig& config, MemoryBank* bank,
                            const ExactAmplifier* exact) {
  DetectorScores out;
  out.prompt_id = bundle.prompt_id;
  const ValidationReport report = validate_bundle(bundle);
  if (!report.ok) throw Error(ErrorCode::kInvalidBundle, report.violations.front());

  for (const auto& name : detectors) {
    out.orientation[name] = detector_orientation(name);
    std::optional<double> value;
    try {
      const Generation& primary = bundle.generations.front();
      if (name == detector::kHalluGuard) {
        const auto comps = halluguard_components(bundle, config.halluguard, bank, exact);
        value = halluguard_score(comps, config.calibration);
      } else if (name == detector::kPerplexity) {
        value = perplexity(primary.logprob);
      } else if (name == detector::kLnEntropy) {
        value = ln_entropy(bundle);
      } else if (name == detector::kEnergy) {
        value = energy_score(primary.step_lse);
      } else if (name == detector::kLexicalConsistency) {
        std::vector<std::string> texts;
        for (const auto& g : bundle.generations) texts.push_back(g.text);
        value = lexical_consistency(texts);
      } else if (name == detector::kCosineConsistency) {
        value = cosine_consistency(bundle.embedding_matrix());
      } else if (name == detector::kSemanticEntropy) {
        value = semantic_entropy_lite(bundle.embedding_matrix(), config.link_threshold);
      }
      if (value && !std::isfinite(*value)) {
        out.unavailable_reason[name] = "non-finite score";
        value.reset();
      }
    } catch (const Error& e) {
      out.unavailable_reason[name] = e.what();
      value.reset();
    }
    out.scores[name] = value;
  }
  return out;
}

}  // namespace halluguard
