#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace halluguard {

using TokenId = std::uint32_t;

// One sampled continuation. Per-step vectors all have length T = tokens.size().
struct Generation {
  std::vector<TokenId> tokens;
  std::vector<float> logprob;       // chosen-token log-probability, nats
  std::vector<float> step_entropy;  // entropy of the next-token distribution
  std::vector<float> step_lse;      // log-sum-exp of the raw logits
  std::string text;
  std::vector<float> sent_embed;    // length d
  // Row-major T x d, present only when the exporter kept per-step states.
  std::optional<std::vector<float>> step_states;

  std::size_t steps() const { return tokens.size(); }
  bool has_states() const { return step_states.has_value(); }

  // Copies step_states into a T x d matrix; requires has_states().
  Eigen::MatrixXd states_matrix(std::size_t embed_dim) const;

  bool operator==(const Generation&) const = default;
};

// One prompt's K sampled generations plus everything needed for model-free
// scoring. label: 1 = hallucinated.
struct TrajectoryBundle {
  std::string prompt_id;
  std::string prompt_text;
  std::vector<std::string> references;
  std::vector<Generation> generations;
  std::optional<std::uint8_t> label;
  std::optional<float> rouge_to_ref;
  std::uint32_t embed_dim = 0;
  std::map<std::string, std::string> meta;

  std::size_t k() const { return generations.size(); }

  // K x d matrix of sentence embeddings.
  Eigen::MatrixXd embedding_matrix() const;

  bool operator==(const TrajectoryBundle&) const = default;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Checks every structural invariant of the bundle; never throws.
ValidationReport validate_bundle(const TrajectoryBundle& bundle);

}  // namespace halluguard
