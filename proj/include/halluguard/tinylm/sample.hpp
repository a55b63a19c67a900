#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "halluguard/bundle.hpp"
#include "halluguard/tinylm/model.hpp"
#include "halluguard/tinylm/vocabulary.hpp"

namespace halluguard::tinylm {

struct DecodeConfig {
  double temperature = 0.5;
  double top_p = 0.95;
  int top_k = 10;
  int k = 10;
  int max_steps = 8;
  bool greedy = false;
  std::uint64_t seed = kDefaultSeed;
  // Standard deviation (per coordinate) of Gaussian noise added to the
  // mid-layer state at every position; 0 disables it.
  double state_noise = 0.0;

  // Throws Error(kInvalidArgument) naming the offending field.
  void validate() const;
};

// Renormalized sampling distribution after temperature, top-k and top-p;
// greedy keeps only the arg-max. Support is sorted by descending probability
// with ties broken by token id. PAD and BOS are never sampled.
struct StepDistribution {
  std::vector<TokenId> support;
  std::vector<double> probs;
};

StepDistribution truncate_distribution(const Eigen::VectorXd& logits, const DecodeConfig& decode);

// One sampled continuation with its per-step statistics.
struct Rollout {
  std::vector<TokenId> tokens;  // includes the final EOS when produced
  std::vector<float> logprob;
  std::vector<float> step_entropy;
  std::vector<float> step_lse;
  Eigen::MatrixXd states;       // T x d, state at the position predicting token t
  // State at the position fed the last non-EOS token of prompt + rollout.
  Eigen::VectorXd final_state;
};

// K continuations of `context` (BOS + prompt [+ partial answer]); row i draws
// from its own stream derive_seed(seed, i). Needs context.size() +
// max_steps <= context_len (Error(kContextOverflow)).
std::vector<Rollout> sample_rollouts(const TinyLM& model, const std::vector<TokenId>& context,
                                     const DecodeConfig& decode, int k, std::uint64_t seed);

Generation to_generation(const Vocabulary& vocab, const Rollout& rollout);

// K generations of `prompt` as a trajectory bundle (unlabeled).
TrajectoryBundle sample_k(const TinyLM& model, const Vocabulary& vocab, const std::string& prompt_id,
                          const std::string& prompt, const DecodeConfig& decode,
                          const std::vector<std::string>& references = {});

std::vector<TokenId> prompt_context(const Vocabulary& vocab, const std::string& prompt);

}  // namespace halluguard::tinylm
