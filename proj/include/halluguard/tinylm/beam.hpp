#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "halluguard/bundle.hpp"
#include "halluguard/tinylm/model.hpp"
#include "halluguard/tinylm/sample.hpp"
#include "halluguard/tinylm/vocabulary.hpp"

namespace halluguard::tinylm {

// Reliability of a candidate prefix judged from a bundle of sampled
// continuations; higher means more reliable. May throw halluguard::Error.
using CandidateScorer = std::function<double(const TrajectoryBundle&)>;

struct BeamConfig {
  int beam = 10;
  int max_steps = 8;
  // Weight of the reliability z-score against the log-probability z-score;
  // 0 gives plain beam search.
  double weight = 0.5;
  int rerank_every = 1;
  int rerank_pool = 0;  // 0 = 2 * beam
  DecodeConfig probe;   // continuations sampled per candidate, probe.k of them
  std::uint64_t seed = kDefaultSeed;

  void validate() const;
};

struct BeamResult {
  std::vector<TokenId> tokens;  // includes EOS when produced
  std::string text;
  double logprob = 0.0;  // summed, unscaled model log-probability
  double score = 0.0;    // length-normalized logprob
  int scorer_calls = 0;
  int scorer_failures = 0;
};

// Beam search ranked by length-normalized log-probability. With weight > 0
// every rerank_every steps the top rerank_pool expansions are re-ranked by
// (1 - w) z(logprob) + w z(reliability); a candidate whose scorer throws
// keeps only its logprob term. Stops once the best candidate has emitted EOS.
BeamResult beam_search(const TinyLM& model, const Vocabulary& vocab, const std::string& prompt,
                       const BeamConfig& config, const CandidateScorer& scorer = {});

}  // namespace halluguard::tinylm
