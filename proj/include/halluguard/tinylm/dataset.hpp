#pragma once

#include <string>
#include <vector>

#include "halluguard/bundle.hpp"
#include "halluguard/eval.hpp"
#include "halluguard/tinylm/corpus.hpp"
#include "halluguard/tinylm/model.hpp"
#include "halluguard/tinylm/sample.hpp"
#include "halluguard/tinylm/vocabulary.hpp"

namespace halluguard::tinylm {

enum class Corruption { kNone, kHighTemperature, kStateNoise };

const char* corruption_name(Corruption mode);
// "none", "high-temp" or "state-noise"; Error(kInvalidArgument) otherwise.
Corruption parse_corruption(const std::string& name);

struct CorruptionConfig {
  Corruption mode = Corruption::kNone;
  // State noise: per-coordinate std is rho * noise_unit.
  double rho = 0.0;
  double noise_unit = 0.25;
  double high_temperature = 1.5;

  void validate() const;
};

struct LabeledPrompt {
  std::string prompt_id;
  std::string prompt;
  std::vector<std::string> references;
};

// "p00017"-style ids in example order, the answer as the only reference.
std::vector<LabeledPrompt> labeled_prompts(const std::vector<Example>& examples);

// The decode settings sample_k runs with under a corruption.
DecodeConfig corrupted_decode(const DecodeConfig& decode, const CorruptionConfig& corruption);

// One bundle per prompt (seeded per prompt id), labeled by ROUGE-L of
// generation 0 against the references.
std::vector<TrajectoryBundle> make_labeled_dataset(const TinyLM& model, const Vocabulary& vocab,
                                                   const std::vector<LabeledPrompt>& prompts,
                                                   const DecodeConfig& decode,
                                                   const CorruptionConfig& corruption = {},
                                                   double rouge_tau = kDefaultRougeTau);

// Fraction of bundles labeled hallucinated.
double hallucination_rate(const std::vector<TrajectoryBundle>& bundles);

}  // namespace halluguard::tinylm
