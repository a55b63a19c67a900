#include "halluguard/tinylm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "halluguard/detectors.hpp"
#include "halluguard/error.hpp"

namespace halluguard::tinylm {

const char* corruption_name(Corruption mode) {
  switch (mode) {
    case Corruption::kNone: return "none";
    case Corruption::kHighTemperature: return "high-temp";
    case Corruption::kStateNoise: return "state-noise";
  }
  return "?";
}

Corruption parse_corruption(const std::string& name) {
  for (Corruption c : {Corruption::kNone, Corruption::kHighTemperature, Corruption::kStateNoise}) {
    if (name == corruption_name(c)) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown corruption '" + name + "' (none, high-temp, state-noise)");
}

void CorruptionConfig::validate() const {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw Error(ErrorCode::kInvalidArgument, "rho must be >= 0");
  if (!(noise_unit > 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_unit must be > 0");
  if (!(high_temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "high_temperature must be > 0");
}

std::vector<LabeledPrompt> labeled_prompts(const std::vector<Example>& examples) {
  std::vector<LabeledPrompt> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "p%05zu", i);
    out.push_back({id, examples[i].prompt, {examples[i].answer}});
  }
  return out;
}

DecodeConfig corrupted_decode(const DecodeConfig& decode, const CorruptionConfig& corruption) {
  corruption.validate();
  DecodeConfig d = decode;
  switch (corruption.mode) {
    case Corruption::kNone: break;
    case Corruption::kHighTemperature: d.temperature = corruption.high_temperature; break;
    case Corruption::kStateNoise: d.state_noise = corruption.rho * corruption.noise_unit; break;
  }
  return d;
}

std::vector<TrajectoryBundle> make_labeled_dataset(const TinyLM& model, const Vocabulary& vocab,
                                                   const std::vector<LabeledPrompt>& prompts,
                                                   const DecodeConfig& decode,
                                                   const CorruptionConfig& corruption, double rouge_tau) {
  const DecodeConfig d = corrupted_decode(decode, corruption);
  std::vector<TrajectoryBundle> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) {
    if (p.references.empty()) throw Error(ErrorCode::kInvalidArgument, "prompt " + p.prompt_id + " has no references");
    TrajectoryBundle b = sample_k(model, vocab, p.prompt_id, p.prompt, d, p.references);
    double best = 0.0;
    for (const auto& r : p.references) best = std::max(best, rouge_l(b.generations[0].text, r));
    b.rouge_to_ref = static_cast<float>(best);
    b.label = static_cast<std::uint8_t>(label_by_rouge(b.generations[0].text, p.references, rouge_tau));
    b.meta["corruption"] = corruption_name(corruption.mode);
    if (corruption.mode == Corruption::kStateNoise) b.meta["rho"] = std::to_string(corruption.rho);
    out.push_back(std::move(b));
  }
  return out;
}

double hallucination_rate(const std::vector<TrajectoryBundle>& bundles) {
  if (bundles.empty()) throw Error(ErrorCode::kInsufficientData, "no bundles");
  double n = 0.0;
  for (const auto& b : bundles) n += b.label.value_or(0);
  return n / static_cast<double>(bundles.size());
}

}  // namespace halluguard::tinylm
