#pragma once

#include "halluguard/tinylm/corpus.hpp"
#include "halluguard/tinylm/model.hpp"
#include "halluguard/tinylm/train.hpp"
#include "halluguard/tinylm/vocabulary.hpp"

namespace hgtest {

// Untrained model with small dimensions, for derivative checks.
inline halluguard::tinylm::TinyLM random_model(int vocab, int d = 16, int layers = 2, std::uint64_t seed = 1) {
  halluguard::tinylm::TinyLMConfig c;
  c.vocab_size = vocab;
  c.d_model = d;
  c.d_ff = 2 * d;
  c.n_layers = layers;
  c.seed = seed;
  return halluguard::tinylm::TinyLM(c);
}

// Memorizes the 100 one-digit additions; trained once per process.
inline const halluguard::tinylm::TinyLM& small_addition_model() {
  using namespace halluguard::tinylm;
  static const TinyLM model = [] {
    const Vocabulary vocab = Vocabulary::arithmetic();
    TinyLM m = random_model(vocab.size(), 16, 2);
    TrainConfig tc;
    tc.steps = 800;
    train_tiny_lm(m, to_sequences(vocab, addition_examples(9)), tc);
    return m;
  }();
  return model;
}

}  // namespace hgtest
