#include <gtest/gtest.h>

#include "halluguard/error.hpp"
#include "halluguard/eval.hpp"
#include "halluguard/tinylm/corpus.hpp"
#include "halluguard/tinylm/dataset.hpp"
#include "halluguard/tinylm/sample.hpp"
#include "tiny_models.hpp"

using namespace halluguard;
using namespace halluguard::tinylm;

TEST(Corruption, Names) {
  for (Corruption c : {Corruption::kNone, Corruption::kHighTemperature, Corruption::kStateNoise}) {
    EXPECT_EQ(parse_corruption(corruption_name(c)), c);
  }
  EXPECT_THROW(parse_corruption("loud"), Error);
}

TEST(Corruption, Decode) {
  DecodeConfig d;
  CorruptionConfig c;
  c.mode = Corruption::kStateNoise;
  c.rho = 1.5;
  EXPECT_DOUBLE_EQ(corrupted_decode(d, c).state_noise, 1.5 * c.noise_unit);
  EXPECT_EQ(corrupted_decode(d, c).temperature, d.temperature);
  c.mode = Corruption::kHighTemperature;
  EXPECT_EQ(corrupted_decode(d, c).temperature, c.high_temperature);
  EXPECT_EQ(corrupted_decode(d, c).state_noise, 0.0);
  c.mode = Corruption::kStateNoise;
  c.rho = -1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(LabeledPrompts, Ids) {
  const auto p = labeled_prompts(addition_examples(9));
  ASSERT_EQ(p.size(), 100u);
  EXPECT_EQ(p[17].prompt_id, "p00017");
  EXPECT_EQ(p[17].prompt, "01+07=");
  EXPECT_EQ(p[17].references, std::vector<std::string>{"008"});
}

TEST(Dataset, NoCorruptionOnMemorizedCorpus) {
  const auto& m = hgtest::small_addition_model();
  const Vocabulary vocab = Vocabulary::arithmetic();
  DecodeConfig d;
  d.k = 4;
  const auto data = make_labeled_dataset(m, vocab, labeled_prompts(addition_examples(9)), d);
  ASSERT_EQ(data.size(), 100u);
  for (const auto& b : data) {
    ASSERT_TRUE(b.label.has_value());
    ASSERT_TRUE(b.rouge_to_ref.has_value());
    EXPECT_TRUE(validate_bundle(b).ok);
    EXPECT_EQ(b.meta.at("corruption"), "none");
    EXPECT_EQ(*b.label, label_by_rouge(b.generations[0].text, b.references));
  }
  EXPECT_LT(hallucination_rate(data), 0.1);
}

TEST(Dataset, OracleReferences) {
  const TinyLM raw = hgtest::random_model(15, 16, 2, 31);
  const Vocabulary vocab = Vocabulary::arithmetic();
  DecodeConfig d;
  d.greedy = true;
  d.k = 2;
  d.max_steps = 4;
  std::vector<LabeledPrompt> prompts;
  for (const auto& p : labeled_prompts(addition_examples(4))) {
    LabeledPrompt q = p;
    q.references = {sample_k(raw, vocab, q.prompt_id, q.prompt, d).generations[0].text};
    if (q.references[0].empty()) continue;  // ROUGE of empty strings is 0
    prompts.push_back(q);
  }
  ASSERT_GT(prompts.size(), 5u);
  EXPECT_EQ(hallucination_rate(make_labeled_dataset(raw, vocab, prompts, d)), 0.0);
}

TEST(Dataset, NoiseRaisesRate) {
  const auto& m = hgtest::small_addition_model();
  const Vocabulary vocab = Vocabulary::arithmetic();
  DecodeConfig d;
  d.k = 2;
  CorruptionConfig c;
  c.mode = Corruption::kStateNoise;
  const auto prompts = labeled_prompts(addition_examples(9));
  c.rho = 0.5;
  const double low = hallucination_rate(make_labeled_dataset(m, vocab, prompts, d, c));
  c.rho = 4.0;
  const double high = hallucination_rate(make_labeled_dataset(m, vocab, prompts, d, c));
  EXPECT_GT(high, low);
}

TEST(Dataset, Errors) {
  const auto& m = hgtest::small_addition_model();
  const Vocabulary vocab = Vocabulary::arithmetic();
  std::vector<LabeledPrompt> p{{"x", "1+2=", {}}};
  EXPECT_THROW(make_labeled_dataset(m, vocab, p, DecodeConfig{}), Error);
  EXPECT_THROW(hallucination_rate({}), Error);
}
