#include <gtest/gtest.h>

#include "halluguard/error.hpp"
#include "halluguard/tinylm/beam.hpp"
#include "halluguard/tinylm/corpus.hpp"
#include "halluguard/tinylm/sample.hpp"
#include "tiny_models.hpp"

using namespace halluguard;
using namespace halluguard::tinylm;

namespace {

double replay_logprob(const TinyLM& m, const Vocabulary& vocab, const std::string& prompt,
                      const std::vector<TokenId>& tokens) {
  Runner r(m, 1);
  for (TokenId t : prompt_context(vocab, prompt)) r.feed({t});
  double lp = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    lp += log_softmax(r.logits().row(0).transpose())(tokens[i]);
    if (i + 1 < tokens.size()) r.feed({tokens[i]});
  }
  return lp;
}

BeamConfig small_config() {
  BeamConfig c;
  c.beam = 3;
  c.max_steps = 5;
  c.probe.k = 3;
  c.probe.max_steps = 3;
  return c;
}

}  // namespace

TEST(BeamSearch, ZeroWeightIsVanilla) {
  const auto& m = hgtest::small_addition_model();
  const Vocabulary vocab = Vocabulary::arithmetic();
  int calls = 0;
  CandidateScorer scorer = [&](const TrajectoryBundle&) {
    ++calls;
    return 1.0;
  };
  BeamConfig c = small_config();
  c.weight = 0.0;
  for (const auto& e : addition_examples(9)) {
    if (e.prompt[0] != '0' || e.prompt[3] > '3') continue;
    const BeamResult vanilla = beam_search(m, vocab, e.prompt, c);
    const BeamResult with = beam_search(m, vocab, e.prompt, c, scorer);
    EXPECT_EQ(vanilla.tokens, with.tokens);
    EXPECT_EQ(vanilla.logprob, with.logprob);
    EXPECT_NEAR(vanilla.logprob, replay_logprob(m, vocab, e.prompt, vanilla.tokens), 1e-9);
  }
  EXPECT_EQ(calls, 0);
}

TEST(BeamSearch, WidthOneIsGreedy) {
  const auto& m = hgtest::small_addition_model();
  const Vocabulary vocab = Vocabulary::arithmetic();
  BeamConfig c = small_config();
  c.beam = 1;
  c.weight = 0.0;
  DecodeConfig greedy;
  greedy.greedy = true;
  greedy.k = 2;
  greedy.max_steps = 5;
  // An untrained model exercises paths that do not stop at EOS early.
  const TinyLM raw = hgtest::random_model(vocab.size(), 16, 2, 21);
  for (const TinyLM* model : {&m, &raw}) {
    for (const auto& e : addition_examples(9)) {
      if (e.prompt[1] != '5') continue;
      const BeamResult b = beam_search(*model, vocab, e.prompt, c);
      const auto g = sample_k(*model, vocab, "g", e.prompt, greedy);
      EXPECT_EQ(b.tokens, g.generations[0].tokens) << e.prompt;
    }
  }
}

TEST(BeamSearch, WiderBeamNeverScoresWorse) {
  const TinyLM raw = hgtest::random_model(15, 16, 2, 22);
  const Vocabulary vocab = Vocabulary::arithmetic();
  BeamConfig narrow = small_config();
  narrow.weight = 0.0;
  narrow.beam = 1;
  narrow.max_steps = 2;
  BeamConfig wide = narrow;
  wide.beam = 200;  // exhaustive over two steps
  const BeamResult a = beam_search(raw, vocab, "1+2=", narrow);
  const BeamResult b = beam_search(raw, vocab, "1+2=", wide);
  EXPECT_GE(b.score, a.score - 1e-12);
}

TEST(BeamSearch, ReliabilitySteersChoice) {
  const auto& m = hgtest::small_addition_model();
  const Vocabulary vocab = Vocabulary::arithmetic();
  const std::string prompt = "03+04=";
  CandidateScorer prefers_nine = [&](const TrajectoryBundle& b) {
    const std::string partial = b.prompt_text.substr(prompt.size());
    return !partial.empty() && partial[0] == '9' ? 1.0 : 0.0;
  };
  BeamConfig c = small_config();
  c.weight = 1.0;
  c.rerank_pool = 1000;
  const BeamResult r = beam_search(m, vocab, prompt, c, prefers_nine);
  ASSERT_FALSE(r.text.empty());
  EXPECT_EQ(r.text[0], '9');
  EXPECT_GT(r.scorer_calls, 0);
  EXPECT_EQ(r.scorer_failures, 0);
  c.weight = 0.0;
  EXPECT_EQ(beam_search(m, vocab, prompt, c).text, "007");
}

TEST(BeamSearch, FailingScorerFallsBackToLogprob) {
  const auto& m = hgtest::small_addition_model();
  const Vocabulary vocab = Vocabulary::arithmetic();
  CandidateScorer broken = [](const TrajectoryBundle&) -> double {
    throw Error(ErrorCode::kInsufficientSteps, "nope");
  };
  BeamConfig c = small_config();
  c.weight = 0.5;
  const BeamResult r = beam_search(m, vocab, "03+04=", c, broken);
  EXPECT_EQ(r.scorer_failures, r.scorer_calls);
  EXPECT_GT(r.scorer_calls, 0);
  c.weight = 0.0;
  EXPECT_EQ(r.tokens, beam_search(m, vocab, "03+04=", c).tokens);
}

TEST(BeamSearch, Validation) {
  const auto& m = hgtest::small_addition_model();
  const Vocabulary vocab = Vocabulary::arithmetic();
  BeamConfig c = small_config();
  EXPECT_THROW(beam_search(m, vocab, "1+2=", c), Error);  // weight > 0 without scorer
  c.weight = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.beam = 0;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.weight = 0;
  c.max_steps = 15;
  EXPECT_THROW(beam_search(m, vocab, "1+2=", c), Error);
}
