#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "halluguard/tinylm/train.hpp"
#include "halluguard/tinylm/vocabulary.hpp"

namespace halluguard::tinylm {

// A prompt and the continuation the model should produce for it.
struct Example {
  std::string prompt;
  std::string answer;
  bool operator==(const Example&) const = default;
};

// Every "ab+cd=" with zero-padded operands in [0, max_operand] and the sum
// as three zero-padded digits.
std::vector<Example> addition_examples(int max_operand = 99);

inline constexpr const char* kCopyAlphabet = "abcdefgh|";

// "<s>|" -> "<s>" for random strings s over a-h.
std::vector<Example> copy_examples(int count, int min_len, int max_len, std::uint64_t seed);

// BOS prompt answer EOS, supervised on the answer and EOS.
Sequence to_sequence(const Vocabulary& vocab, const Example& example);
std::vector<Sequence> to_sequences(const Vocabulary& vocab, const std::vector<Example>& examples);

// One example per line; a tab separates prompt from answer. Lines without a
// tab are whole sequences supervised everywhere (empty prompt).
std::vector<Example> read_corpus(std::istream& in);
void write_corpus(std::ostream& out, const std::vector<Example>& examples);

}  // namespace halluguard::tinylm
