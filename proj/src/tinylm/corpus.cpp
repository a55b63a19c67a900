#include "halluguard/tinylm/corpus.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <random>

#include "halluguard/error.hpp"
#include "halluguard/seed.hpp"

namespace halluguard::tinylm {

std::vector<Example> addition_examples(int max_operand) {
  if (max_operand < 0 || max_operand > 99) {
    throw Error(ErrorCode::kInvalidArgument, "max_operand must lie in [0, 99]");
  }
  std::vector<Example> out;
  char prompt[16], answer[8];
  for (int a = 0; a <= max_operand; ++a) {
    for (int b = 0; b <= max_operand; ++b) {
      std::snprintf(prompt, sizeof prompt, "%02d+%02d=", a, b);
      std::snprintf(answer, sizeof answer, "%03d", a + b);
      out.push_back({prompt, answer});
    }
  }
  return out;
}

std::vector<Example> copy_examples(int count, int min_len, int max_len, std::uint64_t seed) {
  if (count < 0 || min_len < 1 || max_len < min_len) {
    throw Error(ErrorCode::kInvalidArgument, "need count >= 0 and 1 <= min_len <= max_len");
  }
  std::mt19937_64 rng(derive_seed(seed, "tinylm.copy"));
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<int> letter(0, 7);
  std::vector<Example> out;
  for (int i = 0; i < count; ++i) {
    std::string s;
    const int n = len(rng);
    for (int j = 0; j < n; ++j) s += static_cast<char>('a' + letter(rng));
    out.push_back({s + "|", s});
  }
  return out;
}

Sequence to_sequence(const Vocabulary& vocab, const Example& example) {
  Sequence s;
  s.tokens.push_back(Vocabulary::kBos);
  const auto p = vocab.encode(example.prompt);
  const auto a = vocab.encode(example.answer);
  s.tokens.insert(s.tokens.end(), p.begin(), p.end());
  s.tokens.insert(s.tokens.end(), a.begin(), a.end());
  s.tokens.push_back(Vocabulary::kEos);
  s.loss_from = 1 + static_cast<int>(p.size());
  return s;
}

std::vector<Sequence> to_sequences(const Vocabulary& vocab, const std::vector<Example>& examples) {
  std::vector<Sequence> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(to_sequence(vocab, e));
  return out;
}

std::vector<Example> read_corpus(std::istream& in) {
  std::vector<Example> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      out.push_back({"", line});
    } else {
      out.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
  }
  return out;
}

void write_corpus(std::ostream& out, const std::vector<Example>& examples) {
  for (const auto& e : examples) {
    if (!e.prompt.empty()) out << e.prompt << '\t';
    out << e.answer << '\n';
  }
}

}  // namespace halluguard::tinylm
