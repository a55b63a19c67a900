#include "halluguard/tinylm/vocabulary.hpp"

#include <algorithm>

#include "halluguard/error.hpp"

namespace halluguard::tinylm {

Vocabulary::Vocabulary(std::string alphabet) : alphabet_(std::move(alphabet)) {
  std::fill(std::begin(index_), std::end(index_), -1);
  for (std::size_t i = 0; i < alphabet_.size(); ++i) {
    const auto c = static_cast<unsigned char>(alphabet_[i]);
    if (index_[c] != -1) {
      throw Error(ErrorCode::kInvalidArgument, std::string("duplicate character '") + alphabet_[i] + "'");
    }
    if (c == '\n' || c == '\t') {
      throw Error(ErrorCode::kInvalidArgument, "alphabet may not contain tabs or newlines");
    }
    index_[c] = static_cast<int>(i);
  }
  if (alphabet_.empty()) throw Error(ErrorCode::kInvalidArgument, "empty alphabet");
}

Vocabulary Vocabulary::arithmetic() { return Vocabulary("0123456789+="); }

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  out.reserve(text.size());
  for (char ch : text) {
    const int i = index_[static_cast<unsigned char>(ch)];
    if (i < 0) throw Error(ErrorCode::kInvalidArgument, std::string("character '") + ch + "' not in vocabulary");
    out.push_back(kFirstChar + static_cast<TokenId>(i));
  }
  return out;
}

std::string Vocabulary::decode(const std::vector<TokenId>& tokens) const {
  std::string out;
  for (TokenId t : tokens) {
    if (is_special(t) || t >= static_cast<TokenId>(size())) continue;
    out += alphabet_[t - kFirstChar];
  }
  return out;
}

}  // namespace halluguard::tinylm
