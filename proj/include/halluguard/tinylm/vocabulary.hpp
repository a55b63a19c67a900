#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "halluguard/bundle.hpp"

namespace halluguard::tinylm {

// Character-level vocabulary: three special tokens followed by one token per
// alphabet character.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kFirstChar = 3;

  explicit Vocabulary(std::string alphabet);

  // Digits plus '+' and '='.
  static Vocabulary arithmetic();

  int size() const { return static_cast<int>(kFirstChar + alphabet_.size()); }
  const std::string& alphabet() const { return alphabet_; }

  // Throws Error(kInvalidArgument) for a character outside the alphabet.
  std::vector<TokenId> encode(std::string_view text) const;
  // Special tokens are dropped.
  std::string decode(const std::vector<TokenId>& tokens) const;
  bool is_special(TokenId t) const { return t < kFirstChar; }

 private:
  std::string alphabet_;
  int index_[256];
};

}  // namespace halluguard::tinylm
