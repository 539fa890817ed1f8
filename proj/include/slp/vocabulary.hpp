#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace slp::text {

/// Lowercases ASCII letters and splits on whitespace and ASCII punctuation.
/// Non-ASCII bytes are kept inside tokens untouched.
std::vector<std::string> tokenize(std::string_view text);

/// Token <-> id table with fixed special ids PAD=0, BOS=1, EOS=2, UNK=3.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  Vocabulary();

  /// Specials followed by the distinct tokens of `sentences` in sorted order.
  static Vocabulary build(const std::vector<std::string>& sentences);

  /// Rebuilds from a full token list whose first four entries are the specials.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
  [[nodiscard]] int id(std::string_view token) const;
  [[nodiscard]] const std::string& token(int id) const;
  [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// tokenize() then id(); out-of-vocabulary words become UNK.
  [[nodiscard]] std::vector<int> encode(std::string_view text) const;

  /// Space-joined tokens with special ids skipped.
  [[nodiscard]] std::string decode(std::span<const int> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace slp::text
