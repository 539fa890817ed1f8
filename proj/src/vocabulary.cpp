#include "slp/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "slp/errors.hpp"

namespace slp::text {

namespace {

bool is_separator(unsigned char c) {
  if (c >= 0x80) return false;
  return std::isspace(c) != 0 || std::ispunct(c) != 0;
}

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> specials = {"<pad>", "<bos>", "<eos>", "<unk>"};
  return specials;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_separator(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary::Vocabulary() : tokens_(special_tokens()) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = static_cast<int>(i);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& sentences) {
  std::set<std::string> distinct;
  for (const auto& s : sentences) {
    for (auto& t : tokenize(s)) distinct.insert(std::move(t));
  }
  Vocabulary v;
  for (const auto& t : distinct) {
    if (v.index_.count(t) != 0) continue;
    v.index_[t] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(t);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  const auto& specials = special_tokens();
  if (tokens.size() < specials.size() || !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw FormatError("vocabulary must start with the four special tokens");
  }
  Vocabulary v;
  for (std::size_t i = specials.size(); i < tokens.size(); ++i) {
    if (!v.index_.emplace(tokens[i], static_cast<int>(v.tokens_.size())).second) {
      throw FormatError("duplicate vocabulary token '" + tokens[i] + "'");
    }
    v.tokens_.push_back(tokens[i]);
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw InputError("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& t : tokenize(text)) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (const int i : ids) {
    if (i < kNumSpecials) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(i);
  }
  return out;
}

}  // namespace slp::text
