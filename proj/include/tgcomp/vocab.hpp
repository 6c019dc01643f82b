#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace tgc {

/// Token <-> index map. Index 0 is reserved for the unknown token.
class Vocab {
 public:
  static constexpr int kUnknown = 0;
  static constexpr const char* kUnknownToken = "<unk>";

  Vocab() : tokens_{kUnknownToken} {}

  int add(const std::string& token) {
    if (auto it = index_.find(token); it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
  }

  int lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnknown : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw std::out_of_range("Vocab: index " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<std::size_t>(id)];
  }

  /// Number of indices including the unknown slot.
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocab from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.empty() || tokens.front() != kUnknownToken) {
      throw std::invalid_argument("Vocab: token list must start with " +
                                  std::string(kUnknownToken));
    }
    Vocab v;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      if (v.contains(tokens[i])) throw std::invalid_argument("Vocab: duplicate token " + tokens[i]);
      v.add(tokens[i]);
    }
    return v;
  }

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace tgc
