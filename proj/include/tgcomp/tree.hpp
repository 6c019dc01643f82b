#pragma once

// Constituency trees: the n-ary string form read from treebank files, its
// binarization, and the compact binary form consumed by the models.

#include <cctype>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tgcomp/vocab.hpp"

namespace tgc {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// n-ary tree with string labels. A leaf carries a word and no children.
struct RawTree {
  std::string tag;
  std::optional<int> label;
  std::string word;
  std::vector<RawTree> children;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const RawTree&) const = default;
};

namespace detail {

class SexprReader {
 public:
  explicit SexprReader(std::string_view text) : s_(text) {}

  RawTree node() {
    skip_ws();
    const std::size_t open = pos_;
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    if (s_[pos_] != '(') throw ParseError("expected '('", pos_);
    ++pos_;
    skip_ws();
    RawTree t;
    if (pos_ < s_.size() && s_[pos_] == ')') throw ParseError("empty node", open);
    const std::size_t tag_at = pos_;
    std::string head = token();
    split_label(head, tag_at, t);
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unbalanced parentheses", open);
    if (s_[pos_] == ')') throw ParseError("empty node", open);
    if (s_[pos_] != '(') {
      if (t.tag.empty()) throw ParseError("leaf without a tag", open);
      t.word = token();
      skip_ws();
      if (pos_ >= s_.size()) throw ParseError("unbalanced parentheses", open);
      if (s_[pos_] != ')') throw ParseError("expected ')' after leaf word", pos_);
      ++pos_;
      return t;
    }
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) throw ParseError("unbalanced parentheses", open);
      if (s_[pos_] == ')') {
        ++pos_;
        return t;
      }
      if (s_[pos_] != '(') throw ParseError("expected '(' or ')'", pos_);
      t.children.push_back(node());
    }
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string token() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '(' && s_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
    }
    return std::string(s_.substr(start, pos_ - start));
  }

  // `TAG#3` -> tag TAG, label 3. A leading '#' is part of the tag (PTB "#").
  static void split_label(const std::string& head, std::size_t at, RawTree& t) {
    const std::size_t hash = head.rfind('#');
    if (hash == std::string::npos || hash == 0) {
      t.tag = head;
      return;
    }
    const std::string digits = head.substr(hash + 1);
    if (digits.empty()) throw ParseError("empty label after '#'", at + hash);
    for (char c : digits) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw ParseError("label is not a non-negative integer", at + hash + 1);
      }
    }
    if (digits.size() > 9) throw ParseError("label out of range", at + hash + 1);
    t.tag = head.substr(0, hash);
    t.label = std::stoi(digits);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses exactly one parenthesized tree; trailing non-space text is an error.
inline RawTree parse_sexpr(std::string_view text) {
  detail::SexprReader r(text);
  RawTree t = r.node();
  if (!r.at_end()) throw ParseError("trailing characters after tree", r.pos());
  return t;
}

/// Parses a sequence of trees (e.g. a multi-line treebank file).
inline std::vector<RawTree> parse_sexpr_all(std::string_view text) {
  detail::SexprReader r(text);
  std::vector<RawTree> out;
  while (!r.at_end()) out.push_back(r.node());
  return out;
}

inline void serialize(const RawTree& t, std::string& out) {
  out += '(';
  out += t.tag;
  if (t.label) {
    out += '#';
    out += std::to_string(*t.label);
  }
  if (t.is_leaf()) {
    out += ' ';
    out += t.word;
  } else {
    for (const auto& c : t.children) {
      out += ' ';
      serialize(c, out);
    }
  }
  out += ')';
}

inline std::string serialize(const RawTree& t) {
  std::string s;
  serialize(t, s);
  return s;
}

enum class Binarization { Right, Left };

inline Binarization binarization_from_string(const std::string& s) {
  if (s == "right") return Binarization::Right;
  if (s == "left") return Binarization::Left;
  throw std::invalid_argument("binarize: expected 'right' or 'left', got '" + s + "'");
}

/// Makes a tree strictly binary. Nodes with more than two children become
/// chains of synthetic `@TAG` nodes; unary nodes collapse onto their child,
/// which keeps its own tag and inherits the label only if it has none.
inline RawTree binarize(RawTree t, Binarization dir = Binarization::Right) {
  if (t.is_leaf()) return t;
  if (t.children.size() == 1) {
    RawTree child = binarize(std::move(t.children.front()), dir);
    if (!child.label) child.label = t.label;
    return child;
  }
  std::vector<RawTree> kids;
  kids.reserve(t.children.size());
  for (auto& c : t.children) kids.push_back(binarize(std::move(c), dir));

  const std::string synth = (!t.tag.empty() && t.tag.front() == '@') ? t.tag : "@" + t.tag;
  auto make = [&](std::string tag, std::optional<int> label, RawTree a, RawTree b) {
    RawTree n;
    n.tag = std::move(tag);
    n.label = label;
    n.children.push_back(std::move(a));
    n.children.push_back(std::move(b));
    return n;
  };

  if (dir == Binarization::Right) {
    RawTree acc = std::move(kids.back());
    for (std::size_t i = kids.size() - 1; i-- > 1;) {
      acc = make(synth, std::nullopt, std::move(kids[i]), std::move(acc));
    }
    return make(t.tag, t.label, std::move(kids[0]), std::move(acc));
  }
  RawTree acc = std::move(kids.front());
  for (std::size_t i = 1; i + 1 < kids.size(); ++i) {
    acc = make(synth, std::nullopt, std::move(acc), std::move(kids[i]));
  }
  return make(t.tag, t.label, std::move(acc), std::move(kids.back()));
}

inline void leaf_words(const RawTree& t, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    out.push_back(t.word);
    return;
  }
  for (const auto& c : t.children) leaf_words(c, out);
}

/// True iff every inner node has exactly two children.
inline bool is_binary(const RawTree& t) {
  if (t.is_leaf()) return true;
  if (t.children.size() != 2) return false;
  return is_binary(t.children[0]) && is_binary(t.children[1]);
}

inline constexpr int kNoLabel = -1;

/// Node of a compiled binary tree. Children are indices into Tree::nodes.
struct TreeNode {
  int tag = 0;
  int word = -1;
  int label = kNoLabel;
  int left = -1;
  int right = -1;

  bool is_leaf() const { return left < 0; }
  bool has_label() const { return label >= 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Strictly binary tree stored in post-order; the root is the last node.
struct Tree {
  std::vector<TreeNode> nodes;

  int root() const { return static_cast<int>(nodes.size()) - 1; }
  const TreeNode& operator[](int i) const { return nodes[static_cast<std::size_t>(i)]; }
  TreeNode& operator[](int i) { return nodes[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return nodes.size(); }
  const TreeNode& root_node() const { return nodes.back(); }

  std::size_t num_leaves() const {
    std::size_t n = 0;
    for (const auto& nd : nodes) n += nd.is_leaf() ? 1 : 0;
    return n;
  }

  bool operator==(const Tree&) const = default;

  /// Throws unless the node array is a well-formed post-order binary tree.
  void validate() const {
    if (nodes.empty()) throw std::invalid_argument("tree: empty");
    std::vector<int> parents(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& n = nodes[i];
      const bool l = n.left >= 0, r = n.right >= 0;
      if (l != r) throw std::invalid_argument("tree: non-binary node " + std::to_string(i));
      if (l) {
        if (n.word >= 0) throw std::invalid_argument("tree: inner node with word");
        if (n.left >= static_cast<int>(i) || n.right >= static_cast<int>(i)) {
          throw std::invalid_argument("tree: children must precede parent");
        }
        ++parents[static_cast<std::size_t>(n.left)];
        ++parents[static_cast<std::size_t>(n.right)];
      } else if (n.word < 0) {
        throw std::invalid_argument("tree: leaf without word");
      }
    }
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      if (parents[i] != 1) throw std::invalid_argument("tree: node " + std::to_string(i) + " not attached once");
    }
    if (parents.back() != 0) throw std::invalid_argument("tree: root has a parent");
  }
};

namespace detail {
template <typename WordId, typename TagId>
int compile_node(const RawTree& t, WordId& word_id, TagId& tag_id, Tree& out) {
  TreeNode n;
  n.tag = tag_id(t.tag);
  n.label = t.label.value_or(kNoLabel);
  if (t.is_leaf()) {
    n.word = word_id(t.word);
  } else {
    if (t.children.size() != 2) {
      throw std::invalid_argument("tree: node '" + t.tag + "' has " +
                                  std::to_string(t.children.size()) +
                                  " children; binarize first");
    }
    n.left = compile_node(t.children[0], word_id, tag_id, out);
    n.right = compile_node(t.children[1], word_id, tag_id, out);
  }
  out.nodes.push_back(n);
  return static_cast<int>(out.nodes.size()) - 1;
}

inline RawTree to_raw_node(const Tree& t, int i, const Vocab& words, const Vocab& tags) {
  const TreeNode& n = t[i];
  RawTree r;
  r.tag = tags.token(n.tag);
  if (n.has_label()) r.label = n.label;
  if (n.is_leaf()) {
    r.word = words.token(n.word);
  } else {
    r.children.push_back(to_raw_node(t, n.left, words, tags));
    r.children.push_back(to_raw_node(t, n.right, words, tags));
  }
  return r;
}
}  // namespace detail

/// Maps a binary RawTree to ids. With `grow`, unseen tokens are added to the
/// vocabularies; otherwise they map to the unknown index.
inline Tree compile(const RawTree& t, Vocab& words, Vocab& tags, bool grow) {
  Tree out;
  auto wid = [&](const std::string& s) { return grow ? words.add(s) : words.lookup(s); };
  auto tid = [&](const std::string& s) { return grow ? tags.add(s) : tags.lookup(s); };
  detail::compile_node(t, wid, tid, out);
  return out;
}

inline Tree compile(const RawTree& t, const Vocab& words, const Vocab& tags) {
  Tree out;
  auto wid = [&](const std::string& s) { return words.lookup(s); };
  auto tid = [&](const std::string& s) { return tags.lookup(s); };
  detail::compile_node(t, wid, tid, out);
  return out;
}

inline RawTree to_raw(const Tree& t, const Vocab& words, const Vocab& tags) {
  return detail::to_raw_node(t, t.root(), words, tags);
}

/// Leaf positions spanned by each node, as [begin, end) pairs.
inline std::vector<std::pair<int, int>> spans(const Tree& t) {
  std::vector<std::pair<int, int>> s(t.size());
  int next = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const TreeNode& n = t.nodes[i];
    if (n.is_leaf()) {
      s[i] = {next, next + 1};
      ++next;
    } else {
      s[i] = {s[static_cast<std::size_t>(n.left)].first, s[static_cast<std::size_t>(n.right)].second};
    }
  }
  return s;
}

/// Root-relative path of every node: "*" for the root, then L/R steps.
inline std::vector<std::string> node_paths(const Tree& t) {
  std::vector<std::string> p(t.size());
  p.back() = "*";
  for (int i = t.root(); i >= 0; --i) {
    const TreeNode& n = t[i];
    if (n.is_leaf()) continue;
    p[static_cast<std::size_t>(n.left)] = p[static_cast<std::size_t>(i)] + "L";
    p[static_cast<std::size_t>(n.right)] = p[static_cast<std::size_t>(i)] + "R";
  }
  return p;
}

}  // namespace tgc
