#pragma once

// Synthetic corpora whose labels depend only on tag configurations
// (TAG-RULE) or only on words (WORD-RULE).

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tgcomp/corpus.hpp"

namespace tgc {

enum class LabelRule { TagRule, WordRule };

inline LabelRule label_rule_from_string(const std::string& s) {
  if (s == "tag" || s == "TAG-RULE") return LabelRule::TagRule;
  if (s == "word" || s == "WORD-RULE") return LabelRule::WordRule;
  throw std::invalid_argument("rule: expected 'tag' or 'word', got '" + s + "'");
}

struct ToySpec {
  LabelRule rule = LabelRule::TagRule;
  int num_tags = 8;
  int num_words = 50;
  int min_depth = 3;
  int max_depth = 6;
  int size = 1250;  // split 8/1/1 into train/dev/test
  // TAG-RULE: number of (left tag, right tag) pairs that trigger label 1.
  // WORD-RULE: number of trigger words.
  int num_targets = 2;
};

/// The labeling function of a generated corpus, in vocabulary ids.
struct ToyRule {
  LabelRule rule = LabelRule::TagRule;
  std::set<std::pair<int, int>> tag_pairs;
  std::set<int> words;

  /// 1 iff some inner node composes a target tag pair (TAG-RULE) or some leaf
  /// carries a target word (WORD-RULE).
  int label(const Tree& t) const {
    for (const auto& n : t.nodes) {
      if (rule == LabelRule::TagRule && !n.is_leaf() &&
          tag_pairs.count({t[n.left].tag, t[n.right].tag})) {
        return 1;
      }
      if (rule == LabelRule::WordRule && n.is_leaf() && words.count(n.word)) return 1;
    }
    return 0;
  }
};

struct ToyCorpus {
  Corpus corpus;
  ToyRule rule;
};

namespace detail {

inline int toy_shape(Tree& t, int depth, int target, bool forced, std::mt19937_64& rng) {
  std::bernoulli_distribution leaf(0.45);
  const bool make_leaf = depth == target || (!forced && leaf(rng));
  TreeNode n;
  if (!make_leaf) {
    std::bernoulli_distribution go_left(0.5);
    const bool left_forced = forced && go_left(rng);
    const bool right_forced = forced && !left_forced;
    n.left = toy_shape(t, depth + 1, target, left_forced, rng);
    n.right = toy_shape(t, depth + 1, target, right_forced, rng);
  } else {
    n.word = 0;
  }
  t.nodes.push_back(n);
  return static_cast<int>(t.nodes.size()) - 1;
}

}  // namespace detail

/// Deterministic under `seed`. Each split is class-balanced; the tree shape is
/// drawn before the class-conditional content so shape carries no signal.
inline ToyCorpus gen_toy_corpus(const ToySpec& spec, std::uint64_t seed) {
  if (spec.num_tags < 1 || spec.num_words < 1 || spec.size < 10 || spec.min_depth < 1 ||
      spec.max_depth < spec.min_depth) {
    throw std::invalid_argument("gen_toy_corpus: invalid spec");
  }
  const int universe =
      spec.rule == LabelRule::TagRule ? spec.num_tags * spec.num_tags : spec.num_words;
  if (spec.num_targets <= 0 || spec.num_targets >= universe) {
    throw std::invalid_argument("gen_toy_corpus: rule is vacuous (constant label) with " +
                                std::to_string(spec.num_targets) + " targets");
  }

  std::mt19937_64 rng(seed);
  ToyCorpus out;
  Corpus& c = out.corpus;
  c.task = Task::Classify;
  c.num_classes = 2;
  for (int i = 0; i < spec.num_tags; ++i) c.tags.add("T" + std::to_string(i));
  for (int i = 0; i < spec.num_words; ++i) c.words.add("w" + std::to_string(i));

  out.rule.rule = spec.rule;
  if (spec.rule == LabelRule::TagRule) {
    std::vector<std::pair<int, int>> all;
    for (int a = 1; a <= spec.num_tags; ++a)
      for (int b = 1; b <= spec.num_tags; ++b) all.emplace_back(a, b);
    std::shuffle(all.begin(), all.end(), rng);
    out.rule.tag_pairs.insert(all.begin(), all.begin() + spec.num_targets);
  } else {
    std::vector<int> all;
    for (int w = 1; w <= spec.num_words; ++w) all.push_back(w);
    std::shuffle(all.begin(), all.end(), rng);
    out.rule.words.insert(all.begin(), all.begin() + spec.num_targets);
  }

  std::uniform_int_distribution<int> tag_dist(1, spec.num_tags);
  std::uniform_int_distribution<int> word_dist(1, spec.num_words);
  std::uniform_int_distribution<int> depth_dist(spec.min_depth, spec.max_depth);

  auto make_example = [&](int cls) {
    while (true) {
      Tree t;
      detail::toy_shape(t, 0, depth_dist(rng), true, rng);
      for (int attempt = 0; attempt < 10000; ++attempt) {
        for (auto& n : t.nodes) {
          n.tag = tag_dist(rng);
          if (n.is_leaf()) n.word = word_dist(rng);
        }
        if (out.rule.label(t) == cls) {
          t.nodes.back().label = cls;
          Example ex;
          ex.tree = std::move(t);
          ex.label = cls;
          return ex;
        }
      }
    }
  };

  const int n_train = spec.size * 8 / 10;
  const int n_dev = spec.size / 10;
  const int n_test = spec.size - n_train - n_dev;
  auto make_split = [&](int n, std::vector<Example>& split) {
    for (int i = 0; i < n; ++i) split.push_back(make_example(i % 2));
    std::shuffle(split.begin(), split.end(), rng);
  };
  make_split(n_train, c.train);
  make_split(n_dev, c.dev);
  make_split(n_test, c.test);
  c.validate();
  return out;
}

}  // namespace tgc
