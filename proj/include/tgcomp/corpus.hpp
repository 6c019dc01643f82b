#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgcomp/tree.hpp"
#include "tgcomp/vocab.hpp"

namespace tgc {

/// Malformed or inconsistent input data (bad file, bad line, bad index).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Task { Classify, Match };

inline const char* task_name(Task t) { return t == Task::Classify ? "classify" : "match"; }
inline Task task_from_string(const std::string& s) {
  if (s == "classify") return Task::Classify;
  if (s == "match") return Task::Match;
  throw std::invalid_argument("task: expected 'classify' or 'match', got '" + s + "'");
}

/// One training instance. For classification `label` mirrors the root label
/// of `tree`; for matching it is the relation between `tree` and `other`.
struct Example {
  Tree tree;
  std::optional<Tree> other;
  int label = kNoLabel;
};

struct Corpus {
  Task task = Task::Classify;
  Vocab words;
  Vocab tags;
  int num_classes = 0;
  std::vector<Example> train, dev, test;

  /// Checks every id and label against the vocabularies and class count.
  void validate() const {
    auto check_tree = [&](const Tree& t, const char* split, std::size_t i) {
      try {
        t.validate();
      } catch (const std::invalid_argument& e) {
        throw DataError(std::string(split) + "[" + std::to_string(i) + "]: " + e.what());
      }
      for (const auto& n : t.nodes) {
        if (n.tag < 0 || static_cast<std::size_t>(n.tag) >= tags.size() ||
            (n.is_leaf() && static_cast<std::size_t>(n.word) >= words.size()) ||
            n.label >= num_classes) {
          throw DataError(std::string(split) + "[" + std::to_string(i) +
                          "]: id or label out of range");
        }
      }
    };
    auto check = [&](const std::vector<Example>& xs, const char* split) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const Example& ex = xs[i];
        check_tree(ex.tree, split, i);
        if (task == Task::Match) {
          if (!ex.other) throw DataError(std::string(split) + "[" + std::to_string(i) + "]: missing second tree");
          check_tree(*ex.other, split, i);
        }
        if (ex.label < 0 || ex.label >= num_classes) {
          throw DataError(std::string(split) + "[" + std::to_string(i) + "]: missing or invalid label");
        }
      }
    };
    check(train, "train");
    check(dev, "dev");
    check(test, "test");
  }
};

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

/// Reads one s-expression per line. Blank lines are skipped.
inline std::vector<RawTree> read_tree_file(const std::string& path,
                                           Binarization dir = Binarization::Right) {
  std::vector<RawTree> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    try {
      out.push_back(binarize(parse_sexpr(lines[i]), dir));
    } catch (const ParseError& e) {
      throw DataError(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

struct RawPair {
  RawTree first, second;
  int label = 0;
};

/// `tree <TAB> tree <TAB> label` per line.
inline std::vector<RawPair> read_pair_file(const std::string& path,
                                           Binarization dir = Binarization::Right) {
  std::vector<RawPair> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const std::string where = path + ":" + std::to_string(i + 1) + ": ";
    std::vector<std::string> cols;
    std::stringstream ss(lines[i]);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 3) throw DataError(where + "expected 3 tab-separated fields");
    RawPair p;
    try {
      p.first = binarize(parse_sexpr(cols[0]), dir);
      p.second = binarize(parse_sexpr(cols[1]), dir);
    } catch (const ParseError& e) {
      throw DataError(where + e.what());
    }
    try {
      std::size_t used = 0;
      p.label = std::stoi(cols[2], &used);
      if (used != cols[2].size() || p.label < 0) throw std::invalid_argument("label");
    } catch (const std::exception&) {
      throw DataError(where + "label is not a non-negative integer");
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct CorpusPaths {
  std::string train, dev, test;
};

/// Loads the three splits. Vocabularies grow on the training split only;
/// unseen dev/test tokens map to the unknown index. `num_classes` of 0 means
/// one more than the largest label seen.
inline Corpus load_corpus(Task task, const CorpusPaths& paths, int num_classes = 0,
                          Binarization dir = Binarization::Right) {
  Corpus c;
  c.task = task;
  int max_label = -1;
  auto note_labels = [&](const Tree& t) {
    for (const auto& n : t.nodes) max_label = std::max(max_label, n.label);
  };
  auto load = [&](const std::string& path, bool grow, std::vector<Example>& out) {
    if (path.empty()) return;
    if (task == Task::Classify) {
      for (const RawTree& r : read_tree_file(path, dir)) {
        if (!r.label) throw DataError(path + ": tree without a root label");
        Example ex;
        ex.tree = compile(r, c.words, c.tags, grow);
        ex.label = *r.label;
        note_labels(ex.tree);
        out.push_back(std::move(ex));
      }
    } else {
      for (const RawPair& p : read_pair_file(path, dir)) {
        Example ex;
        ex.tree = compile(p.first, c.words, c.tags, grow);
        ex.other = compile(p.second, c.words, c.tags, grow);
        ex.label = p.label;
        max_label = std::max(max_label, p.label);
        out.push_back(std::move(ex));
      }
    }
  };
  load(paths.train, true, c.train);
  load(paths.dev, false, c.dev);
  load(paths.test, false, c.test);
  c.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  c.validate();
  return c;
}

/// Reads one split against fixed vocabularies (e.g. a checkpoint's); unseen
/// tokens map to the unknown index.
inline std::vector<Example> load_examples(Task task, const std::string& path, const Vocab& words,
                                          const Vocab& tags,
                                          Binarization dir = Binarization::Right) {
  std::vector<Example> out;
  if (task == Task::Classify) {
    for (const RawTree& r : read_tree_file(path, dir)) {
      if (!r.label) throw DataError(path + ": tree without a root label");
      Example ex;
      ex.tree = compile(r, words, tags);
      ex.label = *r.label;
      out.push_back(std::move(ex));
    }
  } else {
    for (const RawPair& p : read_pair_file(path, dir)) {
      Example ex;
      ex.tree = compile(p.first, words, tags);
      ex.other = compile(p.second, words, tags);
      ex.label = p.label;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

/// Writes trees in the canonical one-per-line format.
inline void write_tree_file(const std::string& path, const std::vector<RawTree>& trees) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& t : trees) out << serialize(t) << '\n';
}

inline std::vector<RawTree> to_raw(const std::vector<Example>& xs, const Corpus& c) {
  std::vector<RawTree> out;
  out.reserve(xs.size());
  for (const auto& ex : xs) out.push_back(to_raw(ex.tree, c.words, c.tags));
  return out;
}

inline nlohmann::json to_json(const RawTree& t) {
  nlohmann::json j;
  j["tag"] = t.tag;
  if (t.label) j["label"] = *t.label;
  if (t.is_leaf()) {
    j["word"] = t.word;
  } else {
    j["children"] = nlohmann::json::array();
    for (const auto& c : t.children) j["children"].push_back(to_json(c));
  }
  return j;
}

/// JSON-lines export: one nested object per tree.
inline std::string to_jsonl(const std::vector<RawTree>& trees) {
  std::string s;
  for (const auto& t : trees) {
    s += to_json(t).dump();
    s += '\n';
  }
  return s;
}

}  // namespace tgc
