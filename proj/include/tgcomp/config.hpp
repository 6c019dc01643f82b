#pragma once

// Training configuration: flat `key = value` text, every key overridable.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgcomp/corpus.hpp"
#include "tgcomp/model.hpp"

namespace tgc {

/// Invalid configuration; `diagnostics` holds one message per bad field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> diags)
      : std::runtime_error(join(diags)), diagnostics(std::move(diags)) {}
  std::vector<std::string> diagnostics;

 private:
  static std::string join(const std::vector<std::string>& d) {
    std::string s;
    for (const auto& x : d) s += (s.empty() ? "" : "\n") + x;
    return s;
  }
};

/// Defaults follow the published training regime (AdaGrad 0.05, batch 50,
/// dropout 0.5, recurrent dropout 0.25, L2 3e-5, h=150, hyper 50/100, tags 50,
/// words 300). The L2 default applies to matching only; see `effective_l2`.
struct TrainConfig {
  Variant variant = Variant::TGHTreeLSTM;
  Fusion fusion = Fusion::Concat;
  Task task = Task::Classify;
  Dims dims;
  int mlp_hidden = 0;
  int num_classes = 0;  // 0: infer from data

  double lr = 0.05;
  int batch = 50;
  int epochs = 30;
  int patience = 25;
  double p_drop = 0.5;
  double p_rec = 0.25;
  double l2 = 3e-5;
  bool fine_tune = false;
  std::uint64_t seed = 1;
  int threads = 1;
  bool eval_train = true;
  int cv_folds = 0;

  std::string train, dev, test;
  std::string embeddings;
  std::string checkpoint;
  std::string log;
  std::string resume;
  Binarization binarize = Binarization::Right;

  /// Recurrent dropout is part of the classification regime only.
  double effective_p_rec() const { return task == Task::Classify ? p_rec : 0.0; }
  /// L2 is part of the matching regime only.
  double effective_l2() const { return task == Task::Match ? l2 : 0.0; }

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "variant", "fusion",   "task",       "word_dim",  "hidden",   "hyper_hidden",
        "hyper_input", "tag_dim", "mlp_hidden", "num_classes", "lr",  "batch",
        "epochs",  "patience", "p_drop",     "p_rec",     "l2",       "fine_tune",
        "seed",    "threads",  "eval_train", "cv_folds",  "train",    "dev",
        "test",    "embeddings", "checkpoint", "log",     "resume",   "binarize"};
    return k;
  }

  /// Sets one field from text; returns a diagnostic on failure, else "".
  std::string set(const std::string& key, const std::string& value) {
    auto fail = [&](const std::string& what) {
      return "field '" + key + "': " + what + ", got '" + value + "'";
    };
    auto as_int = [&](int& out) -> std::string {
      try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) return fail("expected an integer");
        out = static_cast<int>(v);
        return "";
      } catch (const std::exception&) {
        return fail("expected an integer");
      }
    };
    auto as_real = [&](double& out) -> std::string {
      try {
        std::size_t used = 0;
        out = std::stod(value, &used);
        if (used != value.size()) return fail("expected a real number");
        return "";
      } catch (const std::exception&) {
        return fail("expected a real number");
      }
    };
    auto as_bool = [&](bool& out) -> std::string {
      if (value == "true" || value == "1") out = true;
      else if (value == "false" || value == "0") out = false;
      else return fail("expected true or false");
      return "";
    };
    try {
      if (key == "variant") variant = variant_from_string(value);
      else if (key == "fusion") fusion = fusion_from_string(value);
      else if (key == "task") task = task_from_string(value);
      else if (key == "binarize") binarize = binarization_from_string(value);
      else if (key == "word_dim") return as_int(dims.word);
      else if (key == "hidden") return as_int(dims.hidden);
      else if (key == "hyper_hidden") return as_int(dims.hyper_h);
      else if (key == "hyper_input") return as_int(dims.hyper_d);
      else if (key == "tag_dim") return as_int(dims.tag);
      else if (key == "mlp_hidden") return as_int(mlp_hidden);
      else if (key == "num_classes") return as_int(num_classes);
      else if (key == "lr") return as_real(lr);
      else if (key == "batch") return as_int(batch);
      else if (key == "epochs") return as_int(epochs);
      else if (key == "patience") return as_int(patience);
      else if (key == "p_drop") return as_real(p_drop);
      else if (key == "p_rec") return as_real(p_rec);
      else if (key == "l2") return as_real(l2);
      else if (key == "fine_tune") return as_bool(fine_tune);
      else if (key == "eval_train") return as_bool(eval_train);
      else if (key == "threads") return as_int(threads);
      else if (key == "cv_folds") return as_int(cv_folds);
      else if (key == "seed") {
        int s = 0;
        auto e = as_int(s);
        if (!e.empty()) return e;
        if (s < 0) return fail("expected a non-negative integer");
        seed = static_cast<std::uint64_t>(s);
      }
      else if (key == "train") train = value;
      else if (key == "dev") dev = value;
      else if (key == "test") test = value;
      else if (key == "embeddings") embeddings = value;
      else if (key == "checkpoint") checkpoint = value;
      else if (key == "log") log = value;
      else if (key == "resume") resume = value;
      else return "unknown field '" + key + "'";
    } catch (const std::invalid_argument& e) {
      return "field '" + key + "': " + e.what();
    }
    return "";
  }

  /// Range checks; one diagnostic per offending field.
  std::vector<std::string> check() const {
    std::vector<std::string> d;
    auto rate = [&](const char* k, double v) {
      if (!(v >= 0.0 && v < 1.0)) d.push_back(std::string("field '") + k + "': must be in [0, 1)");
    };
    auto positive = [&](const char* k, int v) {
      if (v <= 0) d.push_back(std::string("field '") + k + "': must be positive");
    };
    rate("p_drop", p_drop);
    rate("p_rec", p_rec);
    positive("word_dim", dims.word);
    positive("hidden", dims.hidden);
    positive("hyper_hidden", dims.hyper_h);
    positive("hyper_input", dims.hyper_d);
    positive("tag_dim", dims.tag);
    positive("batch", batch);
    positive("threads", threads);
    if (epochs < 0) d.push_back("field 'epochs': must be non-negative");
    if (patience < 1) d.push_back("field 'patience': must be positive");
    if (!(lr > 0.0)) d.push_back("field 'lr': must be positive");
    if (l2 < 0.0) d.push_back("field 'l2': must be non-negative");
    if (mlp_hidden < 0) d.push_back("field 'mlp_hidden': must be non-negative");
    if (num_classes < 0 || num_classes == 1) d.push_back("field 'num_classes': must be 0 (infer) or at least 2");
    if (cv_folds < 0 || cv_folds == 1) d.push_back("field 'cv_folds': must be 0 (off) or at least 2");
    return d;
  }

  void validate() const {
    auto d = check();
    if (!d.empty()) throw ConfigError(std::move(d));
  }

  /// Parses `key = value` lines (`#` starts a comment, values may be quoted),
  /// then applies `overrides` in order.
  static TrainConfig parse(const std::string& text,
                           const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    TrainConfig c;
    std::vector<std::string> diags;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        diags.push_back("line " + std::to_string(lineno) + ": expected key = value");
        continue;
      }
      auto e = c.set(trim(line.substr(0, eq)), unquote(trim(line.substr(eq + 1))));
      if (!e.empty()) diags.push_back("line " + std::to_string(lineno) + ": " + e);
    }
    for (const auto& [k, v] : overrides) {
      auto e = c.set(k, v);
      if (!e.empty()) diags.push_back("--set " + k + ": " + e);
    }
    auto more = c.check();
    diags.insert(diags.end(), more.begin(), more.end());
    if (!diags.empty()) throw ConfigError(std::move(diags));
    return c;
  }

  static TrainConfig load(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file " + path});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), overrides);
  }

  /// `key=value` -> pair; throws ConfigError when there is no '='.
  static std::pair<std::string, std::string> split_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError({"--set " + kv + ": expected key=value"});
    return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
  }

  nlohmann::json to_json() const {
    return {{"variant", variant_name(variant)}, {"fusion", fusion_name(fusion)},
            {"task", task_name(task)},          {"word_dim", dims.word},
            {"hidden", dims.hidden},            {"hyper_hidden", dims.hyper_h},
            {"hyper_input", dims.hyper_d},      {"tag_dim", dims.tag},
            {"mlp_hidden", mlp_hidden},         {"num_classes", num_classes},
            {"lr", lr},                         {"batch", batch},
            {"epochs", epochs},                 {"patience", patience},
            {"p_drop", p_drop},                 {"p_rec", p_rec},
            {"l2", l2},                         {"fine_tune", fine_tune},
            {"seed", seed},                     {"binarize", binarize == Binarization::Right ? "right" : "left"}};
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  static std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
  }
};

}  // namespace tgc
