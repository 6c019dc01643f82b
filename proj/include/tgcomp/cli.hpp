#pragma once

// Command-line front end. Exit codes: 0 success, 1 check failure,
// 2 usage or configuration error, 3 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tgcomp/checkpoint.hpp"
#include "tgcomp/config.hpp"
#include "tgcomp/corpus.hpp"
#include "tgcomp/inspect.hpp"
#include "tgcomp/toy.hpp"
#include "tgcomp/train.hpp"
#include "tgcomp/verify.hpp"

namespace tgc::cli {

inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kUsage = 2;
inline constexpr int kData = 3;

struct GenToyArgs {
  std::string rule = "tag";
  int size = 1250, tags = 8, words = 50, min_depth = 3, max_depth = 6, targets = 2;
  std::uint64_t seed = 7;
  std::string out;
  bool jsonl = false;
};

inline int cmd_gen_toy(const GenToyArgs& a, std::ostream& out) {
  ToySpec spec;
  spec.rule = label_rule_from_string(a.rule);
  spec.size = a.size;
  spec.num_tags = a.tags;
  spec.num_words = a.words;
  spec.min_depth = a.min_depth;
  spec.max_depth = a.max_depth;
  spec.num_targets = a.targets;
  const ToyCorpus toy = gen_toy_corpus(spec, a.seed);
  const Corpus& c = toy.corpus;
  std::filesystem::create_directories(a.out);
  const std::filesystem::path dir(a.out);
  auto dump = [&](const std::vector<Example>& xs, const std::string& name) {
    const auto trees = to_raw(xs, c);
    write_tree_file((dir / (name + ".txt")).string(), trees);
    if (a.jsonl) {
      std::ofstream j(dir / (name + ".jsonl"));
      j << to_jsonl(trees);
    }
  };
  dump(c.train, "train");
  dump(c.dev, "dev");
  dump(c.test, "test");

  nlohmann::json rule;
  rule["rule"] = spec.rule == LabelRule::TagRule ? "TAG-RULE" : "WORD-RULE";
  rule["seed"] = a.seed;
  rule["targets"] = nlohmann::json::array();
  for (const auto& [l, r] : toy.rule.tag_pairs) rule["targets"].push_back(c.tags.token(l) + "+" + c.tags.token(r));
  for (int w : toy.rule.words) rule["targets"].push_back(c.words.token(w));
  std::ofstream(dir / "rule.json") << rule.dump(2) << '\n';
  out << "wrote " << c.train.size() << "/" << c.dev.size() << "/" << c.test.size()
      << " train/dev/test trees to " << a.out << '\n';
  return kOk;
}

struct ImportArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::string binarize = "right";
  std::string format = "sexpr";
  int root_label = -1;
};

/// Reads parenthesized trees (any layout, several per file), binarizes them
/// and writes the canonical one-tree-per-line corpus.
inline int cmd_import_ptb(const ImportArgs& a, std::ostream& out) {
  const Binarization dir = binarization_from_string(a.binarize);
  if (a.format != "sexpr" && a.format != "jsonl") {
    throw CLI::ValidationError("--format", "expected sexpr or jsonl");
  }
  std::vector<RawTree> trees;
  for (const auto& path : a.inputs) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      for (RawTree& t : parse_sexpr_all(ss.str())) {
        RawTree b = binarize(std::move(t), dir);
        if (!b.label && a.root_label >= 0) b.label = a.root_label;
        trees.push_back(std::move(b));
      }
    } catch (const ParseError& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  std::ofstream o(a.out);
  if (!o) throw DataError("cannot write " + a.out);
  if (a.format == "jsonl") {
    o << to_jsonl(trees);
  } else {
    for (const auto& t : trees) o << serialize(t) << '\n';
  }
  out << "imported " << trees.size() << " trees to " << a.out << '\n';
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
};

inline int cmd_train(const TrainArgs& a, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& s : a.sets) overrides.push_back(TrainConfig::split_override(s));
  const TrainConfig cfg =
      a.config.empty() ? TrainConfig::parse("", overrides) : TrainConfig::load(a.config, overrides);
  if (cfg.train.empty()) throw ConfigError({"field 'train': required"});
  const Corpus corpus = load_corpus(cfg.task, {cfg.train, cfg.dev, cfg.test}, cfg.num_classes, cfg.binarize);

  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (!cfg.log.empty()) {
    log_file.open(cfg.log);
    if (!log_file) throw DataError("cannot write " + cfg.log);
    log = &log_file;
  }

  if (cfg.cv_folds > 0) {
    const CrossValidation cv = cross_validate(cfg, corpus, cfg.cv_folds, log);
    for (std::size_t f = 0; f < cv.fold_accuracy.size(); ++f) {
      out << "fold " << f << " test accuracy " << cv.fold_accuracy[f] << '\n';
    }
    out << "cross-validation mean accuracy " << cv.mean_accuracy << '\n';
    return kOk;
  }

  const TrainResult r = train(cfg, corpus, log);
  if (!cfg.checkpoint.empty()) save_checkpoint(r.best, cfg.checkpoint);
  out << "best epoch " << r.best_epoch << " dev accuracy " << r.best_dev_accuracy << '\n';
  if (r.test) out << "test accuracy " << r.test->accuracy << '\n';
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, corpus;
  int threads = 1;
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const auto xs = load_examples(ck.params.spec().task, a.corpus, ck.words, ck.tags);
  for (const auto& ex : xs) {
    if (ex.label >= ck.params.spec().num_classes) throw DataError(a.corpus + ": label out of range for checkpoint");
  }
  const Metrics m = evaluate(ck, xs, a.threads);
  nlohmann::json j{{"count", m.count}, {"loss", m.loss}, {"accuracy", m.accuracy},
                   {"gold", m.gold},   {"correct", m.correct}};
  out << j.dump() << '\n';
  return kOk;
}

struct InspectArgs {
  std::string checkpoint, corpus, out;
  std::size_t top_k = 5, min_count = 5;
};

/// Writes `<out>.zdump.tsv` and `<out>.ranking.json`.
inline int cmd_inspect_z(const InspectArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  if (!is_hyper(ck.params.spec().variant)) {
    throw ConfigError({std::string("inspect-z: ") + variant_name(ck.params.spec().variant) +
                       " checkpoint has no hyper network"});
  }
  const auto xs = load_examples(ck.params.spec().task, a.corpus, ck.words, ck.tags);
  InspectOptions opt;
  opt.top_k = a.top_k;
  opt.min_count = a.min_count;
  const ZReport rep = inspect_z(ck, xs, opt);
  {
    std::ofstream tsv(a.out + ".zdump.tsv");
    if (!tsv) throw DataError("cannot write " + a.out + ".zdump.tsv");
    write_zdump(rep, ck.tags, tsv);
  }
  std::ofstream js(a.out + ".ranking.json");
  if (!js) throw DataError("cannot write " + a.out + ".ranking.json");
  js << ranking_json(rep, ck.tags).dump(2) << '\n';
  out << "rows " << rep.rows.size() << " max sigma above mean " << rep.max_sigma() << '\n';
  return kOk;
}

struct GradCheckArgs {
  std::string variant = "TG-HTreeLSTM";
  std::string fusion = "concat";
  std::string task = "classify";
  std::vector<int> dims{4};
  int seeds = 20;
  int leaves = 4;
  double step = model_check_options().step;
  double tol = 1e-4;
  int stencil = 5;
  double kink_margin = ModelCheck{}.kink_margin;
  std::string corrupt;
};

inline int cmd_grad_check(const GradCheckArgs& a, std::ostream& out) {
  ModelCheck mc;
  mc.variant = variant_from_string(a.variant);
  mc.fusion = fusion_from_string(a.fusion);
  mc.task = task_from_string(a.task);
  mc.leaves = a.leaves;
  if (a.dims.size() != 1 && a.dims.size() != 5) {
    throw CLI::ValidationError("--dims", "give one size for all, or word,hidden,hyper_h,hyper_d,tag");
  }
  for (int d : a.dims) {
    if (d < 1 || d > 8) throw CLI::ValidationError("--dims", "each size must be in [1, 8]");
  }
  const auto dim = [&](std::size_t i) { return a.dims.size() == 1 ? a.dims[0] : a.dims[i]; };
  mc.dims = {dim(0), dim(1), dim(2), dim(3), dim(4)};
  mc.options.step = a.step;
  mc.options.tol = a.tol;
  mc.options.five_point = a.stencil == 5;
  mc.kink_margin = a.kink_margin;
  if (!a.corrupt.empty()) {
    auto op = ad::op_from_name(a.corrupt);
    if (!op) throw CLI::ValidationError("--corrupt", "unknown primitive " + a.corrupt);
    mc.options.corrupt = op;
  }

  double worst = 0.0;
  std::string worst_name;
  int worst_seed = 0;
  for (int s = 0; s < a.seeds; ++s) {
    const auto rep = grad_check_model(mc, static_cast<std::uint64_t>(s));
    for (const auto& e : rep.entries) {
      if (e.max_rel_error > worst || worst_name.empty()) {
        worst = e.max_rel_error;
        worst_name = e.name;
        worst_seed = s;
      }
    }
  }
  out << "grad-check " << a.variant << " " << a.fusion << " seeds " << a.seeds
      << " worst relative error " << worst << " (" << worst_name << ", seed " << worst_seed << ")\n";
  if (worst >= a.tol) {
    out << "FAILED: parameter " << worst_name << " exceeds tolerance " << a.tol << '\n';
    return kCheckFailed;
  }
  return kOk;
}

/// Entry point shared by the binary and the tests.
inline int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tag-guided hypernetwork composition over constituency trees"};
  app.require_subcommand(1);

  GenToyArgs gen;
  auto* g = app.add_subcommand("gen-toy", "generate a synthetic TAG-RULE or WORD-RULE corpus");
  g->add_option("--rule", gen.rule, "tag or word")->check(CLI::IsMember({"tag", "word"}));
  g->add_option("--size", gen.size, "total trees (split 8/1/1)");
  g->add_option("--tags", gen.tags, "tag alphabet size");
  g->add_option("--words", gen.words, "word alphabet size");
  g->add_option("--min-depth", gen.min_depth);
  g->add_option("--max-depth", gen.max_depth);
  g->add_option("--targets", gen.targets, "trigger tag pairs or words");
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_flag("--jsonl", gen.jsonl, "also write JSON-lines copies");

  ImportArgs imp;
  auto* ip = app.add_subcommand("import-ptb", "binarize bracketed trees into the corpus format");
  ip->add_option("--in", imp.inputs, "input treebank files")->required();
  ip->add_option("--out", imp.out, "output corpus file")->required();
  ip->add_option("--binarize", imp.binarize)->check(CLI::IsMember({"right", "left"}));
  ip->add_option("--format", imp.format)->check(CLI::IsMember({"sexpr", "jsonl"}));
  ip->add_option("--root-label", imp.root_label, "label for roots that carry none");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a model from a config file");
  t->add_option("--config", tr.config, "key = value config file");
  t->add_option("--set", tr.sets, "override key=value (repeatable)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint on a corpus file");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--corpus", ev.corpus)->required();
  e->add_option("--threads", ev.threads)->check(CLI::PositiveNumber);

  InspectArgs in;
  auto* z = app.add_subcommand("inspect-z", "dump and rank per-node z_u of a hyper model");
  z->add_option("--checkpoint", in.checkpoint)->required();
  z->add_option("--corpus", in.corpus)->required();
  z->add_option("--out", in.out, "output prefix")->required();
  z->add_option("--top-k", in.top_k);
  z->add_option("--min-count", in.min_count);

  GradCheckArgs gc;
  auto* c = app.add_subcommand("grad-check", "finite-difference check of every parameter");
  c->add_option("--variant", gc.variant);
  c->add_option("--fusion", gc.fusion)->check(CLI::IsMember({"concat", "multi"}));
  c->add_option("--task", gc.task)->check(CLI::IsMember({"classify", "match"}));
  c->add_option("--dims", gc.dims, "one size, or word,hidden,hyper_h,hyper_d,tag")->delimiter(',');
  c->add_option("--seeds", gc.seeds)->check(CLI::PositiveNumber);
  c->add_option("--leaves", gc.leaves)->check(CLI::PositiveNumber);
  c->add_option("--step", gc.step);
  c->add_option("--tol", gc.tol);
  c->add_option("--stencil", gc.stencil, "finite-difference points: 2 or 5")->check(CLI::IsMember({2, 5}));
  c->add_option("--kink-margin", gc.kink_margin, "minimum |relu/abs input| of a drawn instance");
  c->add_option("--corrupt", gc.corrupt, "test fixture: scale one primitive's backward");

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << ex.what() << '\n';
    return kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen_toy(gen, out);
    if (ip->parsed()) return cmd_import_ptb(imp, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (z->parsed()) return cmd_inspect_z(in, out);
    if (c->parsed()) return cmd_grad_check(gc, out);
  } catch (const ConfigError& ex) {
    err << "config error:\n" << ex.what() << '\n';
    return kUsage;
  } catch (const CLI::ValidationError& ex) {
    err << ex.what() << '\n';
    return kUsage;
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kData;
  } catch (const CheckpointError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kData;
  } catch (const ParseError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace tgc::cli
