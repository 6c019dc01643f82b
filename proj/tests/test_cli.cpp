#include <gtest/gtest.h>

#include <cstdlib>
#include <regex>
#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "tgcomp/cli.hpp"

using namespace tgc;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "tgcomp");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string strip_seconds(const std::string& log) {
  return std::regex_replace(log, std::regex("\"seconds\":[-0-9.e+]+"), "\"seconds\":0");
}

// toy corpus, small model, two epochs
struct Trained {
  th::TempDir dir;
  std::string data, ck, log;
  CliResult result;

  explicit Trained(const std::string& variant = "TG-HTreeLSTM") {
    data = dir.file("toy");
    EXPECT_EQ(run({"gen-toy", "--size", "200", "--seed", "3", "--out", data}).code, 0);
    ck = dir.file("model.ck");
    log = dir.file("train.log");
    const std::string cfg = dir.write("toy.cfg",
                                      "word_dim = 8\nhidden = 8\nhyper_hidden = 4\nhyper_input = 6\n"
                                      "tag_dim = 4\nepochs = 2\nbatch = 20\nfine_tune = true\n"
                                      "train = " + data + "/train.txt\ndev = " + data + "/dev.txt\n"
                                      "test = " + data + "/test.txt\n");
    result = run({"train", "--config", cfg, "--set", "variant=" + variant, "--set", "fusion=multi",
                  "--set", "checkpoint=" + ck, "--set", "log=" + log});
  }
};

}  // namespace

TEST(Cli, RequiresExactlyOneSubcommand) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST(Cli, UnknownFlagIsUsageError) {
  const CliResult r = run({"grad-check", "--no-such-flag"});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, BadConfigIsUsageErrorWithFieldNames) {
  th::TempDir dir;
  const std::string cfg = dir.write("bad.cfg", "variant = Transformer\nlr = -1\n");
  const CliResult r = run({"train", "--config", cfg});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("variant"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("lr"), std::string::npos) << r.err;
  EXPECT_EQ(run({"train", "--config", dir.file("missing.cfg")}).code, cli::kUsage);
  EXPECT_EQ(run({"train", "--set", "nokey"}).code, cli::kUsage);
}

TEST(Cli, MalformedDataIsDataError) {
  th::TempDir dir;
  const std::string bad = dir.write("bad.txt", "(S#1 (A a) (B b))\n(S#0 (A a) (B b)\n");
  const CliResult r = run({"train", "--set", "train=" + bad, "--set", "epochs=1"});
  EXPECT_EQ(r.code, cli::kData);
  EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;
  EXPECT_EQ(run({"train", "--set", "train=" + dir.file("none.txt")}).code, cli::kData);
  EXPECT_EQ(run({"import-ptb", "--in", bad, "--out", dir.file("o.txt")}).code, cli::kData);
}

TEST(Cli, GenToyWritesSplitsAndRule) {
  th::TempDir dir;
  const std::string out = dir.file("toy");
  const CliResult r = run({"gen-toy", "--size", "100", "--out", out, "--jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"train.txt", "dev.txt", "test.txt", "train.jsonl", "rule.json"}) {
    EXPECT_TRUE(std::filesystem::exists(out + "/" + f)) << f;
  }
  const auto rule = nlohmann::json::parse(th::slurp(out + "/rule.json"));
  EXPECT_EQ(rule["rule"], "TAG-RULE");
  EXPECT_EQ(rule["targets"].size(), 2u);
  const Corpus c = load_corpus(Task::Classify, {out + "/train.txt", out + "/dev.txt", out + "/test.txt"});
  EXPECT_EQ(c.train.size(), 80u);
  EXPECT_EQ(c.dev.size(), 10u);
  EXPECT_EQ(c.test.size(), 10u);
  EXPECT_EQ(run({"gen-toy", "--targets", "0", "--out", out}).code, cli::kUsage);
  EXPECT_EQ(run({"gen-toy", "--rule", "none", "--out", out}).code, cli::kUsage);
}

TEST(Cli, TrainIsDeterministicAndRecordsChoices) {
  Trained a, b;
  ASSERT_EQ(a.result.code, 0) << a.result.err;
  ASSERT_EQ(b.result.code, 0) << b.result.err;
  EXPECT_EQ(strip_seconds(th::slurp(a.log)), strip_seconds(th::slurp(b.log)));
  EXPECT_FALSE(th::slurp(a.log).empty());

  const Checkpoint ck = load_checkpoint(a.ck);
  EXPECT_EQ(ck.params.spec().variant, Variant::TGHTreeLSTM);
  EXPECT_EQ(ck.params.spec().fusion, Fusion::Multi);
  EXPECT_EQ(ck.meta["config"]["fusion"], "multi");

  // printed best dev accuracy equals the logged dev record of that epoch
  std::smatch m;
  ASSERT_TRUE(std::regex_search(a.result.out, m, std::regex("best epoch (\\d+) dev accuracy ([0-9.e-]+)")));
  const int epoch = std::stoi(m[1]);
  const double acc = std::stod(m[2]);
  std::istringstream in(th::slurp(a.log));
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["split"] == "dev" && j["epoch"] == epoch) {
      EXPECT_NEAR(j["accuracy"].get<double>(), acc, 1e-5);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Cli, EvalReportsMetricsAsJson) {
  Trained t;
  ASSERT_EQ(t.result.code, 0) << t.result.err;
  const CliResult r = run({"eval", "--checkpoint", t.ck, "--corpus", t.data + "/test.txt"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["count"], 20);
  EXPECT_GE(j["accuracy"].get<double>(), 0.0);
  const CliResult again = run({"eval", "--checkpoint", t.ck, "--corpus", t.data + "/test.txt", "--threads", "2"});
  EXPECT_EQ(again.out, r.out);
  const std::string bad = t.dir.write("bad.txt", "(S#7 (A a) (B b))\n");
  EXPECT_EQ(run({"eval", "--checkpoint", t.ck, "--corpus", bad}).code, cli::kData);
  EXPECT_EQ(run({"eval", "--checkpoint", bad, "--corpus", bad}).code, cli::kData);
}

TEST(Cli, InspectZ) {
  Trained t;
  ASSERT_EQ(t.result.code, 0) << t.result.err;
  const std::string prefix = t.dir.file("z");
  const CliResult r = run({"inspect-z", "--checkpoint", t.ck, "--corpus", t.data + "/test.txt", "--out", prefix});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(prefix + ".zdump.tsv"));
  const auto ranking = nlohmann::json::parse(th::slurp(prefix + ".ranking.json"));
  EXPECT_TRUE(ranking.is_object() || ranking.is_array());

  const std::string empty = t.dir.write("empty.txt", "");
  EXPECT_EQ(run({"inspect-z", "--checkpoint", t.ck, "--corpus", empty, "--out", prefix + "e"}).code, 0);

  const std::string one = t.dir.write("one.txt", "(S#1 (T1 w1) (T2 w2))\n");
  ASSERT_EQ(run({"inspect-z", "--checkpoint", t.ck, "--corpus", one, "--out", prefix + "1"}).code, 0);
  std::istringstream tsv(th::slurp(prefix + "1.zdump.tsv"));
  std::string line;
  int rows = 0;
  while (std::getline(tsv, line)) rows += !line.empty();
  EXPECT_EQ(rows, 2);  // header and one inner node

  Trained s("TreeLSTM");
  ASSERT_EQ(s.result.code, 0) << s.result.err;
  EXPECT_EQ(run({"inspect-z", "--checkpoint", s.ck, "--corpus", one, "--out", prefix + "s"}).code, cli::kUsage);
}

TEST(Cli, GradCheckPassesAndDetectsCorruption) {
  const CliResult ok = run({"grad-check", "--variant", "RecNN", "--seeds", "3"});
  EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
  const CliResult bad = run({"grad-check", "--variant", "TG-HRecNN", "--seeds", "2", "--corrupt", "tanh"});
  EXPECT_EQ(bad.code, cli::kCheckFailed);
  EXPECT_NE(bad.out.find("FAILED: parameter"), std::string::npos) << bad.out;
  EXPECT_EQ(run({"grad-check", "--variant", "GRU"}).code, cli::kUsage);
  EXPECT_EQ(run({"grad-check", "--dims", "4,4"}).code, cli::kUsage);
  EXPECT_EQ(run({"grad-check", "--dims", "9"}).code, cli::kUsage);
}

TEST(Cli, ImportPtbBinarizes) {
  th::TempDir dir;
  const std::string in = dir.write("wsj.mrg", "(ROOT (S (NP (DT the) (JJ big) (NN dog)) (VP (VBZ barks))))\n");
  const std::string out = dir.file("out.txt");
  const CliResult r = run({"import-ptb", "--in", in, "--out", out, "--root-label", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto trees = parse_sexpr_all(th::slurp(out));
  ASSERT_EQ(trees.size(), 1u);
  EXPECT_TRUE(is_binary(trees[0]));
  EXPECT_EQ(trees[0].label, 1);
  std::vector<std::string> words;
  leaf_words(trees[0], words);
  EXPECT_EQ(words, (std::vector<std::string>{"the", "big", "dog", "barks"}));
  const Corpus c = load_corpus(Task::Classify, {out, "", ""});
  EXPECT_EQ(c.train.size(), 1u);
}

TEST(Cli, BinaryExitCodes) {
  const std::string bin = TGCOMP_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int s = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("train --bogus"), 2);
  EXPECT_EQ(status("eval --checkpoint /nonexistent --corpus /nonexistent"), 3);
  EXPECT_EQ(status("grad-check --variant TreeLSTM --seeds 2"), 0);
}
