#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "helpers.hpp"

using namespace tgc;

namespace {

Corpus toy(int size, std::uint64_t seed, LabelRule rule = LabelRule::TagRule) {
  ToySpec s;
  s.rule = rule;
  s.size = size;
  return gen_toy_corpus(s, seed).corpus;
}

TrainConfig small_config(Variant v = Variant::TGHTreeLSTM) {
  TrainConfig c;
  c.variant = v;
  c.dims = {8, 8, 4, 6, 4};
  c.epochs = 3;
  c.batch = 10;
  c.p_drop = 0.2;
  c.fine_tune = true;
  c.seed = 3;
  return c;
}

// first ten training examples, no dev or test split
Corpus ten_examples() {
  Corpus c = toy(200, 11);
  c.train.resize(10);
  c.dev.clear();
  c.test.clear();
  return c;
}

std::vector<EpochRecord> without_time(std::vector<EpochRecord> h) {
  for (auto& r : h) r.seconds = 0.0;
  return h;
}

}  // namespace

TEST(Train, SameSeedSameHistory) {
  const Corpus c = toy(150, 2);
  const TrainConfig cfg = small_config();
  const auto a = train(cfg, c), b = train(cfg, c);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].loss, b.history[i].loss);
    EXPECT_EQ(a.history[i].accuracy, b.history[i].accuracy);
    EXPECT_EQ(a.history[i].split, b.history[i].split);
  }
  EXPECT_EQ(a.best_epoch, b.best_epoch);
  TrainConfig other = cfg;
  other.seed = 4;
  EXPECT_NE(train(other, c).history[0].loss, a.history[0].loss);
}

TEST(Train, LogHasOneJsonObjectPerEpochAndSplit) {
  const Corpus c = toy(150, 2);
  std::ostringstream log;
  const auto r = train(small_config(), c, &log);
  std::istringstream in(log.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("epoch") && j.contains("split") && j.contains("loss") && j.contains("accuracy") &&
                j.contains("seconds"));
    ++n;
  }
  EXPECT_EQ(n, r.history.size());
  EXPECT_EQ(r.history.back().split, "test");
}

TEST(Train, OverfitsTenExamples) {
  const Corpus c = ten_examples();
  TrainConfig cfg = small_config();
  cfg.epochs = 200;
  cfg.batch = 1;
  cfg.p_drop = 0.0;
  cfg.p_rec = 0.0;
  cfg.eval_train = false;
  std::size_t ones = 0;
  for (const auto& ex : c.train) ones += ex.label == 1;
  ASSERT_GT(ones, 0u);
  ASSERT_LT(ones, c.train.size());
  const auto r = train(cfg, c);
  EXPECT_EQ(evaluate(r.best, c.train).accuracy, 1.0);
}

TEST(Train, FirstEpochLossNearLogClasses) {
  const Corpus c = toy(500, 5);
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  cfg.batch = 50;
  cfg.fine_tune = false;
  const auto r = train(cfg, c);
  EXPECT_NEAR(r.history[0].loss, std::log(2.0), 0.03);
}

TEST(Train, RejectsMismatchedCorpusAndEmptySplit) {
  Corpus c = toy(100, 1);
  TrainConfig cfg = small_config();
  cfg.task = Task::Match;
  EXPECT_THROW(train(cfg, c), ConfigError);
  cfg.task = Task::Classify;
  cfg.num_classes = 1;
  EXPECT_THROW(train(cfg, c), ConfigError);
  c.train.clear();
  EXPECT_THROW(train(small_config(), c), DataError);
}

TEST(Evaluate, AlwaysClassZeroScoresItsShare) {
  const Corpus c = toy(400, 6);
  ModelParams m = th::random_model(model_spec(small_config(), c), 1);
  m[PId::OutW].value.fill(0.0);
  m.set(PId::OutB, Tensor::vector({5.0, 0.0}));
  const Metrics r = evaluate(m, c.train);
  std::size_t zeros = 0;
  for (const auto& ex : c.train) zeros += ex.label == 0;
  EXPECT_EQ(r.accuracy, static_cast<double>(zeros) / static_cast<double>(c.train.size()));
  EXPECT_EQ(r.correct[0], zeros);
  EXPECT_EQ(r.correct[1], 0u);
  EXPECT_NEAR(r.accuracy, 0.5, 0.03);
}

TEST(Evaluate, OrderAndThreadInvariant) {
  const Corpus c = toy(300, 7);
  ModelParams m = th::random_model(model_spec(small_config(), c), 2, 0.3);
  const Metrics base = evaluate(m, c.train);
  std::vector<Example> shuffled = c.train;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_EQ(evaluate(m, shuffled), base);
  EXPECT_EQ(evaluate(m, c.train, 3), base);
  EXPECT_EQ(evaluate(m, c.train), base);
}

TEST(Evaluate, EmptySetIsZero) {
  const Corpus c = toy(100, 7);
  ModelParams m = th::random_model(model_spec(small_config(), c), 2);
  const Metrics r = evaluate(m, std::span<const Example>{});
  EXPECT_EQ(r.count, 0u);
  EXPECT_EQ(r.accuracy, 0.0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Corpus c = toy(150, 8);
  for (Variant v : kAllVariants) {
    const auto r = train(small_config(v), c);
    std::stringstream buf;
    save_checkpoint(r.best, buf);
    const Checkpoint back = load_checkpoint(buf);
    EXPECT_EQ(back.params.spec(), r.best.params.spec());
    back.params.for_each([&](PId id, const Param& p) { EXPECT_EQ(p.value, r.best.params[id].value); });
    EXPECT_EQ(back.words, r.best.words);
    EXPECT_EQ(back.tags, r.best.tags);
    EXPECT_EQ(back.meta, r.best.meta);
    EXPECT_EQ(evaluate(back, c.test), evaluate(r.best, c.test));
  }
}

TEST(Checkpoint, CorruptFilesRejected) {
  std::stringstream bad("NOT A CHECKPOINT\n");
  EXPECT_THROW(load_checkpoint(bad), CheckpointError);
  const Corpus c = toy(100, 8);
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  std::stringstream buf;
  save_checkpoint(train(cfg, c).best, buf);
  const std::string full = buf.str();
  std::stringstream cut(full.substr(0, full.size() - 20));
  EXPECT_THROW(load_checkpoint(cut), CheckpointError);
  EXPECT_THROW(load_checkpoint(std::string("/nonexistent/ck.bin")), CheckpointError);
}

TEST(Resume, ContinuesFromCheckpointAndRejectsMismatch) {
  th::TempDir dir;
  const Corpus c = toy(150, 9);
  TrainConfig cfg = small_config();
  cfg.epochs = 2;
  const auto first = train(cfg, c);
  const std::string path = dir.file("ck.bin");
  save_checkpoint(first.best, path);

  TrainConfig more = cfg;
  more.resume = path;
  more.epochs = 1;
  const auto second = train(more, c);
  EXPECT_EQ(second.history.size(), 3u);

  TrainConfig wrong = more;
  wrong.dims.hidden = 6;
  EXPECT_THROW(train(wrong, c), ConfigError);
  wrong = more;
  wrong.variant = Variant::TreeLSTM;
  EXPECT_THROW(train(wrong, c), ConfigError);
  Corpus other = c;
  auto tokens = other.words.tokens();
  std::swap(tokens[1], tokens[2]);
  other.words = Vocab::from_tokens(tokens);
  EXPECT_THROW(train(more, other), ConfigError);
}

TEST(CrossValidation, FoldsPartitionIndices) {
  const auto folds = kfold_indices(23, 5, 4);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    EXPECT_TRUE(f.size() == 4 || f.size() == 5);
    for (auto i : f) EXPECT_TRUE(seen.insert(i).second);
  }
  EXPECT_EQ(seen.size(), 23u);
  EXPECT_EQ(kfold_indices(23, 5, 4), folds);
  EXPECT_NE(kfold_indices(23, 5, 5), folds);
  EXPECT_THROW(kfold_indices(10, 1, 0), std::invalid_argument);
}

TEST(CrossValidation, RunsEveryFold) {
  Corpus c = toy(120, 12);
  TrainConfig cfg = small_config(Variant::RecNN);
  cfg.epochs = 1;
  const auto cv = cross_validate(cfg, c, 3);
  ASSERT_EQ(cv.fold_accuracy.size(), 3u);
  double mean = 0.0;
  for (double a : cv.fold_accuracy) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
    mean += a / 3.0;
  }
  EXPECT_NEAR(cv.mean_accuracy, mean, 1e-12);
}

TEST(Config, DefaultsFollowPublishedRegime) {
  const TrainConfig c = TrainConfig::parse("");
  EXPECT_EQ(c.lr, 0.05);
  EXPECT_EQ(c.batch, 50);
  EXPECT_EQ(c.p_drop, 0.5);
  EXPECT_EQ(c.p_rec, 0.25);
  EXPECT_EQ(c.l2, 3e-5);
  EXPECT_EQ(c.dims, (Dims{300, 150, 50, 100, 50}));
  EXPECT_EQ(c.effective_l2(), 0.0);
  TrainConfig m = c;
  m.task = Task::Match;
  EXPECT_EQ(m.effective_l2(), 3e-5);
  EXPECT_EQ(m.effective_p_rec(), 0.0);
}

TEST(Config, ParsesCommentsQuotesAndOverrides) {
  const std::string text =
      "# toy run\n"
      "variant = TG-HRecNN\n"
      "fusion=multi   # trailing\n"
      "hidden = 16\n"
      "train = \"data/a b.txt\"\n"
      "seed = 5\n";
  const TrainConfig c = TrainConfig::parse(text, {{"seed", "9"}, {"hidden", "12"}});
  EXPECT_EQ(c.variant, Variant::TGHRecNN);
  EXPECT_EQ(c.fusion, Fusion::Multi);
  EXPECT_EQ(c.dims.hidden, 12);
  EXPECT_EQ(c.train, "data/a b.txt");
  EXPECT_EQ(c.seed, 9u);
}

TEST(Config, ReportsEveryBadField) {
  try {
    TrainConfig::parse("variant = LSTM\nlr = fast\nbogus = 1\nno equals sign\np_drop = 1.5\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("variant"), std::string::npos);
    EXPECT_NE(msg.find("line 2: field 'lr'"), std::string::npos);
    EXPECT_NE(msg.find("unknown field 'bogus'"), std::string::npos);
    EXPECT_NE(msg.find("line 4"), std::string::npos);
    EXPECT_NE(msg.find("field 'p_drop'"), std::string::npos);
  }
  EXPECT_THROW(TrainConfig::parse("", {{"batch", "0"}}), ConfigError);
  EXPECT_THROW(TrainConfig::parse("", {{"seed", "-1"}}), ConfigError);
  EXPECT_THROW(TrainConfig::split_override("novalue"), ConfigError);
  EXPECT_EQ(TrainConfig::split_override("a = b").second, "b");
  EXPECT_THROW(TrainConfig::load("/nonexistent.cfg"), ConfigError);
}
