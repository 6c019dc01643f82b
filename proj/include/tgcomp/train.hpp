#pragma once

// Training and evaluation loops.

#include <algorithm>
#include <chrono>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "json.hpp"
#include "tgcomp/checkpoint.hpp"
#include "tgcomp/config.hpp"
#include "tgcomp/corpus.hpp"
#include "tgcomp/embeddings.hpp"
#include "tgcomp/heads.hpp"
#include "tgcomp/optim.hpp"

namespace tgc {

struct Metrics {
  double loss = 0.0;      // mean root cross-entropy
  double accuracy = 0.0;  // fraction of roots predicted correctly
  std::size_t count = 0;
  std::vector<std::size_t> gold;     // examples per gold class
  std::vector<std::size_t> correct;  // correct predictions per gold class

  bool operator==(const Metrics&) const = default;
};

struct Prediction {
  int label = 0;
  double loss = 0.0;
};

/// Root prediction for one example, dropout off.
inline Prediction predict(ModelParams& m, const Example& ex) {
  ad::Tape tape;
  const ExampleGraph g = build_example(tape, m, ex, Dropout{}, true);
  const auto& logits = g.root_logits.value().data;
  return {static_cast<int>(argmax(logits)), g.loss.value()[0]};
}

/// Root-label metrics over `xs`. Parameters are only read; with `threads` > 1
/// examples are split across workers and merged in example order. The loss
/// is summed in sorted order so the result does not depend on corpus order.
inline Metrics evaluate(ModelParams& m, std::span<const Example> xs, int threads = 1) {
  std::vector<Prediction> preds(xs.size());
  const auto n = xs.size();
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) preds[i] = predict(m, xs[i]);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) preds[i] = predict(m, xs[i]);
      });
    }
    for (auto& t : pool) t.join();
  }

  Metrics out;
  const auto k = static_cast<std::size_t>(m.spec().num_classes);
  out.gold.assign(k, 0);
  out.correct.assign(k, 0);
  out.count = n;
  std::vector<double> losses;
  losses.reserve(n);
  std::size_t right = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto gold = static_cast<std::size_t>(xs[i].label);
    ++out.gold[gold];
    if (preds[i].label == xs[i].label) {
      ++out.correct[gold];
      ++right;
    }
    losses.push_back(preds[i].loss);
  }
  std::sort(losses.begin(), losses.end());
  double total = 0.0;
  for (double l : losses) total += l;
  out.loss = n ? total / static_cast<double>(n) : 0.0;
  out.accuracy = n ? static_cast<double>(right) / static_cast<double>(n) : 0.0;
  return out;
}

inline Metrics evaluate(const Checkpoint& ck, std::span<const Example> xs, int threads = 1) {
  ModelParams m = ck.params;
  return evaluate(m, xs, threads);
}

struct EpochRecord {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;

  nlohmann::json to_json() const {
    return {{"epoch", epoch}, {"split", split}, {"loss", loss}, {"accuracy", accuracy}, {"seconds", seconds}};
  }
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_dev_accuracy = 0.0;
  std::optional<Metrics> test;
};

inline ModelSpec model_spec(const TrainConfig& cfg, const Corpus& c) {
  ModelSpec s;
  s.variant = cfg.variant;
  s.fusion = cfg.fusion;
  s.dims = cfg.dims;
  s.task = cfg.task;
  s.num_classes = cfg.num_classes > 0 ? cfg.num_classes : c.num_classes;
  s.num_words = c.words.size();
  s.num_tags = c.tags.size();
  s.mlp_hidden = cfg.mlp_hidden;
  return s;
}

inline void scale_grads(ModelParams& m, double s) {
  m.for_each([&](PId, Param& p) {
    for (double& g : p.grad.data) g *= s;
  });
}

/// Minibatch AdaGrad over the training split with per-epoch train/dev
/// metrics, keeping the parameters of the best dev epoch. Stops early after
/// `patience` epochs without dev improvement. Fully determined by the seed.
inline TrainResult train(const TrainConfig& cfg, const Corpus& corpus, std::ostream* log = nullptr) {
  cfg.validate();
  if (cfg.task != corpus.task) throw ConfigError({"field 'task': does not match the corpus"});
  if (corpus.train.empty()) throw DataError("train: empty training split");
  const ModelSpec spec = model_spec(cfg, corpus);
  if (spec.num_classes < corpus.num_classes) {
    throw ConfigError({"field 'num_classes': corpus has " + std::to_string(corpus.num_classes) + " classes"});
  }

  std::mt19937_64 rng(cfg.seed);
  ModelParams params;
  if (!cfg.resume.empty()) {
    Checkpoint ck = load_checkpoint(cfg.resume);
    if (!(ck.params.spec() == spec)) {
      throw ConfigError({"field 'resume': checkpoint dimensions or variant do not match the config"});
    }
    if (!(ck.words == corpus.words) || !(ck.tags == corpus.tags)) {
      throw ConfigError({"field 'resume': checkpoint vocabularies do not match the corpus"});
    }
    params = std::move(ck.params);
  } else {
    params = ModelParams(spec, rng);
    if (!cfg.embeddings.empty()) {
      auto loaded = load_embeddings(cfg.embeddings, corpus.words, static_cast<std::size_t>(spec.dims.word), rng);
      params.set(PId::WordEmb, std::move(loaded.table));
    }
  }
  params[PId::WordEmb].trainable = cfg.fine_tune;

  Dropout drop;
  drop.mode = Mode::Train;
  drop.rng = &rng;
  drop.rates = {cfg.p_drop, cfg.p_drop, is_lstm(spec.variant) ? cfg.effective_p_rec() : 0.0};

  auto snapshot = [&]() {
    Checkpoint ck;
    ck.params = params;
    ck.words = corpus.words;
    ck.tags = corpus.tags;
    ck.meta = {{"config", cfg.to_json()}};
    return ck;
  };

  TrainResult result;
  result.best = snapshot();
  double best_acc = -1.0;
  int since_best = 0;
  std::vector<std::size_t> order(corpus.train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch);

  auto emit = [&](const EpochRecord& r) {
    result.history.push_back(r);
    if (log) *log << r.to_json().dump() << '\n' << std::flush;
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      for (std::size_t k = start; k < end; ++k) {
        ad::Tape tape;
        const ExampleGraph g = build_example(tape, params, corpus.train[order[k]], drop);
        loss_sum += g.loss.value()[0];
        tape.backward(g.loss);
      }
      scale_grads(params, 1.0 / static_cast<double>(end - start));
      adagrad_step(params, cfg.lr, cfg.effective_l2(), cfg.fine_tune);
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());
    const double train_secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double train_acc = 0.0;
    if (cfg.eval_train) train_acc = evaluate(params, corpus.train, cfg.threads).accuracy;
    emit({epoch, "train", train_loss, train_acc, train_secs});

    if (corpus.dev.empty()) {
      result.best = snapshot();
      result.best_epoch = epoch;
      continue;
    }
    const auto t1 = std::chrono::steady_clock::now();
    const Metrics dev = evaluate(params, corpus.dev, cfg.threads);
    emit({epoch, "dev", dev.loss, dev.accuracy,
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count()});
    if (dev.accuracy > best_acc) {
      best_acc = dev.accuracy;
      result.best = snapshot();
      result.best_epoch = epoch;
      result.best_dev_accuracy = dev.accuracy;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  if (!corpus.test.empty()) {
    const auto t2 = std::chrono::steady_clock::now();
    result.test = evaluate(result.best, corpus.test, cfg.threads);
    emit({result.best_epoch, "test", result.test->loss, result.test->accuracy,
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t2).count()});
  }
  return result;
}

/// Index partition for k-fold cross-validation; fold membership is drawn from
/// `seed` and folds differ in size by at most one.
inline std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold: need at least 2 folds");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) folds[i % static_cast<std::size_t>(k)].push_back(idx[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

struct CrossValidation {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

/// k-fold CV over the training split: fold i is the test set, the last tenth
/// of the remainder is dev, and fold i trains with seed `cfg.seed + i`.
inline CrossValidation cross_validate(const TrainConfig& cfg, const Corpus& corpus, int k,
                                      std::ostream* log = nullptr) {
  const auto folds = kfold_indices(corpus.train.size(), k, cfg.seed);
  CrossValidation cv;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Corpus fold;
    fold.task = corpus.task;
    fold.words = corpus.words;
    fold.tags = corpus.tags;
    fold.num_classes = corpus.num_classes;
    std::vector<std::size_t> rest;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g == f) continue;
      rest.insert(rest.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(rest.begin(), rest.end());
    const std::size_t n_dev = rest.size() / 10;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      (i + n_dev >= rest.size() ? fold.dev : fold.train).push_back(corpus.train[rest[i]]);
    }
    for (std::size_t i : folds[f]) fold.test.push_back(corpus.train[i]);
    TrainConfig fc = cfg;
    fc.seed = cfg.seed + f;
    const TrainResult r = train(fc, fold, log);
    cv.fold_accuracy.push_back(r.test ? r.test->accuracy : 0.0);
  }
  cv.mean_accuracy = std::accumulate(cv.fold_accuracy.begin(), cv.fold_accuracy.end(), 0.0) /
                     static_cast<double>(cv.fold_accuracy.size());
  return cv;
}

}  // namespace tgc
