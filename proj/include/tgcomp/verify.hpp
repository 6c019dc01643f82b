#pragma once

// Gradient-check harness over whole models on random small instances.

#include <algorithm>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "tgcomp/grad_check.hpp"
#include "tgcomp/heads.hpp"

namespace tgc {

/// Uniformly random binary tree with `leaves` leaves; tags, words and, with
/// probability `inner_label_p`, inner labels are drawn at random. The root is
/// always labeled.
inline Tree random_tree(int leaves, std::size_t num_words, std::size_t num_tags, int num_classes,
                        std::mt19937_64& rng, double inner_label_p = 0.0) {
  std::uniform_int_distribution<int> word(1, static_cast<int>(num_words) - 1);
  std::uniform_int_distribution<int> tag(1, static_cast<int>(num_tags) - 1);
  std::uniform_int_distribution<int> cls(0, num_classes - 1);
  std::bernoulli_distribution labeled(inner_label_p);
  Tree t;
  auto build = [&](auto& self, int n) -> int {
    TreeNode node;
    node.tag = tag(rng);
    if (n == 1) {
      node.word = word(rng);
    } else {
      std::uniform_int_distribution<int> split(1, n - 1);
      const int k = split(rng);
      node.left = self(self, k);
      node.right = self(self, n - k);
      if (labeled(rng)) node.label = cls(rng);
    }
    t.nodes.push_back(node);
    return static_cast<int>(t.nodes.size()) - 1;
  };
  build(build, leaves);
  t.nodes.back().label = cls(rng);
  return t;
}

/// Adds uniform(-scale, scale) noise to every parameter, so the z biases stay
/// near their initial values.
inline void randomize(ModelParams& m, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  m.for_each([&](PId, Param& p) {
    for (double& v : p.value.data) v += u(rng);
  });
}

// 5-point stencil, step 1e-3.
inline ad::GradCheckOptions model_check_options() {
  ad::GradCheckOptions o;
  o.step = 1e-3;
  o.five_point = true;
  return o;
}

struct ModelCheck {
  Variant variant = Variant::TGHTreeLSTM;
  Fusion fusion = Fusion::Concat;
  Task task = Task::Classify;
  Dims dims{4, 4, 4, 4, 4};
  int leaves = 4;
  double dropout = 0.3;       // masks are frozen per closure call
  double inner_label_p = 0.5;
  double kink_margin = 5e-3;  // redraw instances with a relu/abs input closer to 0
  ad::GradCheckOptions options = model_check_options();
};

struct CheckInstance {
  ModelParams params;
  Example example;
  std::uint64_t mask_seed = 0;
};

inline bool distinct_words(const Tree& t) {
  std::vector<int> w;
  for (const auto& n : t.nodes) {
    if (n.is_leaf()) w.push_back(n.word);
  }
  std::sort(w.begin(), w.end());
  return std::adjacent_find(w.begin(), w.end()) == w.end();
}

inline Dropout frozen_dropout(std::mt19937_64& mask_rng, double p) {
  Dropout drop;
  drop.mode = Mode::Train;
  drop.rng = &mask_rng;
  drop.rates = {p, p, p};
  return drop;
}

/// Random parameters and example for `seed`. Leaves carry distinct words and
/// no relu/abs input lies within `kink_margin` of zero, so central
/// differences are not polluted by exact cancellations or kinks. When no
/// draw clears the margin, the draw farthest from any kink is returned.
inline CheckInstance check_instance(const ModelCheck& mc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelSpec spec;
  spec.variant = mc.variant;
  spec.fusion = mc.fusion;
  spec.task = mc.task;
  spec.dims = mc.dims;
  spec.num_classes = 3;
  spec.num_words = static_cast<std::size_t>(2 * std::max(mc.leaves, 4));
  spec.num_tags = 5;
  std::optional<CheckInstance> best;
  double best_margin = -1.0;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    CheckInstance ci;
    ci.params = ModelParams(spec, rng);
    randomize(ci.params, rng);
    Example& ex = ci.example;
    ex.tree = random_tree(mc.leaves, spec.num_words, spec.num_tags, spec.num_classes, rng, mc.inner_label_p);
    ex.label = ex.tree.root_node().label;
    if (mc.task == Task::Match) {
      ex.other = random_tree(std::max(1, mc.leaves - 1), spec.num_words, spec.num_tags, spec.num_classes, rng);
    }
    ci.mask_seed = rng();
    if (!distinct_words(ex.tree) || (ex.other && !distinct_words(*ex.other))) continue;
    ad::Tape tape;
    std::mt19937_64 mask_rng(ci.mask_seed);
    build_example(tape, ci.params, ex, frozen_dropout(mask_rng, mc.dropout));
    const double margin = tape.kink_margin();
    if (margin >= mc.kink_margin) return ci;
    if (margin > best_margin) {
      best_margin = margin;
      best = std::move(ci);
    }
  }
  if (!best) throw std::runtime_error("check_instance: no instance with distinct leaf words");
  return std::move(*best);
}

/// Builds a random model and example from `seed` and checks every parameter.
inline ad::GradCheckReport grad_check_model(const ModelCheck& mc, std::uint64_t seed) {
  CheckInstance ci = check_instance(mc, seed);
  auto closure = [&](ad::Tape& tape) {
    std::mt19937_64 mask_rng(ci.mask_seed);
    return build_example(tape, ci.params, ci.example, frozen_dropout(mask_rng, mc.dropout)).loss;
  };
  std::vector<ad::NamedParam> params;
  ci.params.for_each([&](PId id, Param& p) { params.push_back({param_name(id), &p}); });
  return ad::grad_check(closure, params, mc.options);
}

}  // namespace tgc
