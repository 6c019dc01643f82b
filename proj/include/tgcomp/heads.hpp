#pragma once

// Output layers and the training objective.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tgcomp/corpus.hpp"
#include "tgcomp/forward.hpp"

namespace tgc {

/// softmax computed stably; strictly positive and sums to one.
inline std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = logits.front();
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
  for (double& v : p) v /= z;
  return p;
}

inline std::size_t argmax(const std::vector<double>& xs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] > xs[best]) best = i;
  }
  return best;
}

/// Sentence classifier logits: W_s h + b_s.
inline ad::Var classify_logits(const Bound& b, ad::Var h) {
  return ad::matvec(b[PId::OutW], h) + b[PId::OutB];
}

/// Matching logits over the pair feature [h_s * h_t; |h_s - h_t|] through one
/// ReLU hidden layer.
inline ad::Var match_logits(const Bound& b, ad::Var h_s, ad::Var h_t, const Dropout& drop = {}) {
  using namespace ad;
  const Var feat = drop.output(concat({h_s * h_t, ad::abs(h_s - h_t)}));
  const Var hidden = relu(matvec(b[PId::MlpW], feat) + b[PId::MlpB]);
  return matvec(b[PId::OutW], hidden) + b[PId::OutB];
}

/// Class distribution for a single sentence representation.
inline std::vector<double> classify_head(ad::Tape& tape, ModelParams& m, ad::Var h) {
  Bound b(tape, m);
  return softmax(classify_logits(b, h).value().data);
}

inline std::vector<double> match_head(ad::Tape& tape, ModelParams& m, ad::Var h_s, ad::Var h_t) {
  Bound b(tape, m);
  return softmax(match_logits(b, h_s, h_t).value().data);
}

/// Sum of cross-entropies over every labeled node of a classification tree.
inline ad::Var tree_loss(const Bound& b, const Tree& tree, const Forward& f,
                         const Dropout& drop = {}) {
  ad::Var total;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    if (!n.has_label()) continue;
    const ad::Var h = drop.output(f.nodes[i].h);
    const ad::Var l = ad::softmax_xent(classify_logits(b, h), static_cast<std::size_t>(n.label));
    total = total.valid() ? total + l : l;
  }
  if (!total.valid()) throw std::invalid_argument("tree_loss: tree has no labeled node");
  return total;
}

/// Cross-entropy of the pair relation label.
inline ad::Var pair_loss(const Bound& b, const Forward& first, const Forward& second, int label,
                         const Dropout& drop = {}) {
  if (label < 0) throw std::invalid_argument("pair_loss: missing label");
  return ad::softmax_xent(match_logits(b, first.root().h, second.root().h, drop),
                          static_cast<std::size_t>(label));
}

/// Loss of one example built on `tape`; also reports the root logits.
struct ExampleGraph {
  ad::Var loss;
  ad::Var root_logits;
  Forward first;
  Forward second;
};

inline ExampleGraph build_example(ad::Tape& tape, ModelParams& m, const Example& ex,
                                  const Dropout& drop = {}, bool root_only = false) {
  ExampleGraph g;
  g.first = forward(tape, m, ex.tree, drop);
  Bound b(tape, m);
  if (m.spec().task == Task::Match) {
    if (!ex.other) throw std::invalid_argument("build_example: pair example without a second tree");
    g.second = forward(tape, m, *ex.other, drop);
    g.root_logits = match_logits(b, g.first.root().h, g.second.root().h, drop);
    g.loss = ad::softmax_xent(g.root_logits, static_cast<std::size_t>(ex.label));
    return g;
  }
  if (root_only) {
    g.root_logits = classify_logits(b, drop.output(g.first.root().h));
    g.loss = ad::softmax_xent(g.root_logits, static_cast<std::size_t>(ex.label));
    return g;
  }
  g.loss = tree_loss(b, ex.tree, g.first, drop);
  return g;
}

}  // namespace tgc
