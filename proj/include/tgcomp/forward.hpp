#pragma once

// Bottom-up composition over a binary tree for every model variant.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgcomp/autodiff.hpp"
#include "tgcomp/dropout.hpp"
#include "tgcomp/model.hpp"
#include "tgcomp/tree.hpp"

namespace tgc {

/// Scaling vectors predicted by the hyper network at one node. `w` is only
/// produced by the TreeLSTM variants.
struct ZSignal {
  ad::Var w, u, b;
};

/// Per-node results; fields not defined by the variant stay invalid.
struct NodeState {
  ad::Var h;        // main hidden
  ad::Var c;        // main memory (TreeLSTM variants)
  ad::Var hyper_h;  // hyper hidden
  ad::Var hyper_c;  // hyper memory (TG-HTreeLSTM)
  ad::Var x;        // head word
  ad::Var fused;    // hyper-network input
  ZSignal z;
};

struct Forward {
  std::vector<NodeState> nodes;  // post-order, parallel to Tree::nodes
  const NodeState& root() const { return nodes.back(); }
};

/// The model's dense parameters registered on one tape.
class Bound {
 public:
  Bound(ad::Tape& tape, ModelParams& m) : tape_(&tape), m_(&m) {
    m.for_each([&](PId id, Param& p) {
      if (id == PId::TagEmb || id == PId::WordEmb) return;
      vars_[static_cast<std::size_t>(id)] = tape.param(p);
    });
    const Dims& d = m.spec().dims;
    zero_tag_ = tape.constant(Tensor::vector(static_cast<std::size_t>(d.tag)));
    zero_word_ = tape.constant(Tensor::vector(static_cast<std::size_t>(d.word)));
    zero_hidden_ = tape.constant(Tensor::vector(static_cast<std::size_t>(d.hidden)));
  }

  ad::Var operator[](PId id) const {
    const ad::Var v = vars_[static_cast<std::size_t>(id)];
    if (!v.valid()) throw std::out_of_range(std::string("parameter not bound: ") + param_name(id));
    return v;
  }
  ad::Var word(int id) const { return tape_->lookup((*m_)[PId::WordEmb], static_cast<std::size_t>(id)); }
  /// Tag embedding, or zeros for the tag-blind ablation.
  ad::Var tag(int id) const {
    if (is_tag_blind(spec().variant)) return zero_tag_;
    return tape_->lookup((*m_)[PId::TagEmb], static_cast<std::size_t>(id));
  }

  ad::Var zero_tag() const { return zero_tag_; }
  ad::Var zero_word() const { return zero_word_; }
  ad::Var zero_hidden() const { return zero_hidden_; }
  const ModelSpec& spec() const { return m_->spec(); }
  ad::Tape& tape() const { return *tape_; }

 private:
  ad::Tape* tape_;
  ModelParams* m_;
  std::array<ad::Var, kNumParamIds> vars_{};
  ad::Var zero_tag_, zero_word_, zero_hidden_;
};

struct LstmCell {
  ad::Var h, c;
};

/// Splits stacked pre-activations in (g, i, f_l, f_r, o) order and applies the
/// TreeLSTM update. Leaves pass invalid child memories (children are zero).
/// `candidate` transforms the i * g term (recurrent dropout).
template <typename Candidate>
LstmCell lstm_cell(ad::Var pre, std::size_t h, ad::Var c_left, ad::Var c_right,
                   Candidate&& candidate) {
  using namespace ad;
  const Var g = ad::tanh(slice(pre, 0, h));
  const Var i = sigmoid(slice(pre, h, h));
  Var c = candidate(i * g);
  if (c_left.valid()) {
    const Var fl = sigmoid(slice(pre, 2 * h, h));
    const Var fr = sigmoid(slice(pre, 3 * h, h));
    c = c + fl * c_left + fr * c_right;
  }
  const Var o = sigmoid(slice(pre, 4 * h, h));
  return {o * ad::tanh(c), c};
}

inline LstmCell lstm_cell(ad::Var pre, std::size_t h, ad::Var c_left, ad::Var c_right) {
  return lstm_cell(pre, h, c_left, c_right, [](ad::Var v) { return v; });
}

/// Head word of an inner node: a gate over the children's head words driven
/// by the tag triple and both head words.
inline ad::Var head_word(const Bound& b, ad::Var t_j, ad::Var t_l, ad::Var t_r, ad::Var x_l,
                         ad::Var x_r) {
  using namespace ad;
  const Var a = sigmoid(matvec(b[PId::HeadW], concat({t_j, t_l, t_r, x_l, x_r})) + b[PId::HeadB]);
  return a * x_l + one_minus(a) * x_r;
}

/// Hyper-network input from syntactic (tags) and semantic (head word, child
/// hiddens) information.
inline ad::Var fuse(const Bound& b, ad::Var t_j, ad::Var t_l, ad::Var t_r, ad::Var x,
                    ad::Var h_l, ad::Var h_r) {
  using namespace ad;
  if (b.spec().fusion == Fusion::Concat) {
    return relu(matvec(b[PId::FuseW], concat({t_j, t_l, t_r, x, h_l, h_r})) + b[PId::FuseB]);
  }
  const Var tags = matvec(b[PId::FuseWt], concat({t_j, t_l, t_r}));
  const Var sem = matvec(b[PId::FuseWs], concat({x, h_l, h_r}));
  return relu(tags * sem + b[PId::FuseB]);
}

struct Fused {
  ad::Var x;      // head word
  ad::Var fused;  // hyper input
};

/// Head word and fused hyper input at an inner node.
inline Fused fuse_inputs(const Bound& b, const Tree& tree, int node, const NodeState& left,
                         const NodeState& right) {
  const TreeNode& n = tree[node];
  const ad::Var t_j = b.tag(n.tag);
  const ad::Var t_l = b.tag(tree[n.left].tag);
  const ad::Var t_r = b.tag(tree[n.right].tag);
  const ad::Var x = head_word(b, t_j, t_l, t_r, left.x, right.x);
  return {x, fuse(b, t_j, t_l, t_r, x, left.h, right.h)};
}

/// Leaf case: the node's own tag, zero child tags and hiddens, own word.
inline Fused fuse_leaf(const Bound& b, const TreeNode& n, ad::Var x) {
  const ad::Var t_j = b.tag(n.tag);
  return {x, fuse(b, t_j, b.zero_tag(), b.zero_tag(), x, b.zero_hidden(), b.zero_hidden())};
}

namespace fwd {

inline void check_tree(const Tree& t) {
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("forward: ") + e.what());
  }
}

inline void check_variant(const ModelParams& m, bool want_lstm, bool want_hyper, const char* fn) {
  const Variant v = m.spec().variant;
  if (is_lstm(v) != want_lstm || is_hyper(v) != want_hyper) {
    throw std::invalid_argument(std::string(fn) + ": wrong variant " + variant_name(v));
  }
}

inline ad::Var leaf_projection(const Bound& b, ad::Var x) {
  return ad::tanh(ad::matvec(b[PId::LeafW], x) + b[PId::LeafB]);
}

inline ZSignal project_z(const Bound& b, ad::Var hyper_h, bool with_w) {
  using ad::matvec;
  ZSignal z;
  if (with_w) z.w = matvec(b[PId::ZWw], hyper_h) + b[PId::ZBw];
  z.u = matvec(b[PId::ZWu], hyper_h) + b[PId::ZBu];
  z.b = matvec(b[PId::ZWb], hyper_h) + b[PId::ZBb];
  return z;
}

}  // namespace fwd

/// Static RecNN: tanh(U [h_l; h_r] + b); leaves tanh(W_leaf x + b_leaf).
inline Forward forward_recnn(ad::Tape& tape, ModelParams& m, const Tree& tree,
                             const Dropout& drop = {}) {
  using namespace ad;
  fwd::check_tree(tree);
  fwd::check_variant(m, false, false, "forward_recnn");
  Bound b(tape, m);
  Forward f;
  f.nodes.resize(tree.size());
  for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
    const TreeNode& n = tree[i];
    NodeState& s = f.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      s.x = drop.embedding(b.word(n.word));
      s.h = fwd::leaf_projection(b, s.x);
    } else {
      const NodeState& l = f.nodes[static_cast<std::size_t>(n.left)];
      const NodeState& r = f.nodes[static_cast<std::size_t>(n.right)];
      s.h = ad::tanh(matvec(b[PId::MainU], concat({l.h, r.h})) + b[PId::MainB]);
    }
  }
  return f;
}

/// Static binary TreeLSTM; input is the word embedding at leaves, zero above.
inline Forward forward_treelstm(ad::Tape& tape, ModelParams& m, const Tree& tree,
                                const Dropout& drop = {}) {
  using namespace ad;
  fwd::check_tree(tree);
  fwd::check_variant(m, true, false, "forward_treelstm");
  Bound b(tape, m);
  const auto h = static_cast<std::size_t>(m.spec().dims.hidden);
  auto rec = [&](Var v) { return drop.recurrent(v); };
  Forward f;
  f.nodes.resize(tree.size());
  for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
    const TreeNode& n = tree[i];
    NodeState& s = f.nodes[static_cast<std::size_t>(i)];
    LstmCell cell;
    if (n.is_leaf()) {
      s.x = drop.embedding(b.word(n.word));
      cell = lstm_cell(matvec(b[PId::MainW], s.x) + b[PId::MainB], h, Var{}, Var{}, rec);
    } else {
      const NodeState& l = f.nodes[static_cast<std::size_t>(n.left)];
      const NodeState& r = f.nodes[static_cast<std::size_t>(n.right)];
      cell = lstm_cell(matvec(b[PId::MainU], concat({l.h, r.h})) + b[PId::MainB], h, l.c, r.c, rec);
    }
    s.h = cell.h;
    s.c = cell.c;
  }
  return f;
}

namespace fwd {

inline Forward hyper_recnn(ad::Tape& tape, ModelParams& m, const Tree& tree, const Dropout& drop) {
  using namespace ad;
  check_tree(tree);
  check_variant(m, false, true, "forward_tg_hrecnn");
  Bound b(tape, m);
  Forward f;
  f.nodes.resize(tree.size());
  for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
    const TreeNode& n = tree[i];
    NodeState& s = f.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      s.x = drop.embedding(b.word(n.word));
      s.fused = fuse_leaf(b, n, s.x).fused;
      s.hyper_h = ad::tanh(matvec(b[PId::HyperW], s.fused) + b[PId::HyperB]);
      s.h = leaf_projection(b, s.x);
      continue;
    }
    const NodeState& l = f.nodes[static_cast<std::size_t>(n.left)];
    const NodeState& r = f.nodes[static_cast<std::size_t>(n.right)];
    const Fused in = fuse_inputs(b, tree, i, l, r);
    s.x = in.x;
    s.fused = in.fused;
    s.hyper_h = ad::tanh(matvec(b[PId::HyperW], s.fused) +
                         matvec(b[PId::HyperU], concat({l.hyper_h, r.hyper_h})) + b[PId::HyperB]);
    s.z = project_z(b, s.hyper_h, false);
    s.h = ad::tanh(s.z.u * matvec(b[PId::MainU], concat({l.h, r.h})) + s.z.b);
  }
  return f;
}

inline Forward hyper_treelstm(ad::Tape& tape, ModelParams& m, const Tree& tree,
                              const Dropout& drop) {
  using namespace ad;
  check_tree(tree);
  check_variant(m, true, true, "forward_tg_htreelstm");
  Bound b(tape, m);
  const auto h = static_cast<std::size_t>(m.spec().dims.hidden);
  const auto hh = static_cast<std::size_t>(m.spec().dims.hyper_h);
  auto rec = [&](Var v) { return drop.recurrent(v); };
  Forward f;
  f.nodes.resize(tree.size());
  for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
    const TreeNode& n = tree[i];
    NodeState& s = f.nodes[static_cast<std::size_t>(i)];
    LstmCell hyper, main;
    if (n.is_leaf()) {
      s.x = drop.embedding(b.word(n.word));
      s.fused = fuse_leaf(b, n, s.x).fused;
      hyper = lstm_cell(matvec(b[PId::HyperW], s.fused) + b[PId::HyperB], hh, Var{}, Var{});
      s.z = project_z(b, hyper.h, true);
      main = lstm_cell(s.z.w * matvec(b[PId::MainW], s.x) + s.z.b, h, Var{}, Var{}, rec);
    } else {
      const NodeState& l = f.nodes[static_cast<std::size_t>(n.left)];
      const NodeState& r = f.nodes[static_cast<std::size_t>(n.right)];
      const Fused in = fuse_inputs(b, tree, i, l, r);
      s.x = in.x;
      s.fused = in.fused;
      hyper = lstm_cell(matvec(b[PId::HyperW], s.fused) +
                            matvec(b[PId::HyperU], concat({l.hyper_h, r.hyper_h})) +
                            b[PId::HyperB],
                        hh, l.hyper_c, r.hyper_c);
      s.z = project_z(b, hyper.h, true);
      main = lstm_cell(s.z.u * matvec(b[PId::MainU], concat({l.h, r.h})) + s.z.b, h, l.c, r.c, rec);
    }
    s.hyper_h = hyper.h;
    s.hyper_c = hyper.c;
    s.h = main.h;
    s.c = main.c;
  }
  return f;
}

}  // namespace fwd

/// Main RecNN whose composition rows are scaled by z_u and shifted by z_b,
/// both predicted per node by a tag-aware hyper RecNN.
inline Forward forward_tg_hrecnn(ad::Tape& tape, ModelParams& m, const Tree& tree,
                                 const Dropout& drop = {}) {
  if (is_tag_blind(m.spec().variant)) throw std::invalid_argument("forward_tg_hrecnn: tag-blind variant");
  return fwd::hyper_recnn(tape, m, tree, drop);
}

/// Main TreeLSTM with z_w, z_u, z_b predicted by a tag-aware hyper TreeLSTM.
inline Forward forward_tg_htreelstm(ad::Tape& tape, ModelParams& m, const Tree& tree,
                                    const Dropout& drop = {}) {
  if (is_tag_blind(m.spec().variant)) throw std::invalid_argument("forward_tg_htreelstm: tag-blind variant");
  return fwd::hyper_treelstm(tape, m, tree, drop);
}

/// The hyper variants with every tag embedding replaced by zeros.
inline Forward forward_dc_ablation(ad::Tape& tape, ModelParams& m, const Tree& tree,
                                   const Dropout& drop = {}) {
  if (!is_tag_blind(m.spec().variant)) throw std::invalid_argument("forward_dc_ablation: not a DC variant");
  return is_lstm(m.spec().variant) ? fwd::hyper_treelstm(tape, m, tree, drop)
                                   : fwd::hyper_recnn(tape, m, tree, drop);
}

inline Forward forward(ad::Tape& tape, ModelParams& m, const Tree& tree, const Dropout& drop = {}) {
  switch (m.spec().variant) {
    case Variant::RecNN: return forward_recnn(tape, m, tree, drop);
    case Variant::TreeLSTM: return forward_treelstm(tape, m, tree, drop);
    case Variant::TGHRecNN: return forward_tg_hrecnn(tape, m, tree, drop);
    case Variant::TGHTreeLSTM: return forward_tg_htreelstm(tape, m, tree, drop);
    case Variant::DCHRecNN:
    case Variant::DCHTreeLSTM: return forward_dc_ablation(tape, m, tree, drop);
  }
  throw std::logic_error("forward: unknown variant");
}

/// One inner node's z_u, with its tag triple and leaf span.
struct ZRow {
  int node = 0;
  std::string path;
  int parent_tag = 0, left_tag = 0, right_tag = 0;
  std::pair<int, int> span;       // [begin, end) leaf positions
  std::pair<int, int> left_span;  // split point is left_span.second
  std::vector<double> z_u;
};

/// Flat export of z_u at every inner node, in post-order.
inline std::vector<ZRow> collect_zsignals(const Tree& tree, const Forward& f, const ModelSpec& spec) {
  if (!is_hyper(spec.variant)) {
    throw std::invalid_argument(std::string("collect_zsignals: ") + variant_name(spec.variant) +
                                " has no hyper network");
  }
  const auto sp = spans(tree);
  const auto paths = node_paths(tree);
  std::vector<ZRow> rows;
  for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
    const TreeNode& n = tree[i];
    if (n.is_leaf()) continue;
    ZRow r;
    r.node = i;
    r.path = paths[static_cast<std::size_t>(i)];
    r.parent_tag = n.tag;
    r.left_tag = tree[n.left].tag;
    r.right_tag = tree[n.right].tag;
    r.span = sp[static_cast<std::size_t>(i)];
    r.left_span = sp[static_cast<std::size_t>(n.left)];
    r.z_u = f.nodes[static_cast<std::size_t>(i)].z.u.value().data;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace tgc
