#pragma once

// Define-by-run reverse-mode differentiation. A Tape records one computation
// graph (one tree, typically); Var is a handle to a value recorded on it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tgcomp/tensor.hpp"

namespace tgc::ad {

enum class Op {
  Constant,
  Param,
  Lookup,
  MatVec,
  Add,
  Sub,
  Mul,
  Tanh,
  Sigmoid,
  Relu,
  Abs,
  Concat,
  Slice,
  Affine,  // alpha * x + beta
  Mask,
  SoftmaxXent,
  Sum,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Param: return "param";
    case Op::Lookup: return "lookup";
    case Op::MatVec: return "matvec";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Relu: return "relu";
    case Op::Abs: return "abs";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::Affine: return "affine";
    case Op::Mask: return "mask";
    case Op::SoftmaxXent: return "softmax_xent";
    case Op::Sum: return "sum";
  }
  return "?";
}

inline std::optional<Op> op_from_name(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(Op::Sum); ++k) {
    if (s == op_name(static_cast<Op>(k))) return static_cast<Op>(k);
  }
  return std::nullopt;
}

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  std::size_t size() const { return value().size(); }
};

class Tape {
 public:
  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor t) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(t);
    return push(std::move(n));
  }

  /// Registers a parameter as a leaf. Its gradient accumulates straight into
  /// `p.grad`; the value is read in place, not copied.
  Var param(Param& p) {
    Node n;
    n.op = Op::Param;
    n.param = &p;
    n.requires_grad = p.trainable;
    return push(std::move(n));
  }

  /// Row `row` of a 2-D parameter table, as a vector.
  Var lookup(Param& table, std::size_t row) {
    if (!table.value.is_matrix() || row >= table.value.rows()) {
      throw ShapeError(std::string("lookup: row ") + std::to_string(row) +
                       " out of range for table " + table.value.shape_str());
    }
    const std::size_t c = table.value.cols();
    Node n;
    n.op = Op::Lookup;
    n.param = &table;
    n.index = row;
    n.requires_grad = table.trainable;
    n.value = Tensor::vector(c);
    std::copy_n(table.value.data.begin() + static_cast<std::ptrdiff_t>(row * c), c,
                n.value.data.begin());
    return push(std::move(n));
  }

  const Tensor& value(Var v) const { return value(v.id); }
  const Tensor& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.op == Op::Param ? n.param->value : n.value;
  }
  /// Gradient of the last backward() with respect to an intermediate node.
  const Tensor& grad(Var v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id)];
    return n.op == Op::Param ? n.param->grad : n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

  /// Smallest |input| over every relu and abs node: how far the recorded
  /// point is from a kink.
  double kink_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const Node& n : nodes_) {
      if (n.op != Op::Relu && n.op != Op::Abs) continue;
      for (double v : value(n.inputs.front()).data) m = std::min(m, std::fabs(v));
    }
    return m;
  }

  /// Test fixture: multiply the backward contribution of `op` by 1.5.
  void corrupt_backward(std::optional<Op> op) { corrupt_ = op; }

  void backward(Var out);

  // Recording interface used by the primitive functions below.
  struct Node {
    Op op = Op::Constant;
    Tensor value;
    Tensor grad;
    std::vector<int> inputs;
    Param* param = nullptr;
    std::size_t index = 0;  // lookup row, slice offset or label
    double alpha = 1.0, beta = 0.0;
    bool requires_grad = false;
  };

  Var record(Op op, std::vector<int> inputs, Tensor value, std::size_t index = 0,
             double alpha = 1.0, double beta = 0.0) {
    Node n;
    n.op = op;
    n.value = std::move(value);
    n.index = index;
    n.alpha = alpha;
    n.beta = beta;
    for (int i : inputs) n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(i)].requires_grad;
    n.inputs = std::move(inputs);
    return push(std::move(n));
  }

 private:
  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size() - 1)};
  }
  Tensor& grad_ref(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.op == Op::Param ? n.param->grad : n.grad;
  }
  bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  void apply_rule(Node& n);

  std::vector<Node> nodes_;
  std::optional<Op> corrupt_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

namespace detail {

inline Tape& same_tape(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape != b.tape) {
    throw std::invalid_argument(std::string(op) + ": operands belong to different tapes");
  }
  return *a.tape;
}

inline void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}

inline void require_vector(const char* op, const Tensor& a) {
  if (!a.is_vector()) {
    throw ShapeError(std::string(op) + ": expected a vector, got " + a.shape_str());
  }
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename F>
Var unary(Op op, Var x, F f) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape, std::vector<double>(xv.size()));
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return x.tape->record(op, {x.id}, std::move(out));
}

template <typename F>
Var binary(Op op, Var a, Var b, F f) {
  Tape& t = same_tape(op_name(op), a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same(op_name(op), av, bv);
  Tensor out(av.shape, std::vector<double>(av.size()));
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
  return t.record(op, {a.id, b.id}, std::move(out));
}

}  // namespace detail

/// W (r x c) times x (c) -> (r).
inline Var matvec(Var w, Var x) {
  Tape& t = detail::same_tape("matvec", w, x);
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  if (!wv.is_matrix() || !xv.is_vector() || wv.cols() != xv.size()) {
    throw ShapeError("matvec: shape mismatch " + wv.shape_str() + " vs " + xv.shape_str());
  }
  const std::size_t r = wv.rows(), c = wv.cols();
  Tensor out = Tensor::vector(r);
  const double* wp = wv.data.data();
  const double* xp = xv.data.data();
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    const double* row = wp + i * c;
    for (std::size_t j = 0; j < c; ++j) s += row[j] * xp[j];
    out[i] = s;
  }
  return t.record(Op::MatVec, {w.id, x.id}, std::move(out));
}

inline Var operator+(Var a, Var b) {
  return detail::binary(Op::Add, a, b, [](double x, double y) { return x + y; });
}
inline Var operator-(Var a, Var b) {
  return detail::binary(Op::Sub, a, b, [](double x, double y) { return x - y; });
}
/// Element-wise (Hadamard) product.
inline Var operator*(Var a, Var b) {
  return detail::binary(Op::Mul, a, b, [](double x, double y) { return x * y; });
}

inline Var tanh(Var x) {
  return detail::unary(Op::Tanh, x, [](double v) { return std::tanh(v); });
}
inline Var sigmoid(Var x) { return detail::unary(Op::Sigmoid, x, detail::sigmoid); }
inline Var relu(Var x) {
  return detail::unary(Op::Relu, x, [](double v) { return v > 0.0 ? v : 0.0; });
}
inline Var abs(Var x) {
  return detail::unary(Op::Abs, x, [](double v) { return std::fabs(v); });
}

/// alpha * x + beta, element-wise.
inline Var affine(Var x, double alpha, double beta) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape, std::vector<double>(xv.size()));
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = alpha * xv[i] + beta;
  return x.tape->record(Op::Affine, {x.id}, std::move(out), 0, alpha, beta);
}
inline Var scale(Var x, double s) { return affine(x, s, 0.0); }
inline Var one_minus(Var x) { return affine(x, -1.0, 1.0); }

inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape& t = *parts.front().tape;
  std::size_t n = 0;
  std::vector<int> ids;
  ids.reserve(parts.size());
  for (const Var& p : parts) {
    detail::same_tape("concat", parts.front(), p);
    detail::require_vector("concat", p.value());
    n += p.size();
    ids.push_back(p.id);
  }
  Tensor out = Tensor::vector(n);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += v.size();
  }
  return t.record(Op::Concat, std::move(ids), std::move(out));
}
inline Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

/// Elements [offset, offset + len) of a vector.
inline Var slice(Var x, std::size_t offset, std::size_t len) {
  const Tensor& xv = x.value();
  detail::require_vector("slice", xv);
  if (offset + len > xv.size()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " +
                     std::to_string(offset + len) + ") exceeds " + xv.shape_str());
  }
  Tensor out = Tensor::vector(len);
  std::copy_n(xv.data.begin() + static_cast<std::ptrdiff_t>(offset), len, out.data.begin());
  return x.tape->record(Op::Slice, {x.id}, std::move(out), offset);
}

/// Multiplies by a fixed mask (dropout). The mask receives no gradient.
inline Var mask(Var x, const Tensor& m) {
  detail::require_same("mask", x.value(), m);
  Var mv = x.tape->constant(m);
  const Tensor& xv = x.value();
  Tensor out(xv.shape, std::vector<double>(xv.size()));
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * m[i];
  return x.tape->record(Op::Mask, {x.id, mv.id}, std::move(out));
}

/// -log softmax(logits)[label], as a length-1 tensor.
inline Var softmax_xent(Var logits, std::size_t label) {
  const Tensor& lv = logits.value();
  detail::require_vector("softmax_xent", lv);
  if (label >= lv.size()) {
    throw ShapeError("softmax_xent: label " + std::to_string(label) + " out of range for " +
                     lv.shape_str());
  }
  double mx = lv[0];
  for (double v : lv.data) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : lv.data) z += std::exp(v - mx);
  const double loss = mx + std::log(z) - lv[label];
  return logits.tape->record(Op::SoftmaxXent, {logits.id}, Tensor::vector({loss}), label);
}

/// Sum of all elements, as a length-1 tensor.
inline Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  return x.tape->record(Op::Sum, {x.id}, Tensor::vector({s}));
}

inline void Tape::backward(Var out) {
  if (out.tape != this) throw std::invalid_argument("backward: variable is not on this tape");
  const Tensor& ov = value(out);
  if (ov.size() != 1) {
    throw ShapeError("backward: output must be a scalar, got " + ov.shape_str());
  }
  for (std::size_t i = 0; i <= static_cast<std::size_t>(out.id); ++i) {
    Node& n = nodes_[i];
    if (n.op != Op::Param && n.requires_grad) {
      n.grad = Tensor(n.value.shape, std::vector<double>(n.value.size(), 0.0));
    }
  }
  if (!needs(out.id)) return;
  grad_ref(out.id)[0] += 1.0;
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.op == Op::Param || n.op == Op::Constant) continue;
    if (corrupt_ && *corrupt_ == n.op) {
      for (double& g : n.grad.data) g *= 1.5;
    }
    apply_rule(n);
  }
}

inline void Tape::apply_rule(Node& n) {
  const Tensor& g = n.grad;
  auto in = [&](std::size_t k) { return n.inputs[k]; };
  switch (n.op) {
    case Op::Constant:
    case Op::Param:
      break;
    case Op::Lookup: {
      Tensor& tg = n.param->grad;
      const std::size_t c = g.size();
      for (std::size_t j = 0; j < c; ++j) tg[n.index * c + j] += g[j];
      break;
    }
    case Op::MatVec: {
      const Tensor& w = value(in(0));
      const Tensor& x = value(in(1));
      const std::size_t r = w.rows(), c = w.cols();
      if (needs(in(0))) {
        Tensor& gw = grad_ref(in(0));
        for (std::size_t i = 0; i < r; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          double* row = gw.data.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) row[j] += gi * x[j];
        }
      }
      if (needs(in(1))) {
        Tensor& gx = grad_ref(in(1));
        for (std::size_t i = 0; i < r; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double* row = w.data.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) gx[j] += row[j] * gi;
        }
      }
      break;
    }
    case Op::Add:
    case Op::Sub: {
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      if (needs(in(0))) {
        Tensor& ga = grad_ref(in(0));
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (needs(in(1))) {
        Tensor& gb = grad_ref(in(1));
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
      }
      break;
    }
    case Op::Mul:
    case Op::Mask: {
      const Tensor& a = value(in(0));
      const Tensor& b = value(in(1));
      if (needs(in(0))) {
        Tensor& ga = grad_ref(in(0));
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (n.op == Op::Mul && needs(in(1))) {
        Tensor& gb = grad_ref(in(1));
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      }
      break;
    }
    case Op::Tanh: {
      Tensor& gx = grad_ref(in(0));
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      break;
    }
    case Op::Sigmoid: {
      Tensor& gx = grad_ref(in(0));
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      break;
    }
    case Op::Relu: {
      const Tensor& x = value(in(0));
      Tensor& gx = grad_ref(in(0));
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) gx[i] += g[i];
      }
      break;
    }
    case Op::Abs: {
      const Tensor& x = value(in(0));
      Tensor& gx = grad_ref(in(0));
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) gx[i] += g[i];
        else if (x[i] < 0.0) gx[i] -= g[i];
      }
      break;
    }
    case Op::Concat: {
      std::size_t off = 0;
      for (int id : n.inputs) {
        const std::size_t len = value(id).size();
        if (needs(id)) {
          Tensor& gi = grad_ref(id);
          for (std::size_t j = 0; j < len; ++j) gi[j] += g[off + j];
        }
        off += len;
      }
      break;
    }
    case Op::Slice: {
      Tensor& gx = grad_ref(in(0));
      for (std::size_t j = 0; j < g.size(); ++j) gx[n.index + j] += g[j];
      break;
    }
    case Op::Affine: {
      Tensor& gx = grad_ref(in(0));
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += n.alpha * g[i];
      break;
    }
    case Op::SoftmaxXent: {
      const Tensor& l = value(in(0));
      Tensor& gl = grad_ref(in(0));
      double mx = l[0];
      for (double v : l.data) mx = std::max(mx, v);
      double z = 0.0;
      for (double v : l.data) z += std::exp(v - mx);
      for (std::size_t i = 0; i < l.size(); ++i) {
        const double p = std::exp(l[i] - mx) / z;
        gl[i] += g[0] * (p - (i == n.index ? 1.0 : 0.0));
      }
      break;
    }
    case Op::Sum: {
      Tensor& gx = grad_ref(in(0));
      for (double& v : gx.data) v += g[0];
      break;
    }
  }
}

}  // namespace tgc::ad
