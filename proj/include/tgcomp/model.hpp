#pragma once

// Model variants, their dimensions and the learnable parameter set.

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgcomp/corpus.hpp"
#include "tgcomp/embeddings.hpp"
#include "tgcomp/tensor.hpp"

namespace tgc {

enum class Variant { RecNN, TreeLSTM, TGHRecNN, TGHTreeLSTM, DCHRecNN, DCHTreeLSTM };

inline constexpr std::array<Variant, 6> kAllVariants = {
    Variant::RecNN,       Variant::TreeLSTM,  Variant::TGHRecNN,
    Variant::TGHTreeLSTM, Variant::DCHRecNN,  Variant::DCHTreeLSTM};

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::RecNN: return "RecNN";
    case Variant::TreeLSTM: return "TreeLSTM";
    case Variant::TGHRecNN: return "TG-HRecNN";
    case Variant::TGHTreeLSTM: return "TG-HTreeLSTM";
    case Variant::DCHRecNN: return "DC-HRecNN";
    case Variant::DCHTreeLSTM: return "DC-HTreeLSTM";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  for (Variant v : kAllVariants) {
    if (s == variant_name(v)) return v;
  }
  throw std::invalid_argument(
      "variant: expected one of RecNN, TreeLSTM, TG-HRecNN, TG-HTreeLSTM, DC-HRecNN, "
      "DC-HTreeLSTM; got '" + s + "'");
}

inline bool is_lstm(Variant v) {
  return v == Variant::TreeLSTM || v == Variant::TGHTreeLSTM || v == Variant::DCHTreeLSTM;
}
inline bool is_hyper(Variant v) { return v != Variant::RecNN && v != Variant::TreeLSTM; }
/// DC ablations run the hyper network with all tag embeddings zeroed.
inline bool is_tag_blind(Variant v) {
  return v == Variant::DCHRecNN || v == Variant::DCHTreeLSTM;
}

enum class Fusion { Concat, Multi };

inline const char* fusion_name(Fusion f) { return f == Fusion::Concat ? "concat" : "multi"; }
inline Fusion fusion_from_string(const std::string& s) {
  if (s == "concat") return Fusion::Concat;
  if (s == "multi") return Fusion::Multi;
  throw std::invalid_argument("fusion: expected 'concat' or 'multi', got '" + s + "'");
}

/// Layer sizes. `hyper_h` and `hyper_d` are the hyper network's hidden and
/// input (fused) sizes; `tag` is the tag-embedding size.
struct Dims {
  int word = 300;
  int hidden = 150;
  int hyper_h = 50;
  int hyper_d = 100;
  int tag = 50;

  bool operator==(const Dims&) const = default;
};

/// Length of each scaling vector: the row count of the matrix it scales.
inline int z_size(const Dims& d, Variant v) { return is_lstm(v) ? 5 * d.hidden : d.hidden; }

struct ModelSpec {
  Variant variant = Variant::TGHTreeLSTM;
  Fusion fusion = Fusion::Concat;
  Dims dims;
  Task task = Task::Classify;
  int num_classes = 2;
  std::size_t num_words = 1;
  std::size_t num_tags = 1;
  int mlp_hidden = 0;  // matching head; 0 means `dims.hidden`

  int mlp_size() const { return mlp_hidden > 0 ? mlp_hidden : dims.hidden; }
  bool operator==(const ModelSpec&) const = default;
};

enum class PId : int {
  TagEmb,
  WordEmb,
  MainW,
  MainU,
  MainB,
  LeafW,
  LeafB,
  HyperW,
  HyperU,
  HyperB,
  ZWw,
  ZBw,
  ZWu,
  ZBu,
  ZWb,
  ZBb,
  HeadW,
  HeadB,
  FuseW,
  FuseWt,
  FuseWs,
  FuseB,
  MlpW,
  MlpB,
  OutW,
  OutB,
  Count
};

inline constexpr std::size_t kNumParamIds = static_cast<std::size_t>(PId::Count);

/// Canonical parameter names; checkpoints key tensors by these.
inline const char* param_name(PId id) {
  static constexpr std::array<const char*, kNumParamIds> names = {
      "tag_emb", "word_emb", "main.W",  "main.U",  "main.b",  "leaf.W",  "leaf.b",
      "hyper.W", "hyper.U",  "hyper.b", "z.W_w",   "z.b_w",   "z.W_u",   "z.b_u",
      "z.W_b",   "z.b_b",    "head.W",  "head.b",  "fuse.W",  "fuse.W_t", "fuse.W_s",
      "fuse.b",  "mlp.W",    "mlp.b",   "out.W",   "out.b"};
  return names[static_cast<std::size_t>(id)];
}

inline std::optional<PId> param_id(const std::string& name) {
  for (std::size_t i = 0; i < kNumParamIds; ++i) {
    if (name == param_name(static_cast<PId>(i))) return static_cast<PId>(i);
  }
  return std::nullopt;
}

enum class InitKind { Uniform, Zero, One };

struct ParamShape {
  PId id;
  std::vector<std::size_t> shape;
  InitKind init;
};

/// Every parameter the variant uses, with its shape and initializer.
inline std::vector<ParamShape> param_layout(const ModelSpec& s) {
  const auto d = static_cast<std::size_t>(s.dims.word);
  const auto h = static_cast<std::size_t>(s.dims.hidden);
  const auto hh = static_cast<std::size_t>(s.dims.hyper_h);
  const auto dh = static_cast<std::size_t>(s.dims.hyper_d);
  const auto t = static_cast<std::size_t>(s.dims.tag);
  const auto z = static_cast<std::size_t>(z_size(s.dims, s.variant));
  const auto c = static_cast<std::size_t>(s.num_classes);
  const bool lstm = is_lstm(s.variant);
  const std::size_t gates = lstm ? 5 : 1;
  using K = InitKind;

  std::vector<ParamShape> out;
  if (is_hyper(s.variant) && !is_tag_blind(s.variant)) {
    out.push_back({PId::TagEmb, {s.num_tags, t}, K::Uniform});
  }
  out.push_back({PId::WordEmb, {s.num_words, d}, K::Uniform});
  if (lstm) out.push_back({PId::MainW, {gates * h, d}, K::Uniform});
  out.push_back({PId::MainU, {gates * h, 2 * h}, K::Uniform});
  if (!is_hyper(s.variant)) out.push_back({PId::MainB, {gates * h}, K::Zero});
  if (!lstm) {
    out.push_back({PId::LeafW, {h, d}, K::Uniform});
    out.push_back({PId::LeafB, {h}, K::Zero});
  }
  if (is_hyper(s.variant)) {
    out.push_back({PId::HyperW, {gates * hh, dh}, K::Uniform});
    out.push_back({PId::HyperU, {gates * hh, 2 * hh}, K::Uniform});
    out.push_back({PId::HyperB, {gates * hh}, K::Zero});
    if (lstm) {
      out.push_back({PId::ZWw, {z, hh}, K::Zero});
      out.push_back({PId::ZBw, {z}, K::One});
    }
    out.push_back({PId::ZWu, {z, hh}, K::Zero});
    out.push_back({PId::ZBu, {z}, K::One});
    out.push_back({PId::ZWb, {z, hh}, K::Zero});
    out.push_back({PId::ZBb, {z}, K::Zero});
    out.push_back({PId::HeadW, {d, 3 * t + 2 * d}, K::Uniform});
    out.push_back({PId::HeadB, {d}, K::Zero});
    if (s.fusion == Fusion::Concat) {
      out.push_back({PId::FuseW, {dh, 3 * t + 2 * h + d}, K::Uniform});
    } else {
      out.push_back({PId::FuseWt, {dh, 3 * t}, K::Uniform});
      out.push_back({PId::FuseWs, {dh, 2 * h + d}, K::Uniform});
    }
    out.push_back({PId::FuseB, {dh}, K::Zero});
  }
  if (s.task == Task::Match) {
    const auto m = static_cast<std::size_t>(s.mlp_size());
    out.push_back({PId::MlpW, {m, 2 * h}, K::Uniform});
    out.push_back({PId::MlpB, {m}, K::Zero});
    out.push_back({PId::OutW, {c, m}, K::Uniform});
  } else {
    out.push_back({PId::OutW, {c, h}, K::Uniform});
  }
  out.push_back({PId::OutB, {c}, K::Zero});
  return out;
}

inline void validate_spec(const ModelSpec& s) {
  const Dims& d = s.dims;
  if (d.word <= 0 || d.hidden <= 0 || d.hyper_h <= 0 || d.hyper_d <= 0 || d.tag <= 0) {
    throw std::invalid_argument("dims: all sizes must be positive");
  }
  if (s.num_classes < 2) throw std::invalid_argument("num_classes must be at least 2");
  if (s.num_words < 1 || s.num_tags < 1) throw std::invalid_argument("vocabulary sizes must be positive");
}

/// The complete learnable state of one model.
class ModelParams {
 public:
  ModelParams() = default;

  /// Uniform(-0.05, 0.05) weights, zero biases; z-projection weights zero and
  /// the z_w/z_u biases one, so training starts at the static model.
  ModelParams(const ModelSpec& spec, std::mt19937_64& rng) : spec_(spec) {
    validate_spec(spec);
    std::uniform_real_distribution<double> u(-kInitRange, kInitRange);
    for (const auto& ps : param_layout(spec)) {
      Tensor t(ps.shape, std::vector<double>(Tensor::count(ps.shape), 0.0));
      if (ps.init == InitKind::Uniform) {
        for (double& v : t.data) v = u(rng);
      } else if (ps.init == InitKind::One) {
        t.fill(1.0);
      }
      slot(ps.id).emplace(std::move(t));
    }
  }

  const ModelSpec& spec() const { return spec_; }

  bool has(PId id) const { return slots_[static_cast<std::size_t>(id)].has_value(); }
  Param& operator[](PId id) {
    auto& s = slot(id);
    if (!s) throw std::out_of_range(std::string("model has no parameter ") + param_name(id));
    return *s;
  }
  const Param& operator[](PId id) const {
    const auto& s = slots_[static_cast<std::size_t>(id)];
    if (!s) throw std::out_of_range(std::string("model has no parameter ") + param_name(id));
    return *s;
  }

  template <typename F>
  void for_each(F&& f) {
    for (std::size_t i = 0; i < kNumParamIds; ++i) {
      if (slots_[i]) f(static_cast<PId>(i), *slots_[i]);
    }
  }
  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < kNumParamIds; ++i) {
      if (slots_[i]) f(static_cast<PId>(i), *slots_[i]);
    }
  }

  /// Installs a tensor under `id`; its shape must match the layout.
  void set(PId id, Tensor value) {
    for (const auto& ps : param_layout(spec_)) {
      if (ps.id != id) continue;
      if (ps.shape != value.shape) {
        throw ShapeError(std::string("parameter ") + param_name(id) + ": expected shape " +
                         Tensor::shape_str(ps.shape) + ", got " + value.shape_str());
      }
      const bool trainable = !slot(id) || slot(id)->trainable;
      slot(id).emplace(std::move(value));
      slot(id)->trainable = trainable;
      return;
    }
    throw std::invalid_argument(std::string("parameter ") + param_name(id) + " not used by " +
                                variant_name(spec_.variant));
  }

  void zero_grad() {
    for_each([](PId, Param& p) { p.zero_grad(); });
  }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for_each([&](PId, const Param& p) { n += p.value.size(); });
    return n;
  }

  static ModelParams empty(const ModelSpec& spec) {
    ModelParams m;
    m.spec_ = spec;
    return m;
  }

 private:
  std::optional<Param>& slot(PId id) { return slots_[static_cast<std::size_t>(id)]; }

  ModelSpec spec_;
  std::array<std::optional<Param>, kNumParamIds> slots_;
};

}  // namespace tgc
