#pragma once

#include <random>

#include "tgcomp/autodiff.hpp"

namespace tgc {

enum class Mode { Train, Eval };

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else 1/(1-rate).
inline Tensor dropout_mask(std::size_t n, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Tensor m = Tensor::vector(n);
  for (double& v : m.data) v = keep(rng) ? scale : 0.0;
  return m;
}

inline Tensor apply_dropout(const Tensor& x, double rate, Mode mode, std::mt19937_64& rng) {
  if (mode == Mode::Eval || rate <= 0.0) return x;
  Tensor m = dropout_mask(x.size(), rate, rng);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i];
  return out;
}

inline ad::Var apply_dropout(ad::Var x, double rate, Mode mode, std::mt19937_64& rng) {
  if (mode == Mode::Eval || rate <= 0.0) return x;
  return ad::mask(x, dropout_mask(x.size(), rate, rng));
}

struct DropoutRates {
  double embedding = 0.0;
  double output = 0.0;
  double recurrent = 0.0;  // on the i * g candidate term of the main TreeLSTM cell
};

/// Dropout policy for one forward pass. A default-constructed value is the
/// evaluation-mode identity.
struct Dropout {
  Mode mode = Mode::Eval;
  DropoutRates rates;
  std::mt19937_64* rng = nullptr;

  bool active() const { return mode == Mode::Train && rng != nullptr; }
  ad::Var embedding(ad::Var x) const { return apply(x, rates.embedding); }
  ad::Var output(ad::Var x) const { return apply(x, rates.output); }
  ad::Var recurrent(ad::Var x) const { return apply(x, rates.recurrent); }

 private:
  ad::Var apply(ad::Var x, double rate) const {
    if (!active()) return x;
    return apply_dropout(x, rate, mode, *rng);
  }
};

}  // namespace tgc
