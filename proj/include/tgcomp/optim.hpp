#pragma once

#include <cmath>

#include "tgcomp/model.hpp"
#include "tgcomp/tensor.hpp"

namespace tgc {

inline constexpr double kAdagradEps = 1e-8;

/// One AdaGrad update of a single tensor, then its gradient is zeroed:
///   g += l2 * w;  G += g^2;  w -= lr * g / (sqrt(G) + eps)
inline void adagrad_update(Param& p, double lr, double l2) {
  for (std::size_t k = 0; k < p.value.size(); ++k) {
    double g = p.grad[k];
    if (l2 > 0.0) g += l2 * p.value[k];
    if (g == 0.0) continue;
    p.state[k] += g * g;
    p.value[k] -= lr * g / (std::sqrt(p.state[k]) + kAdagradEps);
  }
  p.zero_grad();
}

/// Applies AdaGrad to every parameter. Word embeddings move only when
/// `fine_tune_embeddings` is set; their gradients are discarded otherwise.
inline void adagrad_step(ModelParams& m, double lr, double l2, bool fine_tune_embeddings) {
  m.for_each([&](PId id, Param& p) {
    if ((id == PId::WordEmb && !fine_tune_embeddings) || !p.trainable) {
      p.zero_grad();
      return;
    }
    adagrad_update(p, lr, l2);
  });
}

}  // namespace tgc
