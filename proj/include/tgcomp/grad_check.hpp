#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgcomp/autodiff.hpp"

namespace tgc::ad {

class NondeterministicClosure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedParam {
  std::string name;
  Param* param;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool flagged = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  bool passed() const {
    for (const auto& e : entries) {
      if (e.flagged) return false;
    }
    return true;
  }
  const GradCheckEntry* worst() const {
    const GradCheckEntry* w = nullptr;
    for (const auto& e : entries) {
      if (!w || e.max_rel_error > w->max_rel_error) w = &e;
    }
    return w;
  }
};

struct GradCheckOptions {
  double step = 1e-4;
  double tol = 1e-4;
  bool five_point = false;     // 4th-order stencil instead of the 2-point one
  std::optional<Op> corrupt;  // negative-control fixture
};

/// |a - n| / (|a| + |n| + 1e-8)
inline double relative_error(double analytic, double numeric) {
  return std::fabs(analytic - numeric) / (std::fabs(analytic) + std::fabs(numeric) + 1e-8);
}

/// Compares reverse-mode gradients of the scalar built by `f` against central
/// finite differences, element by element, for every listed parameter.
inline GradCheckReport grad_check(const std::function<Var(Tape&)>& f,
                                  const std::vector<NamedParam>& params,
                                  const GradCheckOptions& opt = {}) {
  for (const auto& np : params) np.param->zero_grad();

  double base = 0.0;
  {
    Tape tape;
    tape.corrupt_backward(opt.corrupt);
    Var out = f(tape);
    base = out.value()[0];
    tape.backward(out);
  }
  {
    Tape tape;
    const double again = f(tape).value()[0];
    if (again != base) {
      throw NondeterministicClosure("grad_check: two forward passes disagree (" +
                                    std::to_string(base) + " vs " + std::to_string(again) + ")");
    }
  }

  auto eval = [&]() {
    Tape tape;
    return f(tape).value()[0];
  };

  GradCheckReport report;
  for (const auto& np : params) {
    Param& p = *np.param;
    const Tensor analytic = p.grad;
    GradCheckEntry e;
    e.name = np.name;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double orig = p.value[k];
      auto at = [&](double offset) {
        p.value[k] = orig + offset;
        return eval();
      };
      const double h = opt.step;
      double numeric = 0.0;
      if (opt.five_point) {
        numeric = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
      } else {
        numeric = (at(h) - at(-h)) / (2.0 * h);
      }
      p.value[k] = orig;
      const double err = relative_error(analytic[k], numeric);
      if (err > e.max_rel_error || k == 0) {
        e.max_rel_error = err;
        e.worst_index = k;
        e.analytic = analytic[k];
        e.numeric = numeric;
      }
    }
    e.flagged = e.max_rel_error >= opt.tol;
    report.entries.push_back(std::move(e));
  }
  for (const auto& np : params) np.param->zero_grad();
  return report;
}

}  // namespace tgc::ad
