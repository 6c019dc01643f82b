#pragma once

#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tgc {

/// Raised when the operands of a primitive do not have compatible shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense 1-D or 2-D array of doubles, row-major.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != count(shape)) {
      throw ShapeError("Tensor: data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
  }

  static Tensor vector(std::size_t n, double fill = 0.0) {
    return Tensor({n}, std::vector<double>(n, fill));
  }
  static Tensor vector(std::initializer_list<double> xs) {
    return Tensor({xs.size()}, std::vector<double>(xs));
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, std::vector<double>(rows * cols, fill));
  }

  std::size_t size() const { return data.size(); }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  void fill(double v) { data.assign(data.size(), v); }

  bool operator==(const Tensor&) const = default;

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto k : s) n *= k;
    return n;
  }
  static std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
  }
  std::string shape_str() const { return shape_str(shape); }
};

/// A learnable tensor with its gradient accumulator and AdaGrad state.
struct Param {
  Tensor value;
  Tensor grad;
  Tensor state;  // running sum of squared gradients
  bool trainable = true;

  Param() = default;
  explicit Param(Tensor v)
      : value(std::move(v)),
        grad(value.shape, std::vector<double>(value.size(), 0.0)),
        state(value.shape, std::vector<double>(value.size(), 0.0)) {}

  void zero_grad() { grad.fill(0.0); }
};

}  // namespace tgc
