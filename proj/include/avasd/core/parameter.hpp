#pragma once

#include <span>
#include <string>

#include "avasd/core/tensor.hpp"

namespace avasd {

/// A trainable tensor with its gradient accumulator and momentum buffer.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> velocity;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Tensor<T>::zeros_like(value)),
        velocity(Tensor<T>::zeros_like(value)) {}

  void zero_grad() { grad.fill(T{0}); }

  void accumulate(const Tensor<T>& g) {
    if (g.size() != grad.size()) {
      throw ShapeError("gradient for '" + name + "' has shape " + shape_to_string(g.shape()) +
                       ", parameter is " + shape_to_string(value.shape()));
    }
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
  }
};

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double l2_alpha = 1e-4;
};

/// Momentum SGD with the L2 penalty alpha*||w||^2 folded into the gradient:
///   v <- momentum * v + (grad + 2 * alpha * w);  w <- w - lr * v
/// Gradients are zeroed afterwards. All gradients are checked for finiteness
/// before any parameter is touched.
template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, const SgdConfig& config);

}  // namespace avasd
