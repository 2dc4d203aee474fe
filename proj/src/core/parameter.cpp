#include "avasd/core/parameter.hpp"

#include <cmath>

namespace avasd {

template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, const SgdConfig& config) {
  for (const Parameter<T>* p : params) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      if (!std::isfinite(static_cast<double>(p->grad[i]))) {
        throw NumericError("non-finite gradient in parameter '" + p->name + "' at index " +
                           std::to_string(i));
      }
    }
  }
  const T lr = static_cast<T>(config.learning_rate);
  const T mu = static_cast<T>(config.momentum);
  const T decay = static_cast<T>(2.0 * config.l2_alpha);
  for (Parameter<T>* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      p->velocity[i] = mu * p->velocity[i] + (p->grad[i] + decay * p->value[i]);
      p->value[i] -= lr * p->velocity[i];
    }
    p->zero_grad();
  }
}

template void sgd_step(std::span<Parameter<float>* const>, const SgdConfig&);
template void sgd_step(std::span<Parameter<double>* const>, const SgdConfig&);

}  // namespace avasd
