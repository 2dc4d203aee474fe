#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace avasd {

/// One block of coordinates to probe: `values` is perturbed in place and
/// restored; `analytic` holds the gradient the backward pass produced.
struct GradCheckTarget {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_target;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  std::size_t retried = 0;  // coordinates that needed a second step size
};

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Central differences (f(w+eps) - f(w-eps)) / 2eps for every coordinate of
/// every target, compared against the analytic gradients. `loss` must be
/// deterministic.
GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckTarget> targets, double eps = 1e-6);

/// Same, but a coordinate whose error at steps[0] is at least `accept` is
/// re-probed with the remaining steps and keeps its smallest error. A kink
/// of ReLU or max pooling inside [w - eps, w + eps] spoils one step size,
/// and so does round-off on gradients far below the loss scale; a wrong
/// backward disagrees at every step.
GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckTarget> targets, std::span<const double> steps,
                           double accept);

}  // namespace avasd
