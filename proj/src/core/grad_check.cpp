#include "avasd/core/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "avasd/core/error.hpp"

namespace avasd {

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

namespace {

double central_difference(const std::function<double()>& loss, double& value, double eps) {
  const double saved = value;
  const double hi = saved + eps;
  const double lo = saved - eps;
  value = hi;
  const double up = loss();
  value = lo;
  const double down = loss();
  value = saved;
  // Divide by the step actually taken, not the nominal 2*eps.
  return (up - down) / (hi - lo);
}

}  // namespace

GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckTarget> targets, std::span<const double> steps,
                           double accept) {
  if (steps.empty()) throw ArgumentError("grad_check needs at least one step size");
  for (double eps : steps)
    if (!(eps > 0.0)) throw ArgumentError("grad_check step sizes must be positive");
  GradCheckResult result;
  for (const GradCheckTarget& target : targets) {
    if (target.values.size() != target.analytic.size()) {
      throw ShapeError("grad_check target '" + target.name + "' has " +
                       std::to_string(target.values.size()) + " values but " +
                       std::to_string(target.analytic.size()) + " analytic gradients");
    }
    for (std::size_t i = 0; i < target.values.size(); ++i) {
      double numeric = central_difference(loss, target.values[i], steps[0]);
      double err = relative_error(target.analytic[i], numeric);
      if (err >= accept && steps.size() > 1) {
        ++result.retried;
        for (std::size_t s = 1; s < steps.size() && err >= accept; ++s) {
          const double n = central_difference(loss, target.values[i], steps[s]);
          const double e = relative_error(target.analytic[i], n);
          if (e < err) err = e, numeric = n;
        }
      }
      ++result.coordinates;
      if (err > result.max_relative_error || result.coordinates == 1) {
        result.max_relative_error = err;
        result.worst_target = target.name;
        result.worst_index = i;
        result.worst_analytic = target.analytic[i];
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckTarget> targets, double eps) {
  const double steps[] = {eps};
  return grad_check(loss, targets, steps, 0.0);
}

}  // namespace avasd
