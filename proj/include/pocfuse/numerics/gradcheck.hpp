#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pocfuse/error.hpp"
#include "pocfuse/numerics/tensor.hpp"

namespace pocfuse::num {

// A parameter tensor together with the analytic gradient to be verified.
struct GradientGroup {
  std::string name;
  Tensor* value = nullptr;
  Tensor analytic;
};

struct GroupCheck {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = true;
};

struct GradientCheckReport {
  std::vector<GroupCheck> groups;
  double tolerance = 0.0;

  bool passed() const {
    return std::all_of(groups.begin(), groups.end(), [](const GroupCheck& g) { return g.passed; });
  }
};

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Compares analytic gradients against central differences
// (f(x+h) - f(x-h)) / 2h, one coordinate at a time. `loss` must read the
// parameters through the pointers in `groups`; every coordinate is restored
// after probing.
inline GradientCheckReport finite_difference_check(const std::function<double()>& loss,
                                                   std::vector<GradientGroup>& groups,
                                                   double h, double tolerance) {
  if (!(h > 0.0)) throw InvariantError("finite_difference_check: step size must be positive");
  const double base = loss();
  if (loss() != base)
    throw InvariantError("finite_difference_check: loss is not deterministic");

  GradientCheckReport report;
  report.tolerance = tolerance;
  for (GradientGroup& group : groups) {
    if (!group.value || !group.value->same_shape(group.analytic))
      throw InvariantError("finite_difference_check: gradient shape mismatch in " + group.name);
    GroupCheck check;
    check.name = group.name;
    Tensor& theta = *group.value;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double original = theta[k];
      theta[k] = original + h;
      const double up = loss();
      theta[k] = original - h;
      const double down = loss();
      theta[k] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(group.analytic[k], numeric);
      if (err > check.max_relative_error) {
        check.max_relative_error = err;
        check.worst_index = k;
        check.worst_analytic = group.analytic[k];
        check.worst_numeric = numeric;
      }
    }
    check.passed = check.max_relative_error <= tolerance;
    report.groups.push_back(std::move(check));
  }
  return report;
}

}  // namespace pocfuse::num
