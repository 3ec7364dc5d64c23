#pragma once

#include <vector>

namespace flownet {

// One inequality: sum_i coeff[i] * x[i] <= bound.
struct LinearConstraint {
  std::vector<double> coeff;
  double bound = 0.0;
};

struct FeasibleResult {
  bool feasible = false;
  std::vector<double> point;
};

// Fourier-Motzkin elimination over a small inequality system. When feasible,
// back-substitution picks the midpoint of each variable's residual interval
// (or a finite fallback when a side is unbounded).
FeasibleResult fourier_motzkin_feasible(int num_vars, const std::vector<LinearConstraint>& rows);

}  // namespace flownet
