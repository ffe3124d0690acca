#pragma once

#include <functional>
#include <vector>

#include "perihom/torus.hpp"

namespace perihom {

struct CgResult {
  int iterations = 0;
  double residual = 0.0;  // last value of the residual measure
  std::vector<double> history;
};

using FieldMap = std::function<PeriodicField(const PeriodicField&)>;

// Preconditioned CG for a symmetric positive (semi)definite A. `measure(r)` maps
// the recursive residual b - A x to the quantity compared against `tol`. With
// `mean_zero`, all iterates are re-projected onto mean-zero fields every step.
// Throws ConvergenceError (with the residual history) at the iteration cap.
CgResult conjugate_gradient(const FieldMap& A, const FieldMap& P, const PeriodicField& b,
                            PeriodicField& x, const std::function<double(const PeriodicField&)>& measure,
                            double tol, int max_iter, bool mean_zero);

}  // namespace perihom
