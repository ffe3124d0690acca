#pragma once

#include <vector>

#include "perihom/effective.hpp"
#include "perihom/torus.hpp"

namespace perihom {

// Nodal values of the scalar factor phi(x) with c(x) = phi(x) C.
PeriodicField coefficient_factor(const EffectiveTensor& ceff, const TorusGrid& grid);

// [C D^2 u]_i = sum c_ijkl d_j d_l u_k, contracted node-wise with phi.
PeriodicField apply_L0(const Tensor4& C, const PeriodicField& phi, const PeriodicField& u);
PeriodicField apply_L0(const EffectiveTensor& ceff, const PeriodicField& u);

// Exact per-mode inverse of (shift - C D^2) for a constant tensor C.
PeriodicField constant_coefficient_solve(double shift, const Tensor4& C, const PeriodicField& f);

struct LocalSolveReport {
  PeriodicField u0;
  int iterations = 0;
  double residual = 0.0;  // ||(m - L0)u0 - f|| / ||f||
  double m = 0.0;
  // Worst-case CG contraction per step implied by max(phi)/min(phi).
  double contraction = 0.0;
  bool monotone = true;  // residual history non-increasing
  std::vector<double> history;

  nlohmann::json to_json() const;
};

// Since c(x) = phi(x) C, dividing by phi gives the symmetric positive form
// (m/phi - C D^2)u = f/phi, solved by CG preconditioned with the constant
// coefficient operator at the mean of 1/phi.
LocalSolveReport solve_local(double m, const EffectiveTensor& ceff, const PeriodicField& f, double tol = 1e-10,
                             int max_iter = 500);

}  // namespace perihom
