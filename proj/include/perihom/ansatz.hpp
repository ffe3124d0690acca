#pragma once

#include <string>
#include <vector>

#include "perihom/cell.hpp"
#include "perihom/effective.hpp"
#include "perihom/operators.hpp"

namespace perihom {

// Smooth periodic vector field on the solve box, sampled on demand.
struct TestFunction {
  std::string name;
  std::function<void(const Point& x, double* u)> eval;  // writes d components

  PeriodicField sample(const TorusGrid& grid) const;
};

// Low-frequency trigonometric modes and a periodized Gaussian bump.
std::vector<TestFunction> test_function_library(int dim, double box_length);
TestFunction constant_test_function(int dim, double value);

// Cell field at x/eps on the box nodes. Exact node mapping when every box
// node lands on a cell node, band-limited interpolation otherwise.
struct FastFieldSample {
  PeriodicField values;
  bool interpolated = false;
  double interpolation_tail = 0.0;  // relative spectral mass in the outer half band
};
FastFieldSample sample_fast_field(const PeriodicField& cell_field, double eps, const TorusGrid& box);

struct AnsatzField {
  PeriodicField u;
  PeriodicField w;  // u + eps A(x/eps) Du + eps^2 B(x/eps) D^2u
  double eps = 0.0;
  bool interpolated = false;
  double interpolation_tail = 0.0;
};

// A rank 3 (m, k, l) and B rank 4 (m, j, k, l) on the cell grid; either may be
// an empty field, meaning zero.
AnsatzField build_ansatz(const PeriodicField& u, const PeriodicField& A, const PeriodicField& B, double eps);

struct ConsistencyResult {
  double residual = 0.0;           // ||L^eps w - c D^2 u||
  double reference = 0.0;          // ||c D^2 u||
  double relative_residual = 0.0;  // residual / reference, 0 when reference is 0
  double psi_term = 0.0;           // ||eps^-1 lambda Psi_a(Du)|| over the box
  bool interpolated = false;
};

// Cell residual psi^{kl} = (K - G)a^{kl} - h^{kl}, rank 3; Psi_a(M, q) is its
// contraction with M.
PeriodicField psi_residual(const CellProblem& cp, const CellDataH& H, const CorrectorA& A);

// psi may be empty, in which case psi_term stays 0.
ConsistencyResult consistency_residual(const ScaledOperator& op, const PeriodicField& A, const PeriodicField& B,
                                       const EffectiveTensor& ceff, const PeriodicField& u,
                                       const PeriodicField& psi = {});

}  // namespace perihom
