#pragma once

#include <vector>

#include "perihom/operators.hpp"
#include "perihom/tensor.hpp"

namespace perihom {

// Shared setup for one (kernel, mu, lambda1) on the unit-cell grid: the kernel
// lattice coincides with the grid nodes.
struct CellProblem {
  CellProblem(const KernelSpec& spec, const CoefficientModel& model, int n, const QuadratureConfig& quad = {});
  CellProblem(const LatticeKernel& lattice, const CoefficientModel& model, int n);

  CoefficientModel model;
  TorusGrid grid;
  LatticeKernel lattice;
  PeriodicField mu;
  PeriodicField lambda1;
  NonlocalOperator op;
  SpectralKernel odd3;   // w z_i z_j z_k / |z|^2
  SpectralKernel even4;  // w z_i z_j z_k z_l / |z|^2

  int dim() const { return grid.dim; }
};

struct CellDataH {
  PeriodicField h;  // rank 3, component (i, k, l) = i-th entry of h^{kl}
  double max_mean = 0.0;
  double max_norm = 0.0;  // largest nodal |h^{kl}(q)|
};

struct CorrectorA {
  PeriodicField a;  // rank 3, (i, k, l)
  std::vector<int> iterations;
  std::vector<double> residuals;
  double tol = 0.0;
};

struct CorrectorB {
  PeriodicField b;  // rank 4, (m, j, k, l)
  PeriodicField g;  // rank 4, (i, j, k, l) = i-th entry of g^{jkl}
  double g_max_mean = 0.0;
  std::vector<int> iterations;
  std::vector<double> residuals;
  double tol = 0.0;
};

struct CellSolveOptions {
  double tol = 1e-9;
  int max_iter = 5000;
  double fredholm_tol = 1e-9;
};

CellDataH assemble_h(const CellProblem& cp);

// Solves (G - K) a^{kl} = -h^{kl} on mean-zero fields for k <= l.
CorrectorA solve_cell_A(const CellProblem& cp, const CellDataH& H, const CellSolveOptions& opt = {});

struct DiagnosticReport {
  double max_residual = 0.0;  // normalized by |M|
  std::size_t worst_node = 0;
};

// Literal lattice-sum evaluation of Psi_a(M, q) at the given nodes.
DiagnosticReport check_psi_zero(const CellProblem& cp, const CorrectorA& A, const std::vector<double>& M,
                                const std::vector<std::size_t>& nodes);

// Both tensors as literal double sums over torus nodes and kernel offsets.
Tensor4 compute_Ctilde_solvability(const CellProblem& cp, const CorrectorA& A);
Tensor4 compute_Ctilde_quadratic(const CellProblem& cp, const CorrectorA& A);

struct CTildeReport {
  Tensor4 solvability;
  Tensor4 quadratic;
  double discrepancy = 0.0;
  nlohmann::json to_json() const;
};

CTildeReport compute_Ctilde(const CellProblem& cp, const CorrectorA& A);

// g^{jkl} = C^{.jkl} theta - 1/2 T^{jkl} + U^{jkl}[a], theta = (1/lambda1)/mean(1/lambda1).
PeriodicField assemble_g(const CellProblem& cp, const CorrectorA& A, const Tensor4& ctilde);

// Throws SolvabilityError when some |mean(g^{jkl})| exceeds opt.fredholm_tol.
CorrectorB assemble_g_and_solve_B(const CellProblem& cp, const CorrectorA& A, const Tensor4& ctilde,
                                  const CellSolveOptions& opt = {});

// Max over nodes and i of |lambda(x,q) Phi_b(M,q) - (c(x) M)_i| / |M|, M a third-order tensor.
DiagnosticReport check_phi_constant(const CellProblem& cp, const CorrectorA& A, const CorrectorB& B,
                                    const Tensor4& ctilde, const std::vector<double>& M,
                                    const std::vector<std::size_t>& nodes, const Point& x = {0.0, 0.0, 0.0});

// Mean over the cell of 1/lambda1 (nodal quadrature).
double mean_inverse_lambda1(const CellProblem& cp);

}  // namespace perihom
