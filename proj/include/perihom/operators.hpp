#pragma once

#include <vector>

#include "perihom/krylov.hpp"
#include "perihom/lattice.hpp"
#include "perihom/model.hpp"
#include "perihom/torus.hpp"

namespace perihom {

struct GMultiplier {
  TorusGrid grid;
  PeriodicField values;  // rank 2, symmetric per node
  double gamma = 0.0;     // smallest nodal eigenvalue
  double max_norm = 0.0;  // largest nodal spectral norm
};

// Direct lattice sum G(q) = sum_n w_n E(z_n) mu_s(q, q - n) with E(z) = z(x)z/|z|^2.
GMultiplier assemble_G(const LatticeKernel& kernel, const PeriodicField& mu);
GMultiplier assemble_G(const KernelSpec& spec, const CoefficientModel& model, const TorusGrid& grid,
                       const QuadratureConfig& quad = {});

// K and G on a torus grid whose nodes coincide with the kernel lattice. mu holds
// the fast-variable coefficient at the grid nodes.
class NonlocalOperator {
 public:
  NonlocalOperator(const LatticeKernel& kernel, const PeriodicField& mu, int shells = -1);

  const TorusGrid& grid() const { return mu_.grid(); }
  const PeriodicField& mu() const { return mu_; }
  const LatticeKernel& lattice() const { return lattice_; }
  const PeriodizedMatrixKernel& kernel() const { return kernel_; }
  const SpectralKernel& spectral() const { return spectral_; }
  // G assembled through the convolution identity G = 1/2 (W * mu) + 1/2 mu sum W.
  const GMultiplier& G() const { return G_; }

  PeriodicField apply_K(const PeriodicField& psi) const;
  PeriodicField apply_G(const PeriodicField& psi) const;
  PeriodicField apply_KminusG(const PeriodicField& psi) const;
  // Node-wise inverses of shift(q) I + scale G(q).
  PeriodicField block_inverses(const std::vector<double>& shift, double scale) const;

 private:
  LatticeKernel lattice_;
  PeriodicField mu_;
  PeriodizedMatrixKernel kernel_;
  SpectralKernel spectral_;
  GMultiplier G_;
};

// out(q) = B(q) v(q) for a rank-2 field B and rank-1 field v.
PeriodicField apply_blocks(const PeriodicField& B, const PeriodicField& v);

PeriodicField apply_K(const NonlocalOperator& op, const PeriodicField& psi);
PeriodicField apply_KminusG(const NonlocalOperator& op, const PeriodicField& psi);

// L^eps u = eps^-2 lambda(x, x/eps) (K_eps - G_eps) u on a solve box of length L.
class ScaledOperator {
 public:
  ScaledOperator(const KernelSpec& spec, const CoefficientModel& model, double eps, const TorusGrid& box,
                 const QuadratureConfig& quad = {}, const LatticeKernel* cached = nullptr);

  double eps() const { return eps_; }
  const TorusGrid& grid() const { return op_.grid(); }
  const NonlocalOperator& nonlocal() const { return op_; }
  const PeriodicField& lambda() const { return lambda_; }
  PeriodicField apply(const PeriodicField& u) const;

 private:
  static LatticeKernel lattice_for(const KernelSpec& spec, double eps, const TorusGrid& box,
                                   const QuadratureConfig& quad, const LatticeKernel* cached);
  double eps_;
  NonlocalOperator op_;
  PeriodicField lambda_;
};

// Checks L/eps integral and at least 8 nodes per eps-cell; throws ArgumentError.
void check_scaled_grid(double eps, const TorusGrid& box);

PeriodicField apply_Leps(const ScaledOperator& op, const PeriodicField& u);

struct ResolventReport {
  PeriodicField u;
  int iterations = 0;
  double residual = 0.0;  // ||(m - L)u - f|| / ||f||
  double m = 0.0;
  double eps = 0.0;
  double norm_ratio = 0.0;  // ||u|| / ||f||
  std::vector<double> history;

  nlohmann::json to_json() const;
};

// CG on (m nu - eps^-2 (K - G)) u = nu f with nu = 1/lambda, block-Jacobi
// preconditioned by (m nu + eps^-2 G)^{-1}; stops on the true relative residual.
ResolventReport resolvent_solve(const ScaledOperator& op, double m, const PeriodicField& f,
                                double tol = 1e-9, int max_iter = 2000);

}  // namespace perihom
