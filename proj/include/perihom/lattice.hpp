#pragma once

#include <array>
#include <vector>

#include "perihom/model.hpp"

namespace perihom {

// Kernel discretized on the lattice spacing*Z^d, in kernel units. weights[k] is a
// dimensionless quadrature weight for the point z_k = offsets[k]*spacing, so that
// sum_k weights[k] F(z_k) approximates int rho(z) F(z) dz for smooth F.
struct LatticeKernel {
  int dim = 2;
  double spacing = 0.0;
  std::vector<std::array<int, 3>> offsets;
  std::vector<double> weights;
  double a1 = 0.0;  // continuum moments from the same quadrature pass
  double a2 = 0.0;
  std::array<double, 9> second_moment{};
  double fit_min = 1.0;  // range of the moment-fit factor
  double fit_max = 1.0;

  std::size_t size() const { return weights.size(); }
  Point z(std::size_t k) const {
    return {offsets[k][0] * spacing, offsets[k][1] * spacing, offsets[k][2] * spacing};
  }
  int max_offset() const;
};

// Hat-function weights int rho(z) B_n(z) dz (B_n the multilinear hat at node n),
// symmetrized in n -> -n, with the origin dropped, then tilted by exp(c + z^T B z)
// so that the discrete zeroth and second moments equal the continuum ones.
// Throws AccuracyError if the tilt fit does not converge.
LatticeKernel discretize_kernel(const KernelSpec& spec, double spacing, const QuadratureConfig& quad = {});

}  // namespace perihom
