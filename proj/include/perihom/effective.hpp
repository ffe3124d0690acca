#pragma once

#include <cstdint>
#include <vector>

#include "perihom/model.hpp"
#include "perihom/tensor.hpp"
#include "perihom/torus.hpp"

namespace perihom {

struct Certificate {
  double symmetry_max_violation = 0.0;
  double gamma1 = 0.0;          // exact min of <CW,W>/|W|^2 over symmetric W
  double gamma1_sampled = 0.0;  // min over random symmetric W
  double gamma2 = 0.0;          // operator norm on symmetric matrices
  double lh_min = 0.0;          // min <C xi(x)eta, xi(x)eta> over unit pairs
  std::vector<double> lh_argmin;  // xi then eta
  std::vector<double> voigt;      // row-major, see voigt_matrix

  bool passed(double symmetry_tol = 1e-8) const {
    return symmetry_max_violation <= symmetry_tol && gamma1 > 0.0 && lh_min > 0.0;
  }
  nlohmann::json to_json() const;
};

struct CertifyOptions {
  int lh_samples = 10000;
  int random_w = 200;
  std::uint64_t seed = 0;
};

double symmetry_violation(const Tensor4& C);
// Mandel-scaled (orthonormal basis of symmetric matrices) representation,
// size d(d+1)/2; its eigenvalues are the extrema of <CW,W>/|W|^2.
std::vector<double> mandel_matrix(const Tensor4& C);
// Engineering Voigt matrix C_IJ = c_{ijkl}, I = (ij), J = (kl), ordering
// 11,22,33,23,13,12 (d = 3) or 11,22,12 (d = 2).
std::vector<double> voigt_matrix(const Tensor4& C);

Certificate certify_elasticity(const Tensor4& C, const CertifyOptions& opt = {});

Tensor4 lame_closed_form(double a2, int d);

// Min over unit symmetric W of sum_n w_n <Wz,z>^2/|z|^2, i.e. the smallest
// eigenvalue of the quartic moment tensor; scaled by alpha1/2 it bounds gamma1.
double min_quartic_moment(const Tensor4& quartic);

// (mean_q 1/lambda(x,q))^{-1} by nodal quadrature on an n^d cell grid.
double harmonic_mean_factor(const CoefficientModel& model, const Point& x, int n);

Tensor4 effective_tensor(const CoefficientModel& model, const Tensor4& ctilde, const Point& x, int n);

struct EffectiveTensor {
  Tensor4 ctilde;
  double mean_inverse_lambda1 = 1.0;
  ScalarField lambda0;

  double factor(const Point& x) const { return lambda0(x) / mean_inverse_lambda1; }
  Tensor4 at(const Point& x) const { return ctilde.scaled(factor(x)); }
};

// mu0 Laplace(u) + 2 mu0 grad(div u) via FFT derivatives, mu0 nodal.
PeriodicField lame_operator_apply(const PeriodicField& mu0, const PeriodicField& u);

}  // namespace perihom
