#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "perihom/errors.hpp"
#include "perihom/localsolver.hpp"

using namespace perihom;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Fully anisotropic but symmetric and positive tensor.
Tensor4 test_tensor() {
  Tensor4 C = lame_closed_form(1.0, 2);
  C(0, 0, 0, 0) += 0.05;
  C(0, 0, 0, 1) = C(0, 0, 1, 0) = C(0, 1, 0, 0) = C(1, 0, 0, 0) = 0.02;
  return C;
}

EffectiveTensor with_lambda0(const Tensor4& C, const std::string& expr) {
  EffectiveTensor e{C, 1.0, ScalarField::constant(1.0)};
  if (!expr.empty()) e.lambda0 = ScalarField::from_json({{"kind", "expr"}, {"expr", expr}}, "x", 2, 1.0);
  return e;
}

}  // namespace

TEST(L0, MatchesLameOperatorForIsotropicTensor) {
  TorusGrid g(2, 32);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  PeriodicField u(g, 1);
  double a[4][2];
  for (auto& r : a)
    for (double& v : r) v = n(rng);
  for (std::size_t q = 0; q < g.size(); ++q) {
    Point x = g.coord(q);
    for (int i = 0; i < 2; ++i)
      u.at(q, i) = a[0][i] * std::sin(kTwoPi * x[0]) + a[1][i] * std::cos(kTwoPi * (x[0] - 2 * x[1])) +
                   a[2][i] * std::sin(2 * kTwoPi * x[1]) + a[3][i];
  }
  const double mu0 = 1.0 / 16.0;
  PeriodicField mu(g, 0);
  for (double& v : mu.data()) v = mu0;
  PeriodicField lame = lame_operator_apply(mu, u);
  PeriodicField gen = apply_L0(with_lambda0(lame_closed_form(1.0, 2), ""), u);
  EXPECT_LT(max_abs(lame - gen), 1e-10 * max_abs(lame));
}

TEST(LocalSolve, ConstantCoefficientPerModeOracle) {
  TorusGrid g(2, 32, 2.0);
  Tensor4 C = test_tensor();
  const double m = 5.0;
  const int k[2] = {3, -2};
  const double f0[2] = {1.0, -0.5};
  PeriodicField f(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    Point x = g.coord(q);
    double c = std::cos(kTwoPi * (k[0] * x[0] + k[1] * x[1]) / g.length);
    for (int i = 0; i < 2; ++i) f.at(q, i) = f0[i] * c;
  }
  // (m I + A(kappa)) u0 = f0 with A_il = c_ijkl kappa_j kappa_k.
  double kap[2] = {kTwoPi * k[0] / g.length, kTwoPi * k[1] / g.length};
  double A[2][2] = {{m, 0}, {0, m}};
  for (int i = 0; i < 2; ++i)
    for (int l = 0; l < 2; ++l)
      for (int j = 0; j < 2; ++j)
        for (int kk = 0; kk < 2; ++kk) A[i][l] += C(i, j, kk, l) * kap[j] * kap[kk];
  double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  double u0[2] = {(A[1][1] * f0[0] - A[0][1] * f0[1]) / det, (A[0][0] * f0[1] - A[1][0] * f0[0]) / det};
  PeriodicField exact(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q)
    for (int i = 0; i < 2; ++i) exact.at(q, i) = u0[i] / f0[i] * f.at(q, i);

  PeriodicField direct = constant_coefficient_solve(m, C, f);
  EXPECT_LT(max_abs(direct - exact), 1e-10 * max_abs(exact));
  LocalSolveReport r = solve_local(m, with_lambda0(C, ""), f, 1e-12);
  EXPECT_LT(max_abs(r.u0 - exact), 1e-10 * max_abs(exact));
  EXPECT_LE(r.iterations, 2);
}

TEST(LocalSolve, VariableFactorResidual) {
  TorusGrid g(2, 64);
  EffectiveTensor e = with_lambda0(test_tensor(), "1+0.5*sin(2*pi*x1/L)");
  PeriodicField f(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    Point x = g.coord(q);
    f.at(q, 0) = std::exp(std::cos(kTwoPi * x[0]) + std::sin(kTwoPi * x[1]));
    f.at(q, 1) = std::sin(kTwoPi * (x[0] + x[1]));
  }
  const double m = 5.0;
  LocalSolveReport r = solve_local(m, e, f, 1e-11);
  PeriodicField res = m * r.u0 - apply_L0(e, r.u0) - f;
  EXPECT_LT(norm(res) / norm(f), 1e-10);
  EXPECT_LT(r.contraction, 1.0);
  EXPECT_TRUE(r.monotone);
  EXPECT_GT(r.iterations, 2);
}

TEST(LocalSolve, ConstantsAndZero) {
  TorusGrid g(2, 16);
  EffectiveTensor e = with_lambda0(test_tensor(), "1+0.5*sin(2*pi*x1/L)");
  PeriodicField c(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    c.at(q, 0) = 2.0;
    c.at(q, 1) = -1.0;
  }
  LocalSolveReport r = solve_local(4.0, e, c);
  EXPECT_LT(max_abs(r.u0 - 0.25 * c), 1e-10);
  LocalSolveReport z = solve_local(4.0, e, PeriodicField(g, 1));
  EXPECT_EQ(max_abs(z.u0), 0.0);
  EXPECT_THROW(solve_local(0.0, e, c), ArgumentError);
  EXPECT_LT(max_abs(apply_L0(e, c)), 1e-12);
}
