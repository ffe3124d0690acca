#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "perihom/effective.hpp"
#include "perihom/errors.hpp"

using namespace perihom;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// mu0 (delta_ij delta_kl + delta_ik delta_jl + delta_il delta_jk), written out by hand.
Tensor4 isotropic(int d, double mu0) {
  Tensor4 C(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          C(i, j, k, l) = mu0 * ((i == j && k == l) + (i == k && j == l) + (i == l && j == k));
  return C;
}

double contract(const Tensor4& C, const double* W) {
  const int d = C.d;
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) s += C(i, j, k, l) * W[i * d + j] * W[k * d + l];
  return s;
}

}  // namespace

TEST(Lame, ClosedFormValues) {
  Tensor4 L2 = lame_closed_form(1.0, 2);
  EXPECT_NEAR(L2(0, 0, 0, 0), 3.0 / 16.0, 1e-15);
  EXPECT_NEAR(L2(0, 0, 1, 1), 1.0 / 16.0, 1e-15);
  EXPECT_NEAR(L2(0, 1, 0, 1), 1.0 / 16.0, 1e-15);
  Tensor4 L3 = lame_closed_form(2.0, 3);
  EXPECT_NEAR(L3(0, 1, 0, 1), 1.0 / 15.0, 1e-15);
  EXPECT_LT(max_abs_diff(L3, isotropic(3, 1.0 / 15.0)), 1e-15);
  EXPECT_THROW(lame_closed_form(1.0, 4), ArgumentError);
  EXPECT_THROW(lame_closed_form(-1.0, 2), ArgumentError);
}

TEST(Certificate, LameTensor) {
  Tensor4 C = lame_closed_form(1.0, 2);
  Certificate c = certify_elasticity(C);
  EXPECT_TRUE(c.passed());
  EXPECT_LT(c.symmetry_max_violation, 1e-15);
  EXPECT_NEAR(c.lh_min, 1.0 / 16.0, 1e-8);
  ASSERT_EQ(c.lh_argmin.size(), 4u);
  double dot = c.lh_argmin[0] * c.lh_argmin[2] + c.lh_argmin[1] * c.lh_argmin[3];
  EXPECT_LT(std::fabs(dot), 1e-3);
  // <CW,W> = mu0 (tr W^2 + 2|W|^2): minimum 2 mu0 on trace-free W.
  EXPECT_NEAR(c.gamma1, 2.0 / 16.0, 1e-12);
  EXPECT_NEAR(c.gamma2, 4.0 / 16.0, 1e-12);
  EXPECT_GE(c.gamma1_sampled, c.gamma1 - 1e-12);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int t = 0; t < 100; ++t) {
    double a = n(rng), b = n(rng), e = n(rng);
    double W[4] = {a, b, b, e};
    double tr = a + e, w2 = a * a + 2 * b * b + e * e;
    EXPECT_NEAR(contract(C, W), (tr * tr + 2.0 * w2) / 16.0, 1e-12);
    EXPECT_GE(contract(C, W), 2.0 / 16.0 * w2 - 1e-12);
  }
}

TEST(Certificate, ThreeDimensionalLame) {
  Certificate c = certify_elasticity(lame_closed_form(2.0, 3));
  EXPECT_TRUE(c.passed());
  EXPECT_NEAR(c.lh_min, 1.0 / 15.0, 1e-4);
  EXPECT_EQ(c.voigt.size(), 36u);
  EXPECT_NEAR(c.voigt[0], 3.0 / 15.0, 1e-15);
  EXPECT_NEAR(c.voigt[1], 1.0 / 15.0, 1e-15);
  EXPECT_NEAR(c.voigt[3 * 6 + 3], 1.0 / 15.0, 1e-15);
}

TEST(Certificate, InjectedNegativeEntryFails) {
  Tensor4 C = lame_closed_form(1.0, 2);
  C(0, 0, 0, 0) = -1.0;
  Certificate c = certify_elasticity(C);
  EXPECT_LE(c.gamma1, 0.0);
  EXPECT_FALSE(c.passed());
}

TEST(Certificate, BrokenSymmetryIsMeasured) {
  Tensor4 C = lame_closed_form(1.0, 2);
  C(0, 1, 0, 0) += 1e-3;
  EXPECT_NEAR(symmetry_violation(C), 1e-3, 1e-12);
  EXPECT_FALSE(certify_elasticity(C).passed());
}

TEST(Certificate, VoigtOrderingTwoD) {
  Tensor4 C(2);
  C(0, 0, 0, 0) = 1;
  C(1, 1, 1, 1) = 2;
  C(0, 1, 0, 1) = C(1, 0, 0, 1) = C(0, 1, 1, 0) = C(1, 0, 1, 0) = 3;
  C(0, 0, 1, 1) = C(1, 1, 0, 0) = 4;
  std::vector<double> v = voigt_matrix(C);
  ASSERT_EQ(v.size(), 9u);
  EXPECT_EQ(v[0], 1);
  EXPECT_EQ(v[4], 2);
  EXPECT_EQ(v[8], 3);
  EXPECT_EQ(v[1], 4);
  EXPECT_EQ(v[3], 4);
}

TEST(QuarticMoment, IsotropicMinimum) {
  // Twice the Lame tensor at a2 = 1: minimum over unit symmetric W is 1/4.
  EXPECT_NEAR(min_quartic_moment(lame_closed_form(1.0, 2).scaled(2.0)), 0.25, 1e-12);
}

TEST(EffectiveTensor, HarmonicMeanFactors) {
  CoefficientModel m;
  EXPECT_NEAR(harmonic_mean_factor(m, {0.3, 0.1, 0.0}, 16), 1.0, 1e-15);
  m.lambda1 = ScalarField::from_json({{"kind", "expr"}, {"expr", "1/(2+cos(2*pi*y1))"}}, "y", 2, 1.0);
  EXPECT_NEAR(harmonic_mean_factor(m, {0.3, 0.1, 0.0}, 16), 0.5, 1e-14);
  Tensor4 C = lame_closed_form(1.0, 2);
  EXPECT_LT(max_abs_diff(effective_tensor(m, C, {0.2, 0.0, 0.0}, 16), C.scaled(0.5)), 1e-15);
  m.lambda0 = ScalarField::from_json({{"kind", "expr"}, {"expr", "1+0.5*sin(2*pi*x1/L)"}}, "x", 2, 1.0);
  for (double x : {0.0, 0.25, 0.6}) {
    double l0 = 1.0 + 0.5 * std::sin(kTwoPi * x);
    EXPECT_LT(max_abs_diff(effective_tensor(m, C, {x, 0.4, 0.0}, 16), C.scaled(0.5 * l0)), 1e-14);
  }
}

TEST(LameOperator, ShearModeAndConstants) {
  TorusGrid g(2, 16);
  const double mu0 = 0.3;
  PeriodicField mu(g, 0);
  for (double& v : mu.data()) v = mu0;
  PeriodicField u(g, 1), c(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    u.at(q, 0) = std::sin(kTwoPi * g.coord(q)[1]);
    c.at(q, 0) = 1.0;
    c.at(q, 1) = -2.0;
  }
  PeriodicField out = lame_operator_apply(mu, u);
  EXPECT_LT(max_abs(out + (kTwoPi * kTwoPi * mu0) * u), 1e-11);
  EXPECT_LT(max_abs(lame_operator_apply(mu, c)), 1e-12);
}
