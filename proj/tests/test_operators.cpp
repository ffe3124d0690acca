#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "perihom/errors.hpp"
#include "perihom/experiments.hpp"
#include "perihom/operators.hpp"

using namespace perihom;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

PeriodicField random_field(const TorusGrid& g, int rank, std::mt19937_64& rng) {
  PeriodicField f(g, rank);
  std::normal_distribution<double> n;
  for (double& v : f.data()) v = n(rng);
  return f;
}

CoefficientModel cosine_mu(double alpha1 = 1.0, double alpha2 = 3.0) {
  CoefficientModel m;
  m.mu = ScalarField::from_json({{"kind", "cosine"}, {"mean", 2.0}, {"amplitude", 1.0}, {"wavevector", {1, 0}}},
                                "y", 2, 1.0);
  m.alpha1 = alpha1;
  m.alpha2 = alpha2;
  return m;
}

double nodal_min_eig(const PeriodicField& G, std::size_t q) {
  double a = G.at(q, 0), b = G.at(q, 1), d = G.at(q, 3);
  return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
}

}  // namespace

TEST(Gmultiplier, RadialHomogeneousIsIsotropic) {
  TorusGrid g(2, 32);
  KernelSpec s = KernelSpec::indicator(2, 0.4);
  LatticeKernel lk = discretize_kernel(s, g.spacing());
  PeriodicField mu = sample_scalar(g, [](const Point&) { return 1.0; });
  GMultiplier G = assemble_G(lk, mu);
  for (std::size_t q = 0; q < g.size(); q += 17) {
    EXPECT_NEAR(G.values.at(q, 0), lk.a1 / 2.0, 1e-12 * lk.a1);
    EXPECT_NEAR(G.values.at(q, 3), lk.a1 / 2.0, 1e-12 * lk.a1);
    EXPECT_NEAR(G.values.at(q, 1), 0.0, 1e-12 * lk.a1);
  }
  NonlocalOperator op(lk, mu);
  EXPECT_LT(max_abs(op.G().values - G.values), 1e-12 * lk.a1);
}

TEST(Gmultiplier, BoundsFromCoefficients) {
  TorusGrid g(2, 32);
  KernelSpec s = KernelSpec::gaussian(2, 0.15);
  LatticeKernel lk = discretize_kernel(s, g.spacing());
  CoefficientModel m = cosine_mu(1.0, 3.0);
  PeriodicField mu = sample_scalar(g, [&](const Point& y) { return m.mu(y); });
  PeriodicField one = sample_scalar(g, [](const Point&) { return 1.0; });
  GMultiplier G = assemble_G(lk, mu);
  GMultiplier G1 = assemble_G(lk, one);
  EXPECT_LE(G.max_norm, m.alpha2 * lk.a1 * (1.0 + 1e-12));
  double base = 1e300;
  for (std::size_t q = 0; q < g.size(); ++q) base = std::min(base, nodal_min_eig(G1.values, q));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (int t = 0; t < 200; ++t) {
    std::size_t q = rng() % g.size();
    double e0 = n(rng), e1 = n(rng), nn = e0 * e0 + e1 * e1;
    double rq = (G.values.at(q, 0) * e0 * e0 + 2.0 * G.values.at(q, 1) * e0 * e1 + G.values.at(q, 3) * e1 * e1) / nn;
    EXPECT_GE(rq, m.alpha1 * base * (1.0 - 1e-12));
  }
}

TEST(Koperator, ConstantFieldAndBound) {
  TorusGrid g(2, 16);
  KernelSpec s = KernelSpec::indicator(2, 0.4);
  LatticeKernel lk = discretize_kernel(s, g.spacing());
  PeriodicField one = sample_scalar(g, [](const Point&) { return 1.0; });
  NonlocalOperator op(lk, one);
  PeriodicField c(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    c.at(q, 0) = 1.5;
    c.at(q, 1) = -0.5;
  }
  PeriodicField Kc = op.apply_K(c);
  for (std::size_t q = 0; q < g.size(); q += 11) {
    EXPECT_NEAR(Kc.at(q, 0), 1.5 * lk.a1 / 2.0, 1e-12);
    EXPECT_NEAR(Kc.at(q, 1), -0.5 * lk.a1 / 2.0, 1e-12);
  }
  CoefficientModel m = cosine_mu();
  PeriodicField mu = sample_scalar(g, [&](const Point& y) { return m.mu(y); });
  NonlocalOperator het(lk, mu);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    PeriodicField p = random_field(g, 1, rng);
    EXPECT_LE(norm(het.apply_K(p)), m.alpha2 * lk.a1 * norm(p) * (1.0 + 1e-12));
  }
  EXPECT_LT(max_abs(het.apply_KminusG(c)), 1e-12 * het.G().max_norm);
}

TEST(Koperator, SelfAdjointAgainstDirectDoubleSum) {
  TorusGrid g(2, 8);
  KernelSpec s = KernelSpec::indicator(2, 0.4);
  LatticeKernel lk = discretize_kernel(s, g.spacing());
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  PeriodicField mu(g, 0);
  for (double& v : mu.data()) v = u(rng);
  NonlocalOperator op(lk, mu);
  PeriodicField psi = random_field(g, 1, rng), phi = random_field(g, 1, rng);
  // <K psi, phi> as a literal sum over nodes and lattice offsets.
  double direct = 0.0;
  for (std::size_t q = 0; q < g.size(); ++q) {
    auto qi = g.index(q);
    for (std::size_t n = 0; n < lk.size(); ++n) {
      Point z = lk.z(n);
      double r2 = z[0] * z[0] + z[1] * z[1];
      std::size_t y = g.node({qi[0] - lk.offsets[n][0], qi[1] - lk.offsets[n][1], 0});
      double ms = 0.5 * (mu.at(q, 0) + mu.at(y, 0));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) direct += lk.weights[n] * z[i] * z[j] / r2 * ms * psi.at(y, j) * phi.at(q, i);
    }
  }
  direct *= g.cell_volume();
  double a = inner(op.apply_K(psi), phi), b = inner(psi, op.apply_K(phi));
  EXPECT_NEAR(a, direct, 1e-10 * std::fabs(direct));
  EXPECT_NEAR(a, b, 1e-10 * std::fabs(direct));
}

TEST(OperatorSuite, AllKernelFamiliesPass) {
  Tolerances tol;
  for (const auto& cfg : default_matrix(16)) {
    if (cfg.name.find("l1-const_l0-const") == std::string::npos) continue;
    OperatorSuiteReport r =
        operator_property_suite(cfg.model.kernel, cfg.model.coefficients, 16, 100, 1, tol, cfg.quad);
    EXPECT_TRUE(r.passed) << cfg.name << " " << r.to_json().dump();
    EXPECT_GT(r.smallest_eigenvalues[2], 1e-6) << cfg.name;
  }
}

TEST(ScaledOperator, SingleModeMatchesNonlocalSymbol) {
  const double eps = 0.25;
  TorusGrid box(2, 64);
  KernelSpec s = KernelSpec::indicator(2, 0.4);
  CoefficientModel m;
  ScaledOperator op(s, m, eps, box);
  const int k1 = 2, k2 = 1;
  PeriodicField u(box, 1);
  for (std::size_t q = 0; q < box.size(); ++q) {
    Point x = box.coord(q);
    double c = std::cos(kTwoPi * (k1 * x[0] + k2 * x[1]));
    u.at(q, 0) = c;
    u.at(q, 1) = -2.0 * c;
  }
  const LatticeKernel& lk = op.nonlocal().lattice();
  double S[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t n = 0; n < lk.size(); ++n) {
    Point z = lk.z(n);
    double r2 = z[0] * z[0] + z[1] * z[1];
    double ph = std::cos(kTwoPi * eps * (k1 * z[0] + k2 * z[1])) - 1.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) S[i][j] += lk.weights[n] * z[i] * z[j] / r2 * ph;
  }
  PeriodicField Lu = op.apply(u);
  double err = 0.0, ref = 0.0;
  for (std::size_t q = 0; q < box.size(); ++q) {
    for (int i = 0; i < 2; ++i) {
      double e = (S[i][0] - 2.0 * S[i][1]) * u.at(q, 0) / (eps * eps);
      err = std::max(err, std::fabs(Lu.at(q, i) - e));
      ref = std::max(ref, std::fabs(e));
    }
  }
  EXPECT_LT(err, 1e-10 * ref);
}

TEST(ScaledOperator, ConstantsAndLinearity) {
  TorusGrid box(2, 64);
  KernelSpec s = KernelSpec::gaussian(2, 0.15);
  CoefficientModel m = cosine_mu();
  ScaledOperator op(s, m, 0.25, box);
  PeriodicField c(box, 1);
  for (double& v : c.data()) v = 0.7;
  EXPECT_LT(max_abs(op.apply(c)), 1e-9);
  std::mt19937_64 rng(2);
  PeriodicField a = random_field(box, 1, rng), b = random_field(box, 1, rng);
  PeriodicField lhs = op.apply(a + b), rhs = op.apply(a) + op.apply(b);
  EXPECT_LT(max_abs(lhs - rhs), 1e-12 * max_abs(lhs));
}

TEST(ScaledOperator, RejectsNonIntegralPeriods) {
  TorusGrid box(2, 64);
  EXPECT_THROW(check_scaled_grid(0.3, box), ArgumentError);
  EXPECT_THROW(check_scaled_grid(1.0 / 16, TorusGrid(2, 64)), ArgumentError);
  EXPECT_NO_THROW(check_scaled_grid(0.25, box));
}

TEST(Resolvent, ConstantsZeroAndUniformBound) {
  TorusGrid box(2, 64);
  KernelSpec s = KernelSpec::indicator(2, 0.4);
  CoefficientModel m = cosine_mu(0.15, 3.0);
  m.lambda1 = ScalarField::from_json({{"kind", "expr"}, {"expr", "1/(2+cos(2*pi*y1))"}}, "y", 2, 1.0);
  ScaledOperator op(s, m, 0.25, box);
  const double mm = 5.0;
  PeriodicField c(box, 1);
  for (double& v : c.data()) v = 2.0;
  ResolventReport rc = resolvent_solve(op, mm, c, 1e-12);
  EXPECT_LT(max_abs(rc.u - (1.0 / mm) * c), 1e-10);
  ResolventReport r0 = resolvent_solve(op, mm, PeriodicField(box, 1), 1e-12);
  EXPECT_EQ(max_abs(r0.u), 0.0);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    PeriodicField f = random_field(box, 1, rng);
    ResolventReport r = resolvent_solve(op, mm, f, 1e-10);
    EXPECT_LE(norm(r.u), std::sqrt(m.alpha2 / m.alpha1) * norm(f) / mm);
    PeriodicField res = mm * r.u - op.apply(r.u) - f;
    EXPECT_LT(norm(res) / norm(f), 1e-9);
  }
}
