#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "perihom/errors.hpp"
#include "perihom/tensor.hpp"
#include "perihom/torus.hpp"

using namespace perihom;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

PeriodicField random_field(const TorusGrid& g, int rank, std::uint64_t seed) {
  PeriodicField f(g, rank);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (double& v : f.data()) v = n(rng);
  return f;
}

// O(N^{2d}) reference: h^d sum_y Kbar(q - y) v(y).
PeriodicField direct_convolve(const PeriodizedMatrixKernel& K, const PeriodicField& v) {
  const TorusGrid& g = K.grid;
  const int d = g.dim;
  PeriodicField out(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    auto qi = g.index(q);
    for (std::size_t y = 0; y < g.size(); ++y) {
      auto yi = g.index(y);
      std::size_t r = g.node({qi[0] - yi[0], qi[1] - yi[1], qi[2] - yi[2]});
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out.at(q, i) += g.cell_volume() * K.node_value(r, i, j) * v.at(y, j);
    }
  }
  return out;
}

}  // namespace

TEST(Grid, IndexRoundTripAndWrap) {
  TorusGrid g(3, 6, 2.0);
  for (std::size_t q = 0; q < g.size(); ++q) EXPECT_EQ(g.node(g.index(q)), q);
  EXPECT_EQ(g.node({-1, 0, 0}), g.node({5, 0, 0}));
  EXPECT_DOUBLE_EQ(g.coord(g.node({1, 2, 3}))[2], 3 * (2.0 / 6));
}

TEST(MeanZero, Examples) {
  TorusGrid g(2, 12);
  PeriodicField c(g, 1);
  for (double& v : c.data()) v = 3.0;
  EXPECT_LT(max_abs(project_mean_zero(c)), 1e-15);
  PeriodicField s(g, 1), f(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    double x = g.coord(q)[0];
    s.at(q, 0) = std::sin(kTwoPi * x);
    f.at(q, 0) = 1.0 + std::cos(kTwoPi * x);
  }
  EXPECT_LT(std::fabs(mean(s)[0]), 1e-15);
  EXPECT_LT(max_abs(project_mean_zero(s) - s), 1e-15);
  PeriodicField pf = project_mean_zero(f);
  for (std::size_t q = 0; q < g.size(); ++q) EXPECT_NEAR(pf.at(q, 0), std::cos(kTwoPi * g.coord(q)[0]), 1e-14);
  PeriodicField r = project_mean_zero(random_field(g, 1, 3));
  for (double m : mean(r)) EXPECT_LT(std::fabs(m), 1e-15);
}

TEST(Periodize, CompactSupportNeedsNoImages) {
  TorusGrid g(2, 16);
  KernelSpec s = KernelSpec::indicator(2, 0.4);
  PeriodizedMatrixKernel one = build_periodized_kernel(s, g, 1);
  PeriodizedMatrixKernel auto_shells = build_periodized_kernel(s, g, -1);
  EXPECT_EQ(auto_shells.shells, 0);
  EXPECT_EQ(max_abs(one.weights - auto_shells.weights), 0.0);
}

TEST(Periodize, ExtraShellsChangeNothingBeyondTruncation) {
  TorusGrid g(2, 8);
  KernelSpec s = KernelSpec::gaussian(2, 0.15);
  int need = build_periodized_kernel(s, g, -1).shells;
  PeriodizedMatrixKernel a = build_periodized_kernel(s, g, need);
  PeriodizedMatrixKernel b = build_periodized_kernel(s, g, need + 1);
  EXPECT_LT(max_abs(a.weights - b.weights), 1e-12);
}

TEST(Periodize, KernelIsEven) {
  TorusGrid g(2, 16);
  KernelSpec s = KernelSpec::cone(2, 0.4, {std::sqrt(3.0) / 2.0, 0.5, 0.0}, 0.5);
  PeriodizedMatrixKernel K = build_periodized_kernel(s, g, -1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    auto i = g.index(q);
    std::size_t m = g.node({-i[0], -i[1], 0});
    for (int c = 0; c < 4; ++c) EXPECT_EQ(K.weights.at(q, c), K.weights.at(m, c));
  }
}

TEST(Convolution, FftMatchesDirectSum) {
  for (int d : {2, 3}) {
    TorusGrid g(d, d == 2 ? 16 : 6);
    KernelSpec s = KernelSpec::indicator(d, 0.4);
    PeriodizedMatrixKernel K = build_periodized_kernel(s, g, -1);
    PeriodicField v = random_field(g, 1, 11);
    PeriodicField fast = periodic_convolve(K, v);
    PeriodicField ref = direct_convolve(K, v);
    EXPECT_LT(max_abs(fast - ref) / max_abs(ref), 1e-10) << "d = " << d;
  }
}

TEST(Convolution, ConstantAndImpulse) {
  TorusGrid g(2, 16);
  KernelSpec s = KernelSpec::gaussian(2, 0.15);
  PeriodizedMatrixKernel K = build_periodized_kernel(s, g, -1);
  const double h2 = g.cell_volume();
  PeriodicField c(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    c.at(q, 0) = 2.0;
    c.at(q, 1) = -1.0;
  }
  double S[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t q = 0; q < g.size(); ++q)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) S[i][j] += h2 * K.node_value(q, i, j);
  PeriodicField out = periodic_convolve(K, c);
  for (std::size_t q = 0; q < g.size(); q += 37) {
    EXPECT_NEAR(out.at(q, 0), 2.0 * S[0][0] - S[0][1], 1e-12);
    EXPECT_NEAR(out.at(q, 1), 2.0 * S[1][0] - S[1][1], 1e-12);
  }
  PeriodicField delta(g, 1);
  delta.at(0, 0) = 1.0 / h2;
  PeriodicField imp = periodic_convolve(K, delta);
  for (std::size_t q = 0; q < g.size(); ++q) {
    EXPECT_NEAR(imp.at(q, 0), K.node_value(q, 0, 0), 1e-10 * std::fabs(K.node_value(0, 0, 0)) + 1e-12);
    EXPECT_NEAR(imp.at(q, 1), K.node_value(q, 1, 0), 1e-10 * std::fabs(K.node_value(0, 0, 0)) + 1e-12);
  }
}

TEST(Spectral, DerivativesOfTrigonometricField) {
  const double L = 2.0, k = kTwoPi / L;
  TorusGrid g(2, 16, L);
  PeriodicField u(g, 1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    Point x = g.coord(q);
    u.at(q, 0) = std::sin(k * x[1]);
    u.at(q, 1) = std::cos(k * (x[0] + 2.0 * x[1]));
  }
  PeriodicField D = gradient(u);
  PeriodicField H = hessian(u);
  double err = 0.0;
  for (std::size_t q = 0; q < g.size(); ++q) {
    Point x = g.coord(q);
    double s = std::sin(k * (x[0] + 2.0 * x[1])), c = std::cos(k * (x[0] + 2.0 * x[1]));
    err = std::max(err, std::fabs(D.at(q, tidx(2, 0, 1)) - k * std::cos(k * x[1])));
    err = std::max(err, std::fabs(D.at(q, tidx(2, 0, 0))));
    err = std::max(err, std::fabs(D.at(q, tidx(2, 1, 1)) + 2.0 * k * s));
    err = std::max(err, std::fabs(H.at(q, tidx(2, 0, 1, 1)) + k * k * std::sin(k * x[1])));
    err = std::max(err, std::fabs(H.at(q, tidx(2, 1, 0, 1)) + 2.0 * k * k * c));
    err = std::max(err, std::fabs(H.at(q, tidx(2, 1, 1, 1)) + 4.0 * k * k * c));
  }
  EXPECT_LT(err, 1e-11);
}

TEST(FieldIo, BinaryRoundTrip) {
  TorusGrid g(2, 8, 1.5);
  PeriodicField f = random_field(g, 3, 5);
  auto path = (std::filesystem::temp_directory_path() / "perihom_field_io.bin").string();
  write_field(path, f);
  PeriodicField r = read_field(path);
  EXPECT_TRUE(r.grid() == g);
  EXPECT_EQ(r.rank(), 3);
  EXPECT_EQ(r.data(), f.data());
  std::filesystem::remove(path);
}

TEST(Fields, GridMismatchIsRejected) {
  PeriodicField a(TorusGrid(2, 8), 1), b(TorusGrid(2, 16), 1);
  EXPECT_THROW(inner(a, b), ArgumentError);
}
