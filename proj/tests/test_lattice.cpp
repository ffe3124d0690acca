#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "perihom/lattice.hpp"

using namespace perihom;

namespace {

struct DiscreteMoments {
  double a1 = 0.0, a2 = 0.0;
  double odd = 0.0;  // |sum w z| as an evenness probe
};

DiscreteMoments moments(const LatticeKernel& k) {
  DiscreteMoments m;
  double s[3] = {0, 0, 0};
  for (std::size_t i = 0; i < k.size(); ++i) {
    Point z = k.z(i);
    double r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    m.a1 += k.weights[i];
    m.a2 += k.weights[i] * r2;
    for (int a = 0; a < 3; ++a) s[a] += k.weights[i] * z[a];
  }
  m.odd = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
  return m;
}

}  // namespace

class LatticeFamilies : public ::testing::TestWithParam<int> {
 protected:
  KernelSpec spec() const {
    KernelSpec s;
    switch (GetParam()) {
      case 0: s = KernelSpec::indicator(2, 0.4); break;
      case 1: s = KernelSpec::gaussian(2, 0.15); break;
      case 2: s = KernelSpec::cone(2, 0.4, {std::sqrt(3.0) / 2.0, 0.5, 0.0}, 0.5); break;
      default: s = KernelSpec::indicator(3, 0.4); break;
    }
    s.normalize = Normalization::SecondMoment;
    return s;
  }
};

TEST_P(LatticeFamilies, DiscreteMomentsMatchContinuum) {
  KernelSpec s = spec();
  const double h = s.dim == 3 ? 1.0 / 16 : 1.0 / 32;
  LatticeKernel k = discretize_kernel(s, h);
  DiscreteMoments m = moments(k);
  EXPECT_NEAR(m.a1, k.a1, 1e-10 * k.a1);
  EXPECT_NEAR(m.a2, k.a2, 1e-10 * k.a2);
  EXPECT_NEAR(k.a2, 1.0, 1e-5);
  EXPECT_LT(m.odd, 1e-12 * k.a1);
  EXPECT_GT(k.fit_min, 0.0);
}

TEST_P(LatticeFamilies, WeightsAreEvenAndOriginFree) {
  KernelSpec s = spec();
  LatticeKernel k = discretize_kernel(s, s.dim == 3 ? 1.0 / 16 : 1.0 / 32);
  std::map<std::array<int, 3>, double> w;
  for (std::size_t i = 0; i < k.size(); ++i) {
    EXPECT_FALSE(k.offsets[i][0] == 0 && k.offsets[i][1] == 0 && k.offsets[i][2] == 0);
    EXPECT_GT(k.weights[i], 0.0);
    w[k.offsets[i]] = k.weights[i];
  }
  for (const auto& [o, v] : w) {
    auto it = w.find({-o[0], -o[1], -o[2]});
    ASSERT_NE(it, w.end());
    EXPECT_DOUBLE_EQ(it->second, v);
  }
}

INSTANTIATE_TEST_SUITE_P(Families, LatticeFamilies, ::testing::Values(0, 1, 2, 3));

TEST(Lattice, CoarseGaussianStaysPositive) {
  KernelSpec s = KernelSpec::gaussian(2, 0.15);
  LatticeKernel k = discretize_kernel(s, 1.0 / 32);
  EXPECT_GT(k.fit_min, 0.0);
  EXPECT_LT(k.fit_max / k.fit_min, 10.0);
}

TEST(Lattice, RefinementShrinksTheFitFactor) {
  KernelSpec s = KernelSpec::indicator(2, 0.4);
  LatticeKernel coarse = discretize_kernel(s, 1.0 / 16);
  LatticeKernel fine = discretize_kernel(s, 1.0 / 64);
  double spread_c = coarse.fit_max - coarse.fit_min;
  double spread_f = fine.fit_max - fine.fit_min;
  EXPECT_LT(spread_f, spread_c);
}
