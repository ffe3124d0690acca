#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace perihom {

// Flat index of a rank-r tensor with extent d per slot, first slot slowest.
inline constexpr int tidx(int d, int i, int j) { return i * d + j; }
inline constexpr int tidx(int d, int i, int j, int k) { return (i * d + j) * d + k; }
inline constexpr int tidx(int d, int i, int j, int k, int l) {
  return ((i * d + j) * d + k) * d + l;
}

inline constexpr int ipow(int base, int exp) {
  int r = 1;
  for (int e = 0; e < exp; ++e) r *= base;
  return r;
}

// Constant fourth-order tensor in d <= 3 dimensions.
struct Tensor4 {
  int d = 2;
  std::array<double, 81> v{};

  Tensor4() = default;
  explicit Tensor4(int dim) : d(dim) {}

  double& operator()(int i, int j, int k, int l) { return v[tidx(d, i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return v[tidx(d, i, j, k, l)]; }
  int size() const { return ipow(d, 4); }

  double max_abs() const {
    double m = 0.0;
    for (int n = 0; n < size(); ++n) m = std::fmax(m, std::fabs(v[n]));
    return m;
  }
  Tensor4 scaled(double s) const {
    Tensor4 r(d);
    for (int n = 0; n < size(); ++n) r.v[n] = s * v[n];
    return r;
  }
};

inline double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0.0;
  for (int n = 0; n < a.size(); ++n) m = std::fmax(m, std::fabs(a.v[n] - b.v[n]));
  return m;
}

}  // namespace perihom
