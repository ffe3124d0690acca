#include "perihom/localsolver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "perihom/errors.hpp"
#include "perihom/krylov.hpp"

namespace perihom {

PeriodicField coefficient_factor(const EffectiveTensor& ceff, const TorusGrid& grid) {
  return sample_scalar(grid, [&](const Point& x) { return ceff.factor(x); });
}

PeriodicField apply_L0(const Tensor4& C, const PeriodicField& phi, const PeriodicField& u) {
  if (!(phi.grid() == u.grid())) throw ArgumentError("apply_L0: grid mismatch");
  if (u.rank() != 1) throw ArgumentError("apply_L0 expects a vector field");
  const int d = u.grid().dim;
  if (C.d != d) throw ArgumentError("apply_L0: tensor dimension mismatch");
  PeriodicField H = hessian(u);
  PeriodicField out(u.grid(), 1);
  for (int i = 0; i < d; ++i) {
    double* o = out.component(i);
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double c = C(i, j, k, l);
          if (c == 0.0) continue;
          const double* h = H.component(tidx(d, k, j, l));
          for (std::size_t q = 0; q < u.nodes(); ++q) o[q] += c * h[q];
        }
    const double* p = phi.component(0);
    for (std::size_t q = 0; q < u.nodes(); ++q) o[q] *= p[q];
  }
  return out;
}

PeriodicField apply_L0(const EffectiveTensor& ceff, const PeriodicField& u) {
  return apply_L0(ceff.ctilde, coefficient_factor(ceff, u.grid()), u);
}

PeriodicField constant_coefficient_solve(double shift, const Tensor4& C, const PeriodicField& f) {
  if (f.rank() != 1) throw ArgumentError("constant_coefficient_solve expects a vector field");
  const TorusGrid& g = f.grid();
  const int d = g.dim;
  const FftPlan& plan = FftPlan::get(d, g.n);
  const std::size_t S = plan.spectral_size();
  const double w0 = 2.0 * std::numbers::pi / g.length;
  std::vector<std::vector<std::complex<double>>> fh(d, std::vector<std::complex<double>>(S));
  for (int i = 0; i < d; ++i) plan.forward(f.component(i), fh[i].data());
  Eigen::MatrixXd A(d, d);
  Eigen::MatrixXcd rhs(d, 1);
  for (std::size_t s = 0; s < S; ++s) {
    auto kv = plan.wavenumber(s);
    // Same Nyquist rule as hessian(): mixed derivatives vanish there.
    double kk[3][3];
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) {
        bool nyq = j != l && (2 * std::abs(kv[j]) == g.n || 2 * std::abs(kv[l]) == g.n);
        kk[j][l] = nyq ? 0.0 : (w0 * kv[j]) * (w0 * kv[l]);
      }
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        double a = 0.0;
        for (int j = 0; j < d; ++j)
          for (int l = 0; l < d; ++l) a += C(i, j, k, l) * kk[j][l];
        A(i, k) = a + (i == k ? shift : 0.0);
      }
    for (int i = 0; i < d; ++i) rhs(i, 0) = fh[i][s];
    Eigen::MatrixXcd sol = A.cast<std::complex<double>>().partialPivLu().solve(rhs);
    for (int i = 0; i < d; ++i) fh[i][s] = sol(i, 0);
  }
  PeriodicField u(g, 1);
  for (int i = 0; i < d; ++i) plan.backward(fh[i].data(), u.component(i));
  return u;
}

nlohmann::json LocalSolveReport::to_json() const {
  return {{"m", m}, {"iterations", iterations}, {"residual", residual}, {"contraction", contraction},
          {"monotone", monotone}};
}

LocalSolveReport solve_local(double m, const EffectiveTensor& ceff, const PeriodicField& f, double tol,
                             int max_iter) {
  if (!(m > 0.0)) throw ArgumentError("solve_local: m must be positive");
  if (f.rank() != 1) throw ArgumentError("solve_local expects a vector field");
  for (double v : f.data())
    if (!std::isfinite(v)) throw ArgumentError("solve_local: forcing is not finite");
  const TorusGrid& g = f.grid();
  const std::size_t N = g.size();
  const int d = g.dim;
  PeriodicField phi = coefficient_factor(ceff, g);
  double pmin = phi.data()[0], pmax = pmin, inv_mean = 0.0;
  for (double p : phi.data()) {
    if (!(p > 0.0)) throw ValidationError("solve_local: coefficient factor must be positive");
    pmin = std::min(pmin, p);
    pmax = std::max(pmax, p);
    inv_mean += 1.0 / p;
  }
  inv_mean /= static_cast<double>(N);

  LocalSolveReport rep;
  rep.m = m;
  double kappa = pmax / pmin;
  rep.contraction = (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);
  rep.u0 = PeriodicField(g, 1);
  const double fn = norm(f);
  if (fn == 0.0) return rep;

  const Tensor4& C = ceff.ctilde;
  PeriodicField one = sample_scalar(g, [](const Point&) { return 1.0; });
  auto divide = [&](PeriodicField v) {
    for (int i = 0; i < d; ++i)
      for (std::size_t q = 0; q < N; ++q) v.at(q, i) /= phi.at(q, 0);
    return v;
  };
  FieldMap A = [&](const PeriodicField& u) {
    PeriodicField r = apply_L0(C, one, u);
    for (int i = 0; i < d; ++i)
      for (std::size_t q = 0; q < N; ++q) r.at(q, i) = m * u.at(q, i) / phi.at(q, 0) - r.at(q, i);
    return r;
  };
  FieldMap P = [&](const PeriodicField& r) { return constant_coefficient_solve(m * inv_mean, C, r); };
  // Recursive residual of the divided system times phi is the true residual.
  auto measure = [&](const PeriodicField& r) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (std::size_t q = 0; q < N; ++q) s += std::pow(phi.at(q, 0) * r.at(q, i), 2);
    return std::sqrt(s * g.cell_volume()) / fn;
  };
  PeriodicField b = divide(f);
  CgResult cg = conjugate_gradient(A, P, b, rep.u0, measure, tol, max_iter, false);
  rep.iterations = cg.iterations;
  rep.history = cg.history;
  for (std::size_t s = 1; s < rep.history.size(); ++s)
    if (rep.history[s] > rep.history[s - 1]) rep.monotone = false;
  PeriodicField res = rep.u0;
  res *= m;
  res -= apply_L0(C, phi, rep.u0);
  res -= f;
  rep.residual = norm(res) / fn;
  return rep;
}

}  // namespace perihom
