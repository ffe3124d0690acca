#include "perihom/cell.hpp"

#include <cmath>
#include <sstream>

#include "perihom/errors.hpp"

namespace perihom {

namespace {

PeriodicField sample_fast(const TorusGrid& grid, const ScalarField& f) {
  return sample_scalar(grid, [&](const Point& y) { return f(y); });
}

PeriodicField monomial_kernel(const LatticeKernel& lk, const TorusGrid& grid, int rank) {
  const int d = grid.dim;
  return periodize(lk, grid, rank, -1, [d, rank](const Point& z, double w, double* out) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += z[i] * z[i];
    double s = w / r2;
    int n = ipow(d, rank);
    for (int c = 0; c < n; ++c) {
      double v = s;
      int r = c;
      for (int slot = 0; slot < rank; ++slot) {
        v *= z[r % d];
        r /= d;
      }
      out[c] = v;
    }
  });
}

LatticeKernel checked_lattice(const LatticeKernel& lk, int n) {
  if (std::fabs(lk.spacing * n - 1.0) > 1e-12) throw ArgumentError("cell lattice spacing must equal 1/N");
  return lk;
}

// Offsets with precomputed geometry for literal lattice sums.
struct OffsetTable {
  std::vector<std::array<int, 3>> n;
  std::vector<Point> z;
  std::vector<double> w;
  std::vector<double> inv_r2;

  explicit OffsetTable(const LatticeKernel& lk) {
    for (std::size_t k = 0; k < lk.size(); ++k) {
      Point zz = lk.z(k);
      double r2 = 0.0;
      for (int i = 0; i < lk.dim; ++i) r2 += zz[i] * zz[i];
      n.push_back(lk.offsets[k]);
      z.push_back(zz);
      w.push_back(lk.weights[k]);
      inv_r2.push_back(1.0 / r2);
    }
  }
  std::size_t size() const { return w.size(); }
};

std::size_t shifted(const TorusGrid& g, std::size_t q, const std::array<int, 3>& off) {
  auto qi = g.index(q);
  return g.node({qi[0] - off[0], qi[1] - off[1], qi[2] - off[2]});
}

PeriodicField slice_kl(const PeriodicField& f3, int k, int l) {
  const int d = f3.grid().dim;
  PeriodicField v(f3.grid(), 1);
  for (int i = 0; i < d; ++i)
    for (std::size_t q = 0; q < v.nodes(); ++q) v.at(q, i) = f3.at(q, tidx(d, i, k, l));
  return v;
}

double tensor_norm(const std::vector<double>& M) {
  double s = 0.0;
  for (double v : M) s += v * v;
  return std::sqrt(s);
}

void solve_mean_zero(const CellProblem& cp, const PeriodicField& rhs, const CellSolveOptions& opt,
                     const PeriodicField& Ginv, PeriodicField& x, int& iterations, double& residual,
                     const char* what) {
  auto mu = mean(rhs);
  double viol = 0.0;
  for (double v : mu) viol = std::max(viol, std::fabs(v));
  if (viol > opt.fredholm_tol) {
    std::ostringstream os;
    os << what << ": Fredholm condition violated, |mean| = " << viol << " > " << opt.fredholm_tol;
    throw SolvabilityError(os.str(), viol);
  }
  PeriodicField b = project_mean_zero(rhs);
  double bn = norm(b);
  x = PeriodicField(rhs.grid(), 1);
  iterations = 0;
  residual = 0.0;
  if (bn == 0.0) return;
  // (K - G) x = rhs  <=>  (G - K) x = -rhs, SPD on mean-zero fields.
  FieldMap A = [&](const PeriodicField& v) { return cp.op.apply_G(v) - cp.op.apply_K(v); };
  FieldMap P = [&](const PeriodicField& r) { return apply_blocks(Ginv, r); };
  PeriodicField mb = -1.0 * b;
  CgResult cg = conjugate_gradient(A, P, mb, x, [&](const PeriodicField& r) { return norm(r) / bn; },
                                   opt.tol, opt.max_iter, true);
  iterations = cg.iterations;
  residual = norm(cp.op.apply_KminusG(x) - b) / bn;
}

}  // namespace

CellProblem::CellProblem(const KernelSpec& spec, const CoefficientModel& m, int n, const QuadratureConfig& quad)
    : CellProblem(discretize_kernel(spec, 1.0 / n, quad), m, n) {}

CellProblem::CellProblem(const LatticeKernel& lk, const CoefficientModel& m, int n)
    : model(m),
      grid(lk.dim, n, 1.0),
      lattice(checked_lattice(lk, n)),
      mu(sample_fast(grid, m.mu)),
      lambda1(sample_fast(grid, m.lambda1)),
      op(lattice, mu),
      odd3(monomial_kernel(lattice, grid, 3)),
      even4(monomial_kernel(lattice, grid, 4)) {}

double mean_inverse_lambda1(const CellProblem& cp) {
  double s = 0.0;
  for (std::size_t q = 0; q < cp.grid.size(); ++q) s += 1.0 / cp.lambda1.at(q, 0);
  return s / static_cast<double>(cp.grid.size());
}

CellDataH assemble_h(const CellProblem& cp) {
  const int d = cp.dim();
  CellDataH H;
  PeriodicField conv = cp.odd3.scalar(cp.mu);
  H.h = PeriodicField(cp.grid, 3);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      for (int l = k; l < d; ++l) {
        int c = tidx(d, i, k, l);
        double tot = cp.odd3.totals()[c];
        for (std::size_t q = 0; q < cp.grid.size(); ++q) {
          double v = 0.5 * conv.at(q, c) + 0.5 * cp.mu.at(q, 0) * tot;
          H.h.at(q, c) = v;
          H.h.at(q, tidx(d, i, l, k)) = v;
        }
      }
    }
  }
  auto m = mean(H.h);
  for (double v : m) H.max_mean = std::max(H.max_mean, std::fabs(v));
  for (int k = 0; k < d; ++k) {
    for (int l = 0; l < d; ++l) {
      for (std::size_t q = 0; q < cp.grid.size(); ++q) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += H.h.at(q, tidx(d, i, k, l)) * H.h.at(q, tidx(d, i, k, l));
        H.max_norm = std::max(H.max_norm, std::sqrt(s));
      }
    }
  }
  return H;
}

CorrectorA solve_cell_A(const CellProblem& cp, const CellDataH& H, const CellSolveOptions& opt) {
  const int d = cp.dim();
  CorrectorA A;
  A.tol = opt.tol;
  A.a = PeriodicField(cp.grid, 3);
  PeriodicField Ginv = cp.op.block_inverses(std::vector<double>(cp.grid.size(), 0.0), 1.0);
  for (int k = 0; k < d; ++k) {
    for (int l = k; l < d; ++l) {
      PeriodicField x;
      int it;
      double res;
      solve_mean_zero(cp, slice_kl(H.h, k, l), opt, Ginv, x, it, res, "first cell problem");
      for (int i = 0; i < d; ++i)
        for (std::size_t q = 0; q < cp.grid.size(); ++q) {
          A.a.at(q, tidx(d, i, k, l)) = x.at(q, i);
          A.a.at(q, tidx(d, i, l, k)) = x.at(q, i);
        }
      A.iterations.push_back(it);
      A.residuals.push_back(res);
    }
  }
  return A;
}

DiagnosticReport check_psi_zero(const CellProblem& cp, const CorrectorA& A, const std::vector<double>& M,
                                const std::vector<std::size_t>& nodes) {
  const int d = cp.dim();
  if (static_cast<int>(M.size()) != d * d) throw ArgumentError("check_psi_zero: M must be d x d");
  DiagnosticReport rep;
  double mn = tensor_norm(M);
  if (mn == 0.0) return rep;
  PeriodicField aM(cp.grid, 1);
  for (int m = 0; m < d; ++m)
    for (std::size_t q = 0; q < cp.grid.size(); ++q) {
      double s = 0.0;
      for (int p = 0; p < d; ++p)
        for (int r = 0; r < d; ++r) s += M[p * d + r] * A.a.at(q, tidx(d, m, p, r));
      aM.at(q, m) = s;
    }
  OffsetTable T(cp.lattice);
  for (std::size_t xi : nodes) {
    double psi[3] = {0.0, 0.0, 0.0};
    double mx = cp.mu.at(xi, 0);
    for (std::size_t k = 0; k < T.size(); ++k) {
      std::size_t y = shifted(cp.grid, xi, T.n[k]);
      const Point& z = T.z[k];
      double ms = 0.5 * (mx + cp.mu.at(y, 0));
      double t = 0.0;
      for (int m = 0; m < d; ++m) t += z[m] * (aM.at(y, m) - aM.at(xi, m));
      for (int p = 0; p < d; ++p)
        for (int r = 0; r < d; ++r) t -= M[p * d + r] * z[p] * z[r];
      double s = T.w[k] * ms * t * T.inv_r2[k];
      for (int i = 0; i < d; ++i) psi[i] += s * z[i];
    }
    for (int i = 0; i < d; ++i) {
      double v = std::fabs(psi[i]) / mn;
      if (v > rep.max_residual) {
        rep.max_residual = v;
        rep.worst_node = xi;
      }
    }
  }
  return rep;
}

Tensor4 compute_Ctilde_solvability(const CellProblem& cp, const CorrectorA& A) {
  const int d = cp.dim();
  const int d2 = d * d;
  OffsetTable T(cp.lattice);
  std::vector<double> acc(d2 * d2, 0.0);
  std::vector<double> za(d2), zz(d2);
  for (std::size_t q = 0; q < cp.grid.size(); ++q) {
    double mq = cp.mu.at(q, 0);
    for (std::size_t k = 0; k < T.size(); ++k) {
      std::size_t y = shifted(cp.grid, q, T.n[k]);
      const Point& z = T.z[k];
      double s = T.w[k] * 0.5 * (mq + cp.mu.at(y, 0)) * T.inv_r2[k];
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          double v = 0.0;
          for (int m = 0; m < d; ++m) v += z[m] * A.a.at(y, tidx(d, m, a, b));
          za[a * d + b] = v;
          zz[a * d + b] = z[a] * z[b];
        }
      for (int ij = 0; ij < d2; ++ij)
        for (int kl = 0; kl < d2; ++kl) acc[ij * d2 + kl] += s * (0.5 * zz[ij] * zz[kl] - zz[ij] * za[kl]);
    }
  }
  Tensor4 c(d);
  double vol = 1.0 / static_cast<double>(cp.grid.size());
  for (int n = 0; n < d2 * d2; ++n) c.v[n] = acc[n] * vol;
  return c;
}

Tensor4 compute_Ctilde_quadratic(const CellProblem& cp, const CorrectorA& A) {
  const int d = cp.dim();
  const int d2 = d * d;
  OffsetTable T(cp.lattice);
  std::vector<double> acc(d2 * d2, 0.0);
  std::vector<double> F(d2);
  for (std::size_t q = 0; q < cp.grid.size(); ++q) {
    double mq = cp.mu.at(q, 0);
    for (std::size_t k = 0; k < T.size(); ++k) {
      std::size_t y = shifted(cp.grid, q, T.n[k]);
      const Point& z = T.z[k];
      double s = 0.5 * T.w[k] * 0.5 * (mq + cp.mu.at(y, 0)) * T.inv_r2[k];
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          double v = z[a] * z[b];
          for (int m = 0; m < d; ++m) v += (A.a.at(q, tidx(d, m, a, b)) - A.a.at(y, tidx(d, m, a, b))) * z[m];
          F[a * d + b] = v;
        }
      for (int ij = 0; ij < d2; ++ij)
        for (int kl = 0; kl < d2; ++kl) acc[ij * d2 + kl] += s * F[ij] * F[kl];
    }
  }
  Tensor4 c(d);
  double vol = 1.0 / static_cast<double>(cp.grid.size());
  for (int n = 0; n < d2 * d2; ++n) c.v[n] = acc[n] * vol;
  return c;
}

nlohmann::json CTildeReport::to_json() const {
  int n = solvability.size();
  std::vector<double> a(solvability.v.begin(), solvability.v.begin() + n);
  std::vector<double> b(quadratic.v.begin(), quadratic.v.begin() + n);
  return {{"dimension", solvability.d},
          {"index_order", "ijkl row-major"},
          {"solvability", a},
          {"quadratic", b},
          {"discrepancy", discrepancy}};
}

CTildeReport compute_Ctilde(const CellProblem& cp, const CorrectorA& A) {
  CTildeReport r;
  r.solvability = compute_Ctilde_solvability(cp, A);
  r.quadratic = compute_Ctilde_quadratic(cp, A);
  r.discrepancy = max_abs_diff(r.solvability, r.quadratic);
  return r;
}

PeriodicField assemble_g(const CellProblem& cp, const CorrectorA& A, const Tensor4& ctilde) {
  const int d = cp.dim();
  const std::size_t N = cp.grid.size();
  const double mil = mean_inverse_lambda1(cp);
  std::vector<double> theta(N);
  for (std::size_t q = 0; q < N; ++q) theta[q] = 1.0 / (cp.lambda1.at(q, 0) * mil);

  PeriodicField Tm = cp.even4.scalar(cp.mu);
  PeriodicField g(cp.grid, 4);
  for (int k = 0; k < d; ++k) {
    for (int l = k; l < d; ++l) {
      PeriodicField v = slice_kl(A.a, k, l);
      PeriodicField mv = v;
      for (int m = 0; m < d; ++m)
        for (std::size_t q = 0; q < N; ++q) mv.at(q, m) *= cp.mu.at(q, 0);
      PeriodicField U1 = cp.odd3.contract(mv);  // (j, i)
      PeriodicField U2 = cp.odd3.contract(v);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          int c4 = tidx(d, i, j, k, l);
          double tot = cp.even4.totals()[c4];
          double ct = ctilde(i, j, k, l);
          for (std::size_t q = 0; q < N; ++q) {
            double mq = cp.mu.at(q, 0);
            double T = 0.5 * Tm.at(q, c4) + 0.5 * mq * tot;
            double U = 0.5 * U1.at(q, j * d + i) + 0.5 * mq * U2.at(q, j * d + i);
            double val = ct * theta[q] - 0.5 * T + U;
            g.at(q, c4) = val;
            g.at(q, tidx(d, i, j, l, k)) = val;
          }
        }
      }
    }
  }
  return g;
}

CorrectorB assemble_g_and_solve_B(const CellProblem& cp, const CorrectorA& A, const Tensor4& ctilde,
                                  const CellSolveOptions& opt) {
  const int d = cp.dim();
  CorrectorB B;
  B.tol = opt.tol;
  B.g = assemble_g(cp, A, ctilde);
  for (double v : mean(B.g)) B.g_max_mean = std::max(B.g_max_mean, std::fabs(v));
  B.b = PeriodicField(cp.grid, 4);
  PeriodicField Ginv = cp.op.block_inverses(std::vector<double>(cp.grid.size(), 0.0), 1.0);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      for (int l = k; l < d; ++l) {
        PeriodicField rhs(cp.grid, 1);
        for (int i = 0; i < d; ++i)
          for (std::size_t q = 0; q < cp.grid.size(); ++q) rhs.at(q, i) = B.g.at(q, tidx(d, i, j, k, l));
        PeriodicField x;
        int it;
        double res;
        solve_mean_zero(cp, rhs, opt, Ginv, x, it, res, "second cell problem");
        for (int m = 0; m < d; ++m)
          for (std::size_t q = 0; q < cp.grid.size(); ++q) {
            B.b.at(q, tidx(d, m, j, k, l)) = x.at(q, m);
            B.b.at(q, tidx(d, m, j, l, k)) = x.at(q, m);
          }
        B.iterations.push_back(it);
        B.residuals.push_back(res);
      }
    }
  }
  return B;
}

DiagnosticReport check_phi_constant(const CellProblem& cp, const CorrectorA& A, const CorrectorB& B,
                                    const Tensor4& ctilde, const std::vector<double>& M,
                                    const std::vector<std::size_t>& nodes, const Point& x) {
  const int d = cp.dim();
  if (static_cast<int>(M.size()) != d * d * d) throw ArgumentError("check_phi_constant: M must be d^3");
  DiagnosticReport rep;
  double mn = tensor_norm(M);
  if (mn == 0.0) return rep;
  const std::size_t N = cp.grid.size();
  PeriodicField aM(cp.grid, 2);  // (m, j) = sum_kl a^{mkl} M_jkl
  PeriodicField bM(cp.grid, 1);  // m = sum_jkl b^{mjkl} M_jkl
  for (std::size_t q = 0; q < N; ++q) {
    for (int m = 0; m < d; ++m) {
      double sb = 0.0;
      for (int j = 0; j < d; ++j) {
        double sa = 0.0;
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) {
            double Mv = M[tidx(d, j, k, l)];
            sa += A.a.at(q, tidx(d, m, k, l)) * Mv;
            sb += B.b.at(q, tidx(d, m, j, k, l)) * Mv;
          }
        aM.at(q, m * d + j) = sa;
      }
      bM.at(q, m) = sb;
    }
  }
  const double mil = mean_inverse_lambda1(cp);
  const double lam0 = cp.model.lambda0(x);
  std::vector<double> pred(d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) pred[i] += lam0 / mil * ctilde(i, j, k, l) * M[tidx(d, j, k, l)];

  OffsetTable T(cp.lattice);
  for (std::size_t xi : nodes) {
    double phi[3] = {0.0, 0.0, 0.0};
    double mx = cp.mu.at(xi, 0);
    for (std::size_t k = 0; k < T.size(); ++k) {
      std::size_t y = shifted(cp.grid, xi, T.n[k]);
      const Point& z = T.z[k];
      double ms = 0.5 * (mx + cp.mu.at(y, 0));
      double zM = 0.0;
      for (int j = 0; j < d; ++j)
        for (int kk = 0; kk < d; ++kk)
          for (int l = 0; l < d; ++l) zM += z[j] * z[kk] * z[l] * M[tidx(d, j, kk, l)];
      double t = 0.5 * zM;
      for (int m = 0; m < d; ++m) {
        for (int j = 0; j < d; ++j) t -= z[j] * z[m] * aM.at(y, m * d + j);
        t += z[m] * (bM.at(y, m) - bM.at(xi, m));
      }
      double s = T.w[k] * ms * t * T.inv_r2[k];
      for (int i = 0; i < d; ++i) phi[i] += s * z[i];
    }
    double lam = lam0 * cp.lambda1.at(xi, 0);
    for (int i = 0; i < d; ++i) {
      double v = std::fabs(lam * phi[i] - pred[i]) / mn;
      if (v > rep.max_residual) {
        rep.max_residual = v;
        rep.worst_node = xi;
      }
    }
  }
  return rep;
}

}  // namespace perihom
