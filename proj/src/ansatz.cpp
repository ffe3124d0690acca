#include "perihom/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perihom/errors.hpp"
#include "perihom/localsolver.hpp"

namespace perihom {

PeriodicField TestFunction::sample(const TorusGrid& grid) const {
  PeriodicField f(grid, 1);
  double v[3];
  for (std::size_t q = 0; q < grid.size(); ++q) {
    eval(grid.coord(q), v);
    for (int i = 0; i < grid.dim; ++i) f.at(q, i) = v[i];
  }
  return f;
}

std::vector<TestFunction> test_function_library(int dim, double L) {
  const double k = 2.0 * std::numbers::pi / L;
  const int d = dim;
  std::vector<TestFunction> lib;
  lib.push_back({"trig-shear", [=](const Point& x, double* u) {
                   for (int i = 0; i < d; ++i) u[i] = std::sin(k * x[(i + 1) % d]);
                 }});
  lib.push_back({"trig-diagonal", [=](const Point& x, double* u) {
                   double c = std::cos(k * (x[0] + x[d - 1]));
                   for (int i = 0; i < d; ++i) u[i] = i == 0 ? c : 0.5 * c;
                 }});
  lib.push_back({"trig-product", [=](const Point& x, double* u) {
                   u[0] = std::sin(k * x[0]) * std::cos(k * x[d - 1]);
                   for (int i = 1; i < d; ++i) u[i] = std::cos(k * x[0]);
                 }});
  lib.push_back({"gaussian-bump", [=](const Point& x, double* u) {
                   // Periodized Gaussian centred in the box; two image shells
                   // leave a tail below 1e-30.
                   const double sigma = 0.25 * L;
                   double g = 1.0;
                   for (int a = 0; a < d; ++a) {
                     double s = 0.0;
                     for (int img = -2; img <= 2; ++img) {
                       double t = x[a] - 0.5 * L + img * L;
                       s += std::exp(-t * t / (2.0 * sigma * sigma));
                     }
                     g *= s;
                   }
                   for (int i = 0; i < d; ++i) u[i] = (i == 0 ? 1.0 : -0.5) * g;
                 }});
  return lib;
}

TestFunction constant_test_function(int dim, double value) {
  return {"constant", [=](const Point&, double* u) {
            for (int i = 0; i < dim; ++i) u[i] = value;
          }};
}

namespace {

// Periodic trigonometric interpolation weight for an even number of samples.
double dirichlet(int n, double t) {
  double s = std::sin(std::numbers::pi * t);
  if (std::fabs(s) < 1e-14) return 1.0;
  return std::sin(std::numbers::pi * n * t) / (n * std::tan(std::numbers::pi * t));
}

// Resample along one axis of a row-major array; shape is updated in place.
std::vector<double> resample_axis(const std::vector<double>& in, std::vector<int>& shape, int axis,
                                  const std::vector<double>& W, int n_out) {
  const int n_in = shape[axis];
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  std::vector<double> out(outer * n_out * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (int i = 0; i < n_out; ++i) {
      double* dst = out.data() + (o * n_out + i) * inner;
      for (int j = 0; j < n_in; ++j) {
        double w = W[static_cast<std::size_t>(i) * n_in + j];
        const double* src = in.data() + (o * n_in + j) * inner;
        for (std::size_t t = 0; t < inner; ++t) dst[t] += w * src[t];
      }
    }
  shape[axis] = n_out;
  return out;
}

double outer_band_fraction(const PeriodicField& f) {
  const TorusGrid& g = f.grid();
  const FftPlan& plan = FftPlan::get(g.dim, g.n);
  std::vector<std::complex<double>> fh(plan.spectral_size());
  double total = 0.0, tail = 0.0;
  for (int c = 0; c < f.components(); ++c) {
    plan.forward(f.component(c), fh.data());
    for (std::size_t s = 0; s < fh.size(); ++s) {
      auto kv = plan.wavenumber(s);
      double e = std::norm(fh[s]);
      total += e;
      for (int a = 0; a < g.dim; ++a)
        if (4 * std::abs(kv[a]) > g.n) {
          tail += e;
          break;
        }
    }
  }
  return total > 0.0 ? std::sqrt(tail / total) : 0.0;
}

}  // namespace

FastFieldSample sample_fast_field(const PeriodicField& cell_field, double eps, const TorusGrid& box) {
  const TorusGrid& cg = cell_field.grid();
  if (cg.dim != box.dim) throw ArgumentError("sample_fast_field: dimension mismatch");
  if (!(eps > 0.0)) throw ArgumentError("sample_fast_field: eps must be positive");
  double periods = box.length / eps;
  if (std::fabs(periods - std::round(periods)) > 1e-9 * std::max(1.0, periods))
    throw ArgumentError("sample_fast_field: box length must be an integer multiple of eps");
  const int d = box.dim;
  FastFieldSample out;
  out.values = PeriodicField(box, cell_field.rank());
  // Cell nodes advanced per box node.
  double ratio = box.length * cg.n / (box.n * eps);
  long step = std::lround(ratio);
  if (step >= 1 && std::fabs(ratio - step) < 1e-9) {
    for (std::size_t q = 0; q < box.size(); ++q) {
      auto idx = box.index(q);
      std::array<int, 3> ci{};
      for (int a = 0; a < d; ++a) ci[a] = static_cast<int>((idx[a] * step) % cg.n);
      std::size_t cq = cg.node(ci);
      for (int c = 0; c < cell_field.components(); ++c) out.values.at(q, c) = cell_field.at(cq, c);
    }
    return out;
  }
  out.interpolated = true;
  out.interpolation_tail = outer_band_fraction(cell_field);
  std::vector<double> W(static_cast<std::size_t>(box.n) * cg.n);
  for (int i = 0; i < box.n; ++i) {
    double y = i * box.spacing() / eps;  // cell units
    for (int j = 0; j < cg.n; ++j) W[static_cast<std::size_t>(i) * cg.n + j] = dirichlet(cg.n, y - double(j) / cg.n);
  }
  for (int c = 0; c < cell_field.components(); ++c) {
    std::vector<double> v(cell_field.component(c), cell_field.component(c) + cg.size());
    std::vector<int> shape(d, cg.n);
    for (int a = 0; a < d; ++a) v = resample_axis(v, shape, a, W, box.n);
    std::copy(v.begin(), v.end(), out.values.component(c));
  }
  return out;
}

AnsatzField build_ansatz(const PeriodicField& u, const PeriodicField& A, const PeriodicField& B, double eps) {
  if (u.rank() != 1) throw ArgumentError("build_ansatz expects a vector field");
  const TorusGrid& box = u.grid();
  const int d = box.dim;
  const std::size_t N = box.size();
  AnsatzField af;
  af.u = u;
  af.w = u;
  af.eps = eps;
  if (A.nodes() > 0) {
    if (A.rank() != 3) throw ArgumentError("build_ansatz: A must have rank 3");
    FastFieldSample As = sample_fast_field(A, eps, box);
    af.interpolated |= As.interpolated;
    af.interpolation_tail = std::max(af.interpolation_tail, As.interpolation_tail);
    PeriodicField Du = gradient(u);
    for (int m = 0; m < d; ++m)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          const double* a = As.values.component(tidx(d, m, k, l));
          const double* g = Du.component(tidx(d, k, l));
          double* w = af.w.component(m);
          for (std::size_t q = 0; q < N; ++q) w[q] += eps * a[q] * g[q];
        }
  }
  if (B.nodes() > 0) {
    if (B.rank() != 4) throw ArgumentError("build_ansatz: B must have rank 4");
    FastFieldSample Bs = sample_fast_field(B, eps, box);
    af.interpolated |= Bs.interpolated;
    af.interpolation_tail = std::max(af.interpolation_tail, Bs.interpolation_tail);
    PeriodicField H = hessian(u);
    const double e2 = eps * eps;
    for (int m = 0; m < d; ++m)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) {
            const double* b = Bs.values.component(tidx(d, m, j, k, l));
            // third-order slot (j, k, l) = d_j d_l u_k
            const double* h = H.component(tidx(d, k, j, l));
            double* w = af.w.component(m);
            for (std::size_t q = 0; q < N; ++q) w[q] += e2 * b[q] * h[q];
          }
  }
  return af;
}

PeriodicField psi_residual(const CellProblem& cp, const CellDataH& H, const CorrectorA& A) {
  const int d = cp.dim();
  PeriodicField psi(cp.grid, 3);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      PeriodicField a(cp.grid, 1);
      for (int i = 0; i < d; ++i)
        std::copy_n(A.a.component(tidx(d, i, k, l)), cp.grid.size(), a.component(i));
      PeriodicField r = cp.op.apply_KminusG(a);
      for (int i = 0; i < d; ++i) {
        const double* h = H.h.component(tidx(d, i, k, l));
        double* dst = psi.component(tidx(d, i, k, l));
        for (std::size_t q = 0; q < cp.grid.size(); ++q) dst[q] = r.at(q, i) - h[q];
      }
    }
  return psi;
}

ConsistencyResult consistency_residual(const ScaledOperator& op, const PeriodicField& A, const PeriodicField& B,
                                       const EffectiveTensor& ceff, const PeriodicField& u,
                                       const PeriodicField& psi) {
  if (!(op.grid() == u.grid())) throw ArgumentError("consistency_residual: u must live on the operator grid");
  const double eps = op.eps();
  AnsatzField af = build_ansatz(u, A, B, eps);
  PeriodicField diff = op.apply(af.w);
  PeriodicField target = apply_L0(ceff, u);
  diff -= target;
  ConsistencyResult res;
  res.residual = norm(diff);
  res.reference = norm(target);
  res.relative_residual = res.reference > 0.0 ? res.residual / res.reference : 0.0;
  res.interpolated = af.interpolated;
  if (psi.nodes() > 0) {
    const TorusGrid& box = u.grid();
    const int d = box.dim;
    FastFieldSample ps = sample_fast_field(psi, eps, box);
    PeriodicField Du = gradient(u);
    PeriodicField term(box, 1);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          for (std::size_t q = 0; q < box.size(); ++q)
            term.at(q, i) += ps.values.at(q, tidx(d, i, k, l)) * Du.at(q, tidx(d, k, l));
    for (int i = 0; i < d; ++i)
      for (std::size_t q = 0; q < box.size(); ++q) term.at(q, i) *= op.lambda().at(q, 0) / eps;
    res.psi_term = norm(term);
  }
  return res;
}

}  // namespace perihom
