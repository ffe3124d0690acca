#include "perihom/operators.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "perihom/errors.hpp"
#include "perihom/tensor.hpp"

namespace perihom {

namespace {

template <int D>
void block_stats(const PeriodicField& G, double& gamma, double& max_norm) {
  gamma = 1e300;
  max_norm = 0.0;
  for (std::size_t q = 0; q < G.nodes(); ++q) {
    Eigen::Matrix<double, D, D> M;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) M(i, j) = G.at(q, i * D + j);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, D, D>> es(M, Eigen::EigenvaluesOnly);
    gamma = std::min(gamma, es.eigenvalues()(0));
    max_norm = std::max(max_norm, std::fabs(es.eigenvalues()(D - 1)));
    max_norm = std::max(max_norm, std::fabs(es.eigenvalues()(0)));
  }
}

void fill_stats(GMultiplier& g) {
  switch (g.grid.dim) {
    case 1: block_stats<1>(g.values, g.gamma, g.max_norm); break;
    case 2: block_stats<2>(g.values, g.gamma, g.max_norm); break;
    default: block_stats<3>(g.values, g.gamma, g.max_norm); break;
  }
}

template <int D>
PeriodicField invert_blocks(const PeriodicField& G, const std::vector<double>& shift, double scale) {
  PeriodicField out(G.grid(), 2);
  for (std::size_t q = 0; q < G.nodes(); ++q) {
    Eigen::Matrix<double, D, D> M;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) M(i, j) = scale * G.at(q, i * D + j) + (i == j ? shift[q] : 0.0);
    Eigen::Matrix<double, D, D> inv = M.inverse();
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) out.at(q, i * D + j) = inv(i, j);
  }
  return out;
}

}  // namespace

GMultiplier assemble_G(const LatticeKernel& kernel, const PeriodicField& mu) {
  const TorusGrid& grid = mu.grid();
  if (kernel.dim != grid.dim || mu.rank() != 0) throw ArgumentError("assemble_G: shape mismatch");
  const int d = grid.dim;
  std::vector<std::array<double, 9>> E(kernel.size());
  for (std::size_t k = 0; k < kernel.size(); ++k) {
    Point z = kernel.z(k);
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += z[i] * z[i];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) E[k][i * d + j] = kernel.weights[k] * z[i] * z[j] / r2;
  }
  GMultiplier g;
  g.grid = grid;
  g.values = PeriodicField(grid, 2);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    auto qi = grid.index(q);
    double mq = mu.at(q, 0);
    double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    for (std::size_t k = 0; k < kernel.size(); ++k) {
      std::array<int, 3> yi{qi[0] - kernel.offsets[k][0], qi[1] - kernel.offsets[k][1],
                            qi[2] - kernel.offsets[k][2]};
      double ms = 0.5 * (mq + mu.at(grid.node(yi), 0));
      for (int c = 0; c < d * d; ++c) acc[c] += E[k][c] * ms;
    }
    for (int c = 0; c < d * d; ++c) g.values.at(q, c) = acc[c];
  }
  fill_stats(g);
  return g;
}

GMultiplier assemble_G(const KernelSpec& spec, const CoefficientModel& model, const TorusGrid& grid,
                       const QuadratureConfig& quad) {
  LatticeKernel lk = discretize_kernel(spec, grid.spacing(), quad);
  return assemble_G(lk, sample_scalar(grid, [&](const Point& y) { return model.mu(y); }));
}

NonlocalOperator::NonlocalOperator(const LatticeKernel& kernel, const PeriodicField& mu, int shells)
    : lattice_(kernel), mu_(mu) {
  if (mu.rank() != 0) throw ArgumentError("mu must be a scalar field");
  if (kernel.dim != mu.grid().dim) throw ArgumentError("kernel and grid dimension differ");
  kernel_ = build_periodized_kernel(kernel, mu.grid(), shells);
  spectral_ = SpectralKernel(kernel_.weights);
  const int d = grid().dim;
  G_.grid = grid();
  G_.values = spectral_.scalar(mu_);
  for (int c = 0; c < d * d; ++c) {
    double* p = G_.values.component(c);
    double tot = spectral_.totals()[c];
    for (std::size_t q = 0; q < mu_.nodes(); ++q) p[q] = 0.5 * p[q] + 0.5 * mu_.at(q, 0) * tot;
  }
  fill_stats(G_);
}

PeriodicField NonlocalOperator::apply_K(const PeriodicField& psi) const {
  if (!(psi.grid() == grid()) || psi.rank() != 1) throw ArgumentError("apply_K: grid mismatch");
  PeriodicField mpsi = psi;
  for (int c = 0; c < psi.components(); ++c) {
    double* p = mpsi.component(c);
    for (std::size_t q = 0; q < psi.nodes(); ++q) p[q] *= mu_.at(q, 0);
  }
  PeriodicField a = spectral_.contract(mpsi);
  PeriodicField b = spectral_.contract(psi);
  for (int c = 0; c < a.components(); ++c) {
    double* pa = a.component(c);
    const double* pb = b.component(c);
    for (std::size_t q = 0; q < a.nodes(); ++q) pa[q] = 0.5 * pa[q] + 0.5 * mu_.at(q, 0) * pb[q];
  }
  return a;
}

PeriodicField apply_blocks(const PeriodicField& B, const PeriodicField& v) {
  if (!(B.grid() == v.grid()) || B.rank() != 2 || v.rank() != 1)
    throw ArgumentError("apply_blocks: shape mismatch");
  const int d = v.grid().dim;
  PeriodicField out(v.grid(), 1);
  for (int i = 0; i < d; ++i) {
    double* po = out.component(i);
    for (int j = 0; j < d; ++j) {
      const double* pb = B.component(i * d + j);
      const double* pv = v.component(j);
      for (std::size_t q = 0; q < v.nodes(); ++q) po[q] += pb[q] * pv[q];
    }
  }
  return out;
}

PeriodicField NonlocalOperator::apply_G(const PeriodicField& psi) const {
  return apply_blocks(G_.values, psi);
}

PeriodicField NonlocalOperator::apply_KminusG(const PeriodicField& psi) const {
  return apply_K(psi) - apply_G(psi);
}

PeriodicField NonlocalOperator::block_inverses(const std::vector<double>& shift, double scale) const {
  switch (grid().dim) {
    case 1: return invert_blocks<1>(G_.values, shift, scale);
    case 2: return invert_blocks<2>(G_.values, shift, scale);
    default: return invert_blocks<3>(G_.values, shift, scale);
  }
}

PeriodicField apply_K(const NonlocalOperator& op, const PeriodicField& psi) { return op.apply_K(psi); }

PeriodicField apply_KminusG(const NonlocalOperator& op, const PeriodicField& psi) {
  return op.apply_KminusG(psi);
}

void check_scaled_grid(double eps, const TorusGrid& box) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ArgumentError("eps must lie in (0, 1]");
  double cells = box.length / eps;
  if (std::fabs(cells - std::round(cells)) > 1e-9 * cells) {
    std::ostringstream os;
    os << "box length " << box.length << " is not an integer multiple of eps " << eps;
    throw ArgumentError(os.str());
  }
  double per_cell = box.n * eps / box.length;
  if (per_cell < 8.0 - 1e-9) {
    std::ostringstream os;
    os << "grid does not resolve eps: " << per_cell << " nodes per eps-cell (need >= 8)";
    throw ArgumentError(os.str());
  }
}

LatticeKernel ScaledOperator::lattice_for(const KernelSpec& spec, double eps, const TorusGrid& box,
                                          const QuadratureConfig& quad, const LatticeKernel* cached) {
  check_scaled_grid(eps, box);
  if (spec.dim != box.dim) throw ArgumentError("kernel and box dimension differ");
  double s = box.spacing() / eps;
  if (cached && cached->dim == box.dim && std::fabs(cached->spacing - s) <= 1e-12 * s) return *cached;
  return discretize_kernel(spec, s, quad);
}

ScaledOperator::ScaledOperator(const KernelSpec& spec, const CoefficientModel& model, double eps,
                               const TorusGrid& box, const QuadratureConfig& quad, const LatticeKernel* cached)
    : eps_(eps),
      op_(lattice_for(spec, eps, box, quad, cached), sample_scalar(box, [&](const Point& x) {
            Point y{x[0] / eps, x[1] / eps, x[2] / eps};
            return model.mu(y);
          })) {
  lambda_ = sample_scalar(box, [&](const Point& x) {
    Point y{x[0] / eps, x[1] / eps, x[2] / eps};
    return model.lambda0(x) * model.lambda1(y);
  });
}

PeriodicField ScaledOperator::apply(const PeriodicField& u) const {
  PeriodicField out = op_.apply_KminusG(u);
  const double s = 1.0 / (eps_ * eps_);
  for (int c = 0; c < out.components(); ++c) {
    double* p = out.component(c);
    for (std::size_t q = 0; q < out.nodes(); ++q) p[q] *= s * lambda_.at(q, 0);
  }
  return out;
}

PeriodicField apply_Leps(const ScaledOperator& op, const PeriodicField& u) { return op.apply(u); }

nlohmann::json ResolventReport::to_json() const {
  return {{"m", m}, {"eps", eps}, {"iterations", iterations}, {"residual", residual}, {"norm_ratio", norm_ratio}};
}

ResolventReport resolvent_solve(const ScaledOperator& op, double m, const PeriodicField& f, double tol,
                                int max_iter) {
  if (!(m > 0.0)) throw ArgumentError("resolvent_solve: m must be positive");
  if (!(f.grid() == op.grid()) || f.rank() != 1) throw ArgumentError("resolvent_solve: grid mismatch");
  for (double v : f.data())
    if (!std::isfinite(v)) throw ArgumentError("resolvent_solve: f is not finite");
  ResolventReport rep;
  rep.m = m;
  rep.eps = op.eps();
  rep.u = PeriodicField(f.grid(), 1);
  const double fn = norm(f);
  if (fn == 0.0) return rep;

  const std::size_t n = f.nodes();
  const PeriodicField& lam = op.lambda();
  const double s = 1.0 / (op.eps() * op.eps());
  std::vector<double> mnu(n);
  for (std::size_t q = 0; q < n; ++q) mnu[q] = m / lam.at(q, 0);
  PeriodicField Pinv = op.nonlocal().block_inverses(mnu, s);

  FieldMap A = [&](const PeriodicField& v) {
    PeriodicField out = op.nonlocal().apply_KminusG(v);
    for (int c = 0; c < out.components(); ++c) {
      double* po = out.component(c);
      const double* pv = v.component(c);
      for (std::size_t q = 0; q < n; ++q) po[q] = mnu[q] * pv[q] - s * po[q];
    }
    return out;
  };
  FieldMap P = [&](const PeriodicField& r) { return apply_blocks(Pinv, r); };
  PeriodicField b = f;
  for (int c = 0; c < b.components(); ++c) {
    double* p = b.component(c);
    for (std::size_t q = 0; q < n; ++q) p[q] /= lam.at(q, 0);
  }
  auto measure = [&](const PeriodicField& r) {
    PeriodicField t = r;
    for (int c = 0; c < t.components(); ++c) {
      double* p = t.component(c);
      for (std::size_t q = 0; q < n; ++q) p[q] *= lam.at(q, 0);
    }
    return norm(t) / fn;
  };
  CgResult cg = conjugate_gradient(A, P, b, rep.u, measure, tol, max_iter, false);
  rep.iterations = cg.iterations;
  rep.history = cg.history;
  PeriodicField Lu = op.apply(rep.u);
  PeriodicField res = f - (m * rep.u - Lu);
  rep.residual = norm(res) / fn;
  rep.norm_ratio = norm(rep.u) / fn;
  return rep;
}

}  // namespace perihom
