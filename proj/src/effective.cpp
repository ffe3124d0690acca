#include "perihom/effective.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "perihom/errors.hpp"

namespace perihom {

namespace {

// Symmetric index pairs in Voigt order.
std::vector<std::pair<int, int>> voigt_pairs(int d) {
  if (d == 1) return {{0, 0}};
  if (d == 2) return {{0, 0}, {1, 1}, {0, 1}};
  return {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
}

// Fully minor-symmetrized entry.
double minor_sym(const Tensor4& C, int i, int j, int k, int l) {
  return 0.25 * (C(i, j, k, l) + C(j, i, k, l) + C(i, j, l, k) + C(j, i, l, k));
}

Eigen::MatrixXd mandel(const Tensor4& C) {
  auto pairs = voigt_pairs(C.d);
  const int n = static_cast<int>(pairs.size());
  Eigen::MatrixXd M(n, n);
  for (int I = 0; I < n; ++I) {
    for (int J = 0; J < n; ++J) {
      auto [i, j] = pairs[I];
      auto [k, l] = pairs[J];
      double s = (i == j ? 1.0 : std::numbers::sqrt2) * (k == l ? 1.0 : std::numbers::sqrt2);
      M(I, J) = s * minor_sym(C, i, j, k, l);
    }
  }
  return M;
}

// min over unit eta of <C xi(x)eta, xi(x)eta> for a fixed unit xi.
double lh_value(const Tensor4& C, const Eigen::VectorXd& xi, Eigen::VectorXd* eta = nullptr) {
  const int d = C.d;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) A(j, l) += C(i, j, k, l) * xi[i] * xi[k];
  Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (eta) *eta = es.eigenvectors().col(0);
  return es.eigenvalues()[0];
}

Eigen::VectorXd sphere_point(int d, double t, double p) {
  Eigen::VectorXd v(d);
  if (d == 1) {
    v[0] = 1.0;
  } else if (d == 2) {
    v << std::cos(t), std::sin(t);
  } else {
    v << std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t);
  }
  return v;
}

}  // namespace

double symmetry_violation(const Tensor4& C) {
  const int d = C.d;
  double m = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double c = C(i, j, k, l);
          m = std::max({m, std::fabs(c - C(k, l, i, j)), std::fabs(c - C(j, i, k, l)),
                        std::fabs(c - C(i, j, l, k))});
        }
  return m;
}

std::vector<double> mandel_matrix(const Tensor4& C) {
  Eigen::MatrixXd M = mandel(C);
  std::vector<double> out;
  for (int I = 0; I < M.rows(); ++I)
    for (int J = 0; J < M.cols(); ++J) out.push_back(M(I, J));
  return out;
}

std::vector<double> voigt_matrix(const Tensor4& C) {
  auto pairs = voigt_pairs(C.d);
  std::vector<double> out;
  for (auto [i, j] : pairs)
    for (auto [k, l] : pairs) out.push_back(C(i, j, k, l));
  return out;
}

Certificate certify_elasticity(const Tensor4& C, const CertifyOptions& opt) {
  const int d = C.d;
  Certificate cert;
  cert.symmetry_max_violation = symmetry_violation(C);
  cert.voigt = voigt_matrix(C);

  Eigen::MatrixXd M = mandel(C);
  Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  cert.gamma1 = es.eigenvalues()[0];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  cert.gamma2 = svd.singularValues()[0];

  // Sampled Rayleigh quotients, a cross-check on the exact value.
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  const int n = static_cast<int>(M.rows());
  cert.gamma1_sampled = std::numeric_limits<double>::infinity();
  for (int s = 0; s < opt.random_w; ++s) {
    Eigen::VectorXd w(n);
    for (int I = 0; I < n; ++I) w[I] = normal(rng);
    cert.gamma1_sampled = std::min(cert.gamma1_sampled, w.dot(S * w) / w.squaredNorm());
  }

  // Legendre-Hadamard: the inner minimum over eta is an eigenproblem, so only
  // xi is sampled, then refined by shrinking coordinate search.
  double best = std::numeric_limits<double>::infinity();
  double bt = 0.0, bp = 0.0;
  const int samples = std::max(opt.lh_samples, 1);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int s = 0; s < samples; ++s) {
    double t, p = 0.0;
    if (d == 3) {
      // Fibonacci sphere, upper hemisphere suffices since xi and -xi agree.
      double z = 1.0 - (s + 0.5) / samples;
      t = std::acos(z);
      p = golden * s;
    } else {
      t = std::numbers::pi * s / samples;
    }
    double v = lh_value(C, sphere_point(d, t, p));
    if (v < best) {
      best = v;
      bt = t;
      bp = p;
    }
  }
  if (d > 1) {
    double step = std::numbers::pi / samples * 4.0;
    while (step > 1e-12) {
      bool moved = false;
      for (int axis = 0; axis < (d == 3 ? 2 : 1); ++axis) {
        for (double sgn : {-1.0, 1.0}) {
          double t = bt + (axis == 0 ? sgn * step : 0.0);
          double p = bp + (axis == 1 ? sgn * step : 0.0);
          double v = lh_value(C, sphere_point(d, t, p));
          if (v < best) {
            best = v;
            bt = t;
            bp = p;
            moved = true;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
  }
  Eigen::VectorXd xi = sphere_point(d, bt, bp), eta;
  cert.lh_min = lh_value(C, xi, &eta);
  cert.lh_argmin.assign(xi.data(), xi.data() + d);
  cert.lh_argmin.insert(cert.lh_argmin.end(), eta.data(), eta.data() + d);
  return cert;
}

nlohmann::json Certificate::to_json() const {
  return {{"symmetry_max_violation", symmetry_max_violation},
          {"gamma1", gamma1},
          {"gamma1_sampled", gamma1_sampled},
          {"gamma2", gamma2},
          {"lh_min", lh_min},
          {"lh_argmin", lh_argmin},
          {"voigt", voigt}};
}

Tensor4 lame_closed_form(double a2, int d) {
  if (d < 1 || d > 3) throw ArgumentError("lame_closed_form: dimension must be 1, 2 or 3");
  if (!(a2 > 0.0)) throw ArgumentError("lame_closed_form: a2 must be positive");
  const double mu0 = a2 / (2.0 * d * (d + 2));
  Tensor4 C(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          C(i, j, k, l) = mu0 * ((i == j && k == l) + (i == k && j == l) + (i == l && j == k));
  return C;
}

double min_quartic_moment(const Tensor4& quartic) {
  Eigen::MatrixXd M = mandel(quartic);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  return es.eigenvalues()[0];
}

double harmonic_mean_factor(const CoefficientModel& model, const Point& x, int n) {
  TorusGrid cell(model.dim, n, 1.0);
  double s = 0.0;
  for (std::size_t q = 0; q < cell.size(); ++q) s += 1.0 / model.lambda(x, cell.coord(q));
  return static_cast<double>(cell.size()) / s;
}

Tensor4 effective_tensor(const CoefficientModel& model, const Tensor4& ctilde, const Point& x, int n) {
  return ctilde.scaled(harmonic_mean_factor(model, x, n));
}

PeriodicField lame_operator_apply(const PeriodicField& mu0, const PeriodicField& u) {
  if (!(mu0.grid() == u.grid())) throw ArgumentError("lame_operator_apply: grid mismatch");
  if (u.rank() != 1 || mu0.rank() != 0) throw ArgumentError("lame_operator_apply: expects scalar mu0 and vector u");
  const int d = u.grid().dim;
  PeriodicField H = hessian(u);
  PeriodicField out(u.grid(), 1);
  for (std::size_t q = 0; q < u.nodes(); ++q) {
    double m0 = mu0.at(q, 0);
    for (int i = 0; i < d; ++i) {
      double lap = 0.0, graddiv = 0.0;
      for (int j = 0; j < d; ++j) {
        lap += H.at(q, tidx(d, i, j, j));
        graddiv += H.at(q, tidx(d, j, i, j));
      }
      out.at(q, i) = m0 * (lap + 2.0 * graddiv);
    }
  }
  return out;
}

}  // namespace perihom
