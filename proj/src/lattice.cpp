#include "perihom/lattice.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "perihom/errors.hpp"

namespace perihom {

int LatticeKernel::max_offset() const {
  int m = 0;
  for (const auto& o : offsets)
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(o[i]));
  return m;
}

LatticeKernel discretize_kernel(const KernelSpec& spec, double spacing, const QuadratureConfig& quad) {
  spec.validate();
  if (!(spacing > 0.0)) throw ArgumentError("lattice spacing must be positive");
  const int d = spec.dim;
  const double R = spec.truncation_radius();
  const int K = static_cast<int>(std::ceil(R / spacing)) + 1;
  const int width = 2 * K + 1;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= width;

  std::vector<double> acc(total, 0.0);
  double m0 = 0.0;
  std::array<double, 9> m2{};
  auto flat = [&](const std::array<int, 3>& n) {
    int f = 0;
    for (int i = 0; i < d; ++i) f = f * width + (n[i] + K);
    return f;
  };

  const int depth = quad.depth_for(d);
  int cells = 1;
  for (int i = 0; i < d; ++i) cells *= width - 1;
  for (int t = 0; t < cells; ++t) {
    std::array<int, 3> c{0, 0, 0};
    int r = t;
    for (int i = d - 1; i >= 0; --i) {
      c[i] = r % (width - 1) - K;
      r /= width - 1;
    }
    Point lo{0.0, 0.0, 0.0}, hi{0.0, 0.0, 0.0};
    for (int i = 0; i < d; ++i) {
      lo[i] = c[i] * spacing;
      hi[i] = (c[i] + 1) * spacing;
    }
    if (spec.classify(lo, hi) == BoxClass::Zero) continue;
    integrate_kernel_box(spec, lo, hi, depth, quad.smooth_points, [&](const Point& z, double w) {
      m0 += w;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m2[i * d + j] += w * z[i] * z[j];
      double tt[3];
      for (int i = 0; i < d; ++i) tt[i] = (z[i] - lo[i]) / spacing;
      for (int corner = 0; corner < (1 << d); ++corner) {
        double hat = 1.0;
        std::array<int, 3> n = c;
        for (int i = 0; i < d; ++i) {
          if (corner & (1 << i)) {
            hat *= tt[i];
            n[i] += 1;
          } else {
            hat *= 1.0 - tt[i];
          }
        }
        acc[flat(n)] += w * hat;
      }
    });
  }
  if (!(m0 > 0.0)) throw ValidationError("degenerate kernel: a1 = 0");

  LatticeKernel lk;
  lk.dim = d;
  lk.spacing = spacing;
  lk.a1 = m0;
  lk.second_moment = m2;
  for (int i = 0; i < d; ++i) lk.a2 += m2[i * d + i];

  for (int t = 0; t < total; ++t) {
    std::array<int, 3> n{0, 0, 0};
    int r = t;
    for (int i = d - 1; i >= 0; --i) {
      n[i] = r % width - K;
      r /= width;
    }
    std::array<int, 3> mn{-n[0], -n[1], -n[2]};
    double w = 0.5 * (acc[t] + acc[flat(mn)]);
    bool origin = n[0] == 0 && n[1] == 0 && n[2] == 0;
    if (w > 0.0 && !origin) {
      lk.offsets.push_back(n);
      lk.weights.push_back(w);
    }
  }
  if (lk.weights.empty()) throw AccuracyError("kernel support not resolved by the lattice spacing");

  // Moment fit by exponential tilting: weights w exp(c + z.Bz) reproduce a1 and
  // the second moments while staying positive. Newton on (c, upper(B)).
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) pairs.emplace_back(a, b);
  const int p = static_cast<int>(pairs.size());
  Eigen::VectorXd rhs(1 + p);
  rhs(0) = m0;
  for (int q = 0; q < p; ++q) rhs(1 + q) = m2[pairs[q].first * d + pairs[q].second];
  const std::size_t nw = lk.size();
  std::vector<Eigen::VectorXd> test(nw, Eigen::VectorXd(1 + p)), basis(nw, Eigen::VectorXd(1 + p));
  for (std::size_t k = 0; k < nw; ++k) {
    Point z = lk.z(k);
    test[k](0) = basis[k](0) = 1.0;
    for (int q = 0; q < p; ++q) {
      auto [a, b] = pairs[q];
      test[k](1 + q) = z[a] * z[b];
      basis[k](1 + q) = (a == b ? 1.0 : 2.0) * z[a] * z[b];
    }
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1 + p);
  std::vector<double> factor(nw, 1.0);
  auto residual_of = [&](const Eigen::VectorXd& th, std::vector<double>& f) {
    Eigen::VectorXd r = -rhs;
    for (std::size_t k = 0; k < nw; ++k) {
      f[k] = std::exp(th.dot(basis[k]));
      r += lk.weights[k] * f[k] * test[k];
    }
    return r;
  };
  const double scale = rhs.cwiseAbs().maxCoeff();
  Eigen::VectorXd res = residual_of(theta, factor);
  bool converged = false;
  for (int it = 0; it < 50 && !converged; ++it) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(1 + p, 1 + p);
    for (std::size_t k = 0; k < nw; ++k) J += lk.weights[k] * factor[k] * test[k] * basis[k].transpose();
    Eigen::VectorXd step = J.colPivHouseholderQr().solve(-res);
    // Backtrack until the residual norm decreases.
    double t = 1.0;
    std::vector<double> trial_f(nw);
    Eigen::VectorXd trial;
    for (int bt = 0; bt < 30; ++bt, t *= 0.5) {
      trial = residual_of(theta + t * step, trial_f);
      if (trial.norm() < res.norm() || trial.norm() <= 1e-13 * scale) break;
    }
    theta += t * step;
    factor.swap(trial_f);
    res = trial;
    converged = res.norm() <= 1e-13 * scale;
  }
  if (!converged) {
    std::ostringstream os;
    os << "kernel under-resolved at spacing " << spacing << ": moment fit did not converge (residual "
       << res.norm() / scale << ")";
    throw AccuracyError(os.str());
  }
  lk.fit_min = *std::min_element(factor.begin(), factor.end());
  lk.fit_max = *std::max_element(factor.begin(), factor.end());
  for (std::size_t k = 0; k < nw; ++k) lk.weights[k] *= factor[k];
  return lk;
}

}  // namespace perihom
