#include "perihom/krylov.hpp"

#include <cmath>
#include <sstream>

#include "perihom/errors.hpp"

namespace perihom {

namespace {

void project(PeriodicField& v, bool on) {
  if (on) v = project_mean_zero(v);
}

double dot(const PeriodicField& a, const PeriodicField& b) {
  double s = 0.0;
  const auto& x = a.data();
  const auto& y = b.data();
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

void axpy(double alpha, const PeriodicField& x, PeriodicField& y) {
  auto& yd = y.data();
  const auto& xd = x.data();
  for (std::size_t k = 0; k < yd.size(); ++k) yd[k] += alpha * xd[k];
}

}  // namespace

CgResult conjugate_gradient(const FieldMap& A, const FieldMap& P, const PeriodicField& b_in,
                            PeriodicField& x, const std::function<double(const PeriodicField&)>& measure,
                            double tol, int max_iter, bool mean_zero) {
  CgResult res;
  PeriodicField b = b_in;
  project(b, mean_zero);
  project(x, mean_zero);
  PeriodicField r = b - A(x);
  project(r, mean_zero);
  double rm = measure(r);
  res.history.push_back(rm);
  res.residual = rm;
  if (rm <= tol) return res;
  PeriodicField z = P(r);
  project(z, mean_zero);
  PeriodicField p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    PeriodicField Ap = A(p);
    project(Ap, mean_zero);
    double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      res.iterations = it;
      throw ConvergenceError("CG breakdown: operator not positive on the search direction", res.history);
    }
    double alpha = rz / pAp;
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    project(x, mean_zero);
    project(r, mean_zero);
    rm = measure(r);
    res.history.push_back(rm);
    res.residual = rm;
    res.iterations = it;
    if (rm <= tol) return res;
    z = P(r);
    project(z, mean_zero);
    double rz_new = dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < p.data().size(); ++k) p.data()[k] = z.data()[k] + beta * p.data()[k];
    project(p, mean_zero);
  }
  std::ostringstream os;
  os << "CG did not reach tolerance " << tol << " in " << max_iter << " iterations (residual " << rm << ")";
  throw ConvergenceError(os.str(), res.history);
}

}  // namespace perihom
