#include "perihom/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "perihom/errors.hpp"
#include "perihom/expr.hpp"

namespace perihom {

namespace {

constexpr double kPi = std::numbers::pi;

double ball_volume(int d, double r) {
  switch (d) {
    case 1: return 2.0 * r;
    case 2: return kPi * r * r;
    default: return 4.0 / 3.0 * kPi * r * r * r;
  }
}

// Fraction of directions inside the double cone |w.axis| > 1 - aperture.
double cone_fraction(int d, double aperture) {
  if (d == 1) return 1.0;
  double c = 1.0 - aperture;
  if (d == 2) return 2.0 * std::acos(c) / kPi;
  return aperture;
}

double norm(const Point& z, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += z[i] * z[i];
  return std::sqrt(s);
}

void box_distances(const Point& lo, const Point& hi, int d, double& dmin, double& dmax) {
  double smin = 0.0, smax = 0.0;
  for (int i = 0; i < d; ++i) {
    double c = std::clamp(0.0, lo[i], hi[i]);
    smin += c * c;
    double m = std::max(lo[i] * lo[i], hi[i] * hi[i]);
    smax += m;
  }
  dmin = std::sqrt(smin);
  dmax = std::sqrt(smax);
}

struct GaussRule {
  std::vector<double> x, w;  // on [0, 1]
};

const GaussRule& gauss_rule(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double pn = n == 1 ? t : p1;
      double pm = n == 1 ? 1.0 : p0;
      dp = n * (t * pn - pm) / (t * t - 1.0);
      double dt = pn / dp;
      t -= dt;
      if (std::fabs(dt) < 1e-16) break;
    }
    r.x[i] = 0.5 * (1.0 - t);
    r.w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

void gauss_box(const KernelSpec& spec, const Point& lo, const Point& hi, int n, bool constant,
               const std::function<void(const Point&, double)>& visit) {
  const GaussRule& g = gauss_rule(n);
  int d = spec.dim;
  double vol = 1.0;
  for (int i = 0; i < d; ++i) vol *= hi[i] - lo[i];
  double amp = constant ? spec.amplitude_value() : 0.0;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  for (int t = 0; t < total; ++t) {
    Point z{0.0, 0.0, 0.0};
    double w = vol;
    int r = t;
    for (int i = 0; i < d; ++i) {
      int q = r % n;
      r /= n;
      z[i] = lo[i] + (hi[i] - lo[i]) * g.x[q];
      w *= g.w[q];
    }
    double rho = constant ? amp : spec(z);
    if (rho != 0.0) visit(z, w * rho);
  }
}

void integrate_rec(const KernelSpec& spec, const Point& lo, const Point& hi, int depth,
                   int smooth_points, const std::function<void(const Point&, double)>& visit) {
  BoxClass cls = spec.classify(lo, hi);
  switch (cls) {
    case BoxClass::Zero: return;
    case BoxClass::Constant: gauss_box(spec, lo, hi, 2, true, visit); return;
    case BoxClass::Smooth: gauss_box(spec, lo, hi, smooth_points, false, visit); return;
    case BoxClass::Cut: break;
  }
  if (depth <= 0) {
    gauss_box(spec, lo, hi, 2, false, visit);
    return;
  }
  int d = spec.dim;
  for (int c = 0; c < (1 << d); ++c) {
    Point a = lo, b = hi;
    for (int i = 0; i < d; ++i) {
      double mid = 0.5 * (lo[i] + hi[i]);
      if (c & (1 << i)) a[i] = mid;
      else b[i] = mid;
    }
    integrate_rec(spec, a, b, depth - 1, smooth_points, visit);
  }
}

}  // namespace

KernelSpec KernelSpec::indicator(int dim, double radius, std::optional<double> amplitude) {
  KernelSpec s;
  s.family = KernelFamily::RadialIndicator;
  s.dim = dim;
  s.radius = radius;
  s.amplitude = amplitude;
  return s;
}

KernelSpec KernelSpec::gaussian(int dim, double width, std::optional<double> amplitude) {
  KernelSpec s;
  s.family = KernelFamily::RadialGaussian;
  s.dim = dim;
  s.radius = width;
  s.amplitude = amplitude;
  return s;
}

KernelSpec KernelSpec::cone(int dim, double radius, Point axis, double aperture,
                            std::optional<double> amplitude) {
  KernelSpec s;
  s.family = KernelFamily::ConeIndicator;
  s.dim = dim;
  s.radius = radius;
  double n = norm(axis, dim);
  if (!(n > 0.0)) throw ArgumentError("cone axis must be nonzero");
  for (int i = 0; i < 3; ++i) s.axis[i] = i < dim ? axis[i] / n : 0.0;
  s.aperture = aperture;
  s.amplitude = amplitude;
  return s;
}

KernelSpec KernelSpec::from_callable(int dim, double truncation,
                                     std::function<double(const Point&)> fn) {
  KernelSpec s;
  s.family = KernelFamily::Custom;
  s.dim = dim;
  s.radius = truncation;
  s.truncation = truncation;
  s.amplitude = 1.0;
  s.custom = std::move(fn);
  return s;
}

void KernelSpec::validate() const {
  if (dim < 1 || dim > 3) throw ArgumentError("dimension must be 1, 2 or 3");
  if (!(radius > 0.0)) throw ArgumentError("kernel radius/width must be positive");
  if (family == KernelFamily::ConeIndicator && !(aperture > 0.0 && aperture < 1.0))
    throw ArgumentError("cone aperture must lie in (0, 1)");
  if (family == KernelFamily::Custom && !custom) throw ArgumentError("custom kernel without callable");
  if (truncation && !(*truncation > 0.0)) throw ArgumentError("truncation radius must be positive");
}

double KernelSpec::amplitude_value() const {
  if (amplitude) return *amplitude;
  double a1_amp = 1.0;
  double r2 = 0.0;  // a2 / a1 for the family
  switch (family) {
    case KernelFamily::RadialIndicator:
      a1_amp = 1.0 / ball_volume(dim, radius);
      r2 = dim * radius * radius / (dim + 2.0);
      break;
    case KernelFamily::RadialGaussian:
      a1_amp = 1.0 / std::pow(std::sqrt(kPi) * radius, dim);
      r2 = 0.5 * dim * radius * radius;
      break;
    case KernelFamily::ConeIndicator:
      a1_amp = 1.0 / (cone_fraction(dim, aperture) * ball_volume(dim, radius));
      r2 = dim * radius * radius / (dim + 2.0);
      break;
    case KernelFamily::Custom: return 1.0;
  }
  return normalize == Normalization::SecondMoment ? a1_amp / r2 : a1_amp;
}

double KernelSpec::truncation_radius() const {
  if (truncation) return *truncation;
  return family == KernelFamily::RadialGaussian ? 6.0 * radius : radius;
}

double KernelSpec::operator()(const Point& z) const {
  double r = norm(z, dim);
  switch (family) {
    case KernelFamily::RadialIndicator: return r <= radius ? amplitude_value() : 0.0;
    case KernelFamily::RadialGaussian: return amplitude_value() * std::exp(-(r * r) / (radius * radius));
    case KernelFamily::ConeIndicator: {
      if (r > radius || r == 0.0) return 0.0;
      double p = 0.0;
      for (int i = 0; i < dim; ++i) p += z[i] * axis[i];
      return std::fabs(p) > (1.0 - aperture) * r ? amplitude_value() : 0.0;
    }
    case KernelFamily::Custom: return custom(z);
  }
  return 0.0;
}

BoxClass KernelSpec::classify(const Point& lo, const Point& hi) const {
  double dmin, dmax;
  box_distances(lo, hi, dim, dmin, dmax);
  switch (family) {
    case KernelFamily::RadialIndicator:
      if (dmin >= radius) return BoxClass::Zero;
      return dmax <= radius ? BoxClass::Constant : BoxClass::Cut;
    case KernelFamily::RadialGaussian:
      return dmin >= truncation_radius() ? BoxClass::Zero : BoxClass::Smooth;
    case KernelFamily::ConeIndicator: {
      if (dmin >= radius) return BoxClass::Zero;
      if (dim == 1) return dmax <= radius && dmin > 0.0 ? BoxClass::Constant : BoxClass::Cut;
      if (dmin == 0.0) return BoxClass::Cut;
      double pmin = 1e300, pmax = -1e300;
      for (int c = 0; c < (1 << dim); ++c) {
        double p = 0.0;
        for (int i = 0; i < dim; ++i) p += ((c >> i) & 1 ? hi[i] : lo[i]) * axis[i];
        pmin = std::min(pmin, p);
        pmax = std::max(pmax, p);
      }
      double amax = std::max(std::fabs(pmin), std::fabs(pmax));
      double amin = (pmin > 0.0 || pmax < 0.0) ? std::min(std::fabs(pmin), std::fabs(pmax)) : 0.0;
      double c = 1.0 - aperture;
      if (amax <= c * dmin) return BoxClass::Zero;
      if (amin > c * dmax && dmax <= radius) return BoxClass::Constant;
      return BoxClass::Cut;
    }
    case KernelFamily::Custom: {
      if (dmin >= truncation_radius()) return BoxClass::Zero;
      int total = 1;
      for (int i = 0; i < dim; ++i) total *= 3;
      // Treated as piecewise smooth: only boxes straddling the support edge are cut.
      int zeros = 0;
      for (int t = 0; t < total; ++t) {
        Point z{0.0, 0.0, 0.0};
        int r = t;
        for (int i = 0; i < dim; ++i) {
          z[i] = lo[i] + 0.5 * (r % 3) * (hi[i] - lo[i]);
          r /= 3;
        }
        if (custom(z) == 0.0) ++zeros;
      }
      if (zeros == total) return BoxClass::Zero;
      return zeros == 0 ? BoxClass::Smooth : BoxClass::Cut;
    }
  }
  return BoxClass::Cut;
}

KernelSpec KernelSpec::scaled(double eps) const {
  if (!(eps > 0.0)) throw ArgumentError("eps must be positive");
  KernelSpec s = *this;
  double jac = std::pow(eps, -dim);
  s.radius = radius * eps;
  if (truncation) s.truncation = *truncation * eps;
  if (family == KernelFamily::Custom) {
    auto base = custom;
    int d = dim;
    s.custom = [base, eps, jac, d](const Point& z) {
      Point y{0.0, 0.0, 0.0};
      for (int i = 0; i < d; ++i) y[i] = z[i] / eps;
      return jac * base(y);
    };
  } else {
    s.amplitude = jac * amplitude_value();
  }
  return s;
}

std::optional<std::pair<double, double>> closed_form_moments(const KernelSpec& spec) {
  double A = spec.amplitude_value();
  int d = spec.dim;
  double r = spec.radius;
  switch (spec.family) {
    case KernelFamily::RadialIndicator: {
      double a1 = A * ball_volume(d, r);
      return std::make_pair(a1, a1 * d * r * r / (d + 2.0));
    }
    case KernelFamily::ConeIndicator: {
      double a1 = A * ball_volume(d, r) * cone_fraction(d, spec.aperture);
      return std::make_pair(a1, a1 * d * r * r / (d + 2.0));
    }
    case KernelFamily::RadialGaussian: {
      double a1 = A * std::pow(std::sqrt(kPi) * r, d);
      return std::make_pair(a1, a1 * d * r * r / 2.0);
    }
    case KernelFamily::Custom: return std::nullopt;
  }
  return std::nullopt;
}

void integrate_kernel_box(const KernelSpec& spec, const Point& lo, const Point& hi, int depth,
                          int smooth_points, const std::function<void(const Point&, double)>& visit) {
  integrate_rec(spec, lo, hi, depth, smooth_points, visit);
}

namespace {

MomentReport moments_at(const KernelSpec& spec, int cells, int depth, int smooth_points) {
  int d = spec.dim;
  double R = spec.truncation_radius();
  double step = 2.0 * R / cells;
  MomentReport rep;
  double a1 = 0.0, a2 = 0.0;
  std::array<double, 9> m2{};
  auto visit = [&](const Point& z, double w) {
    a1 += w;
    for (int i = 0; i < d; ++i) {
      a2 += w * z[i] * z[i];
      for (int j = 0; j < d; ++j) m2[i * d + j] += w * z[i] * z[j];
    }
  };
  int total = 1;
  for (int i = 0; i < d; ++i) total *= cells;
  for (int t = 0; t < total; ++t) {
    Point lo{0.0, 0.0, 0.0}, hi{0.0, 0.0, 0.0};
    int r = t;
    for (int i = 0; i < d; ++i) {
      int c = r % cells;
      r /= cells;
      lo[i] = -R + c * step;
      hi[i] = -R + (c + 1) * step;
    }
    integrate_rec(spec, lo, hi, depth, smooth_points, visit);
  }
  rep.a1 = a1;
  rep.a2 = a2;
  rep.second_moment = m2;
  return rep;
}

}  // namespace

MomentReport kernel_moments(const KernelSpec& spec, const QuadratureConfig& quad) {
  spec.validate();
  if (quad.cells_per_axis <= 0) throw ArgumentError("quadrature resolution must be positive");
  int cells = spec.dim == 3 ? std::min(quad.cells_per_axis, 16) : quad.cells_per_axis;
  int depth = quad.depth_for(spec.dim);
  MomentReport fine = moments_at(spec, cells, depth, quad.smooth_points);
  if (!(fine.a1 > 0.0)) throw ValidationError("degenerate kernel: a1 = 0");
  MomentReport coarse =
      moments_at(spec, cells, std::max(depth - 2, 0), std::max(quad.smooth_points - 2, 2));
  double e1 = std::fabs(fine.a1 - coarse.a1) / fine.a1;
  double e2 = fine.a2 > 0.0 ? std::fabs(fine.a2 - coarse.a2) / fine.a2 : 0.0;
  fine.quadrature_error_estimate = std::max(e1, e2);
  if (!std::isfinite(fine.a2)) throw ValidationError("kernel second moment is not finite");
  if (fine.quadrature_error_estimate > quad.tolerance) {
    std::ostringstream os;
    os << "kernel moment quadrature not converged: estimate " << fine.quadrature_error_estimate
       << " > tolerance " << quad.tolerance;
    throw AccuracyError(os.str());
  }
  return fine;
}

double rho_eps(const KernelSpec& spec, double eps, const Point& z) {
  if (!(eps > 0.0)) throw ArgumentError("rho_eps: eps must be positive");
  Point y{0.0, 0.0, 0.0};
  for (int i = 0; i < spec.dim; ++i) y[i] = z[i] / eps;
  return std::pow(eps, -spec.dim) * spec(y);
}

ScalarField::ScalarField()
    : fn_([](const Point&) { return 1.0; }), description_({{"kind", "constant"}, {"value", 1.0}}), constant_(true) {}

ScalarField ScalarField::constant(double value) {
  ScalarField f;
  f.fn_ = [value](const Point&) { return value; };
  f.description_ = {{"kind", "constant"}, {"value", value}};
  f.constant_ = true;
  return f;
}

ScalarField ScalarField::from_function(std::function<double(const Point&)> fn,
                                       nlohmann::json description) {
  ScalarField f;
  f.fn_ = std::move(fn);
  f.description_ = std::move(description);
  f.constant_ = false;
  return f;
}

ScalarField ScalarField::from_json(const nlohmann::json& j, const std::string& var, int dim,
                                   double period) {
  if (j.is_number()) return constant(j.get<double>());
  std::string kind = j.value("kind", "constant");
  if (kind == "constant") return constant(j.at("value").get<double>());
  if (kind == "cosine" || kind == "cosine-product") {
    double mean = j.value("mean", 0.0);
    double amp = j.value("amplitude", 1.0);
    double phase = j.value("phase", 0.0);
    std::vector<double> k = j.value("wavevector", std::vector<double>{});
    if (k.empty()) {
      k.assign(dim, 0.0);
      k[0] = 1.0;
      if (kind == "cosine-product") k.assign(dim, 1.0);
    }
    if (static_cast<int>(k.size()) != dim) throw ValidationError("wavevector length != dimension");
    double w = 2.0 * kPi / period;
    std::function<double(const Point&)> fn;
    if (kind == "cosine") {
      fn = [=](const Point& p) {
        double arg = phase;
        for (int i = 0; i < dim; ++i) arg += w * k[i] * p[i];
        return mean + amp * std::cos(arg);
      };
    } else {
      fn = [=](const Point& p) {
        double prod = 1.0;
        for (int i = 0; i < dim; ++i) prod *= std::cos(w * k[i] * p[i] + (i == 0 ? phase : 0.0));
        return mean + amp * prod;
      };
    }
    return from_function(fn, j);
  }
  if (kind == "expr") {
    std::vector<std::string> names;
    for (int i = 0; i < dim; ++i) names.push_back(var + std::to_string(i + 1));
    auto e = std::make_shared<Expression>(j.at("expr").get<std::string>(), names,
                                          std::map<std::string, double>{{"L", period}});
    return from_function(
        [e, dim](const Point& p) { return e->evaluate(std::span<const double>(p.data(), dim)); }, j);
  }
  throw ValidationError("unknown coefficient kind '" + kind + "'");
}

double mu_sym(const CoefficientModel& model, const Point& x, const Point& y) {
  return 0.5 * (model.mu(x) + model.mu(y));
}

ModelConfig parse_model_config(const nlohmann::json& j, double box_length) {
  ModelConfig cfg;
  cfg.source = j;
  int dim = j.value("dimension", 2);
  if (dim < 1 || dim > 3) throw ValidationError("dimension must be 1, 2 or 3");
  const auto& k = j.at("kernel");
  std::string family = k.at("family").get<std::string>();
  std::optional<double> amp;
  if (k.contains("amplitude")) amp = k.at("amplitude").get<double>();
  if (family == "radial-indicator") {
    cfg.kernel = KernelSpec::indicator(dim, k.at("radius").get<double>(), amp);
  } else if (family == "radial-gaussian") {
    cfg.kernel = KernelSpec::gaussian(dim, k.at("width").get<double>(), amp);
  } else if (family == "cone-restricted") {
    std::vector<double> ax = k.value("axis", std::vector<double>{1.0, 0.0, 0.0});
    Point a{0.0, 0.0, 0.0};
    for (int i = 0; i < dim && i < static_cast<int>(ax.size()); ++i) a[i] = ax[i];
    cfg.kernel = KernelSpec::cone(dim, k.at("radius").get<double>(), a, k.value("aperture", 0.5), amp);
  } else {
    throw ValidationError("unknown kernel family '" + family + "'");
  }
  if (k.contains("truncation")) cfg.kernel.truncation = k.at("truncation").get<double>();
  std::string norm = k.value("normalize", "a1");
  if (norm == "a2") {
    cfg.kernel.normalize = Normalization::SecondMoment;
  } else if (norm != "a1") {
    throw ValidationError("kernel normalize must be \"a1\" or \"a2\"");
  }
  cfg.kernel.validate();

  CoefficientModel& m = cfg.coefficients;
  m.dim = dim;
  m.box_length = box_length;
  m.mu = j.contains("mu") ? ScalarField::from_json(j.at("mu"), "y", dim, 1.0) : ScalarField::constant(1.0);
  m.lambda1 = j.contains("lambda1") ? ScalarField::from_json(j.at("lambda1"), "y", dim, 1.0)
                                    : ScalarField::constant(1.0);
  m.lambda0 = j.contains("lambda0") ? ScalarField::from_json(j.at("lambda0"), "x", dim, box_length)
                                    : ScalarField::constant(1.0);
  m.alpha1 = j.value("alpha1", 1.0);
  m.alpha2 = j.value("alpha2", 1.0);
  if (!(m.alpha1 > 0.0) || m.alpha2 < m.alpha1) throw ValidationError("need 0 < alpha1 <= alpha2");
  return cfg;
}

nlohmann::json kernel_to_json(const KernelSpec& spec) {
  nlohmann::json j;
  switch (spec.family) {
    case KernelFamily::RadialIndicator:
      j = {{"family", "radial-indicator"}, {"radius", spec.radius}};
      break;
    case KernelFamily::RadialGaussian:
      j = {{"family", "radial-gaussian"}, {"width", spec.radius}};
      break;
    case KernelFamily::ConeIndicator:
      j = {{"family", "cone-restricted"},
           {"radius", spec.radius},
           {"axis", std::vector<double>(spec.axis.begin(), spec.axis.begin() + spec.dim)},
           {"aperture", spec.aperture}};
      break;
    case KernelFamily::Custom:
      j = {{"family", "custom"}, {"truncation", spec.truncation_radius()}};
      break;
  }
  if (spec.amplitude) j["amplitude"] = *spec.amplitude;
  if (spec.normalize == Normalization::SecondMoment) j["normalize"] = "a2";
  if (spec.truncation && spec.family != KernelFamily::Custom) j["truncation"] = *spec.truncation;
  return j;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e = {{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}};
    if (!c.witness.empty()) e["witness"] = c.witness;
    arr.push_back(e);
  }
  return {{"passed", passed()}, {"checks", arr}};
}

namespace {

std::vector<double> as_vec(const Point& p, int d) { return {p.begin(), p.begin() + d}; }

std::vector<Point> grid_points(int d, int n, double lo, double hi) {
  std::vector<Point> pts;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  for (int t = 0; t < total; ++t) {
    Point p{0.0, 0.0, 0.0};
    int r = t;
    for (int i = 0; i < d; ++i) {
      p[i] = n == 1 ? lo : lo + (hi - lo) * (r % n) / (n - 1);
      r /= n;
    }
    pts.push_back(p);
  }
  return pts;
}

std::vector<Point> torus_points(int d, int n, double length, std::mt19937_64& rng, int extra) {
  std::vector<Point> pts;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  for (int t = 0; t < total; ++t) {
    Point p{0.0, 0.0, 0.0};
    int r = t;
    for (int i = 0; i < d; ++i) {
      p[i] = length * (r % n) / n;
      r /= n;
    }
    pts.push_back(p);
  }
  std::uniform_real_distribution<double> u(0.0, length);
  for (int e = 0; e < extra; ++e) {
    Point p{0.0, 0.0, 0.0};
    for (int i = 0; i < d; ++i) p[i] = u(rng);
    pts.push_back(p);
  }
  return pts;
}

std::vector<Point> unit_directions(int d, int count, std::mt19937_64& rng) {
  std::vector<Point> dirs;
  std::normal_distribution<double> g(0.0, 1.0);
  if (d == 1) return {Point{1.0, 0.0, 0.0}, Point{-1.0, 0.0, 0.0}};
  for (int c = 0; c < count; ++c) {
    Point p{0.0, 0.0, 0.0};
    double n = 0.0;
    while (n < 1e-12) {
      for (int i = 0; i < d; ++i) p[i] = g(rng);
      n = norm(p, d);
    }
    for (int i = 0; i < d; ++i) p[i] /= n;
    dirs.push_back(p);
  }
  return dirs;
}

}  // namespace

ValidationReport validate_assumptions(const KernelSpec& spec, const CoefficientModel& model,
                                      const SampleConfig& samples) {
  if (samples.grid_per_axis <= 0 || samples.random_points < 0 || samples.directions <= 0)
    throw ArgumentError("sample counts must be positive");
  int d = spec.dim;
  ValidationReport rep;
  std::mt19937_64 rng(samples.seed);
  double R = spec.truncation_radius();

  // Symmetric sample set for the kernel: odd grid through the origin plus random pairs.
  int n = samples.grid_per_axis | 1;
  std::vector<Point> zs = grid_points(d, n, -R, R);
  std::uniform_real_distribution<double> uz(-R, R);
  for (int k = 0; k < samples.random_points; ++k) {
    Point p{0.0, 0.0, 0.0};
    for (int i = 0; i < d; ++i) p[i] = uz(rng);
    zs.push_back(p);
  }

  ValidationCheck nonneg{"kernel_nonnegative", true, "", {}};
  ValidationCheck even{"kernel_even", true, "", {}};
  for (const Point& z : zs) {
    Point mz{-z[0], -z[1], -z[2]};
    double a = spec(z), b = spec(mz);
    if (nonneg.passed && a < 0.0) {
      nonneg.passed = false;
      nonneg.witness = as_vec(z, d);
      nonneg.detail = "rho(z) < 0";
    }
    if (even.passed && a != b) {
      even.passed = false;
      even.witness = as_vec(z, d);
      std::ostringstream os;
      os << "rho(z) = " << a << " but rho(-z) = " << b;
      even.detail = os.str();
    }
  }
  rep.checks.push_back(nonneg);
  rep.checks.push_back(even);

  ValidationCheck mom{"kernel_moments", true, "", {}};
  try {
    MomentReport m = kernel_moments(spec);
    std::ostringstream os;
    os << "a1 = " << m.a1 << ", a2 = " << m.a2;
    mom.detail = os.str();
    mom.passed = m.a1 > 0.0 && std::isfinite(m.a2);
  } catch (const std::exception& e) {
    mom.passed = false;
    mom.detail = e.what();
  }
  rep.checks.push_back(mom);

  // Directions w with rho(t w) > 0 for all sampled t in (0, delta0].
  double delta0 = samples.delta0 > 0.0 ? samples.delta0 : 0.25 * R;
  ValidationCheck cover{"cone_coverage", true, "", {}};
  std::vector<Point> dirs = unit_directions(d, samples.directions, rng);
  int covered = 0;
  for (const Point& w : dirs) {
    bool all = true;
    for (int s = 1; s <= 8; ++s) {
      double t = delta0 * s / 8.0;
      Point z{t * w[0], t * w[1], t * w[2]};
      if (!(spec(z) > 0.0)) all = false;
      if (spec.family == KernelFamily::ConeIndicator && spec(z) > 0.0) {
        double p = 0.0;
        for (int i = 0; i < d; ++i) p += w[i] * spec.axis[i];
        if (!(std::fabs(p) > 1.0 - spec.aperture) && cover.passed) {
          cover.passed = false;
          cover.witness = as_vec(z, d);
          cover.detail = "support point outside the declared cone";
        }
      }
    }
    if (all) ++covered;
  }
  double frac = static_cast<double>(covered) / dirs.size();
  if (covered == 0 && cover.passed) {
    cover.passed = false;
    cover.detail = "no sampled direction carries support near the origin";
  }
  if (cover.passed) {
    std::ostringstream os;
    os << "covered direction fraction " << frac << " within radius " << delta0;
    cover.detail = os.str();
  }
  rep.checks.push_back(cover);

  std::vector<Point> ys = torus_points(d, samples.grid_per_axis, 1.0, rng, samples.random_points);
  std::vector<Point> xs =
      torus_points(d, samples.grid_per_axis, model.box_length, rng, samples.random_points / 4);

  auto bound_check = [&](const std::string& name, const std::function<double(const Point&, const Point&)>& f,
                         bool uses_x) {
    ValidationCheck c{name, true, "", {}};
    double lo = 1e300, hi = -1e300;
    const std::vector<Point> one{Point{0.0, 0.0, 0.0}};
    for (const Point& x : uses_x ? xs : one) {
      for (const Point& y : ys) {
        double v = f(x, y);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (c.passed && !(v >= model.alpha1 && v <= model.alpha2)) {
          c.passed = false;
          c.witness = as_vec(y, d);
          if (uses_x) {
            auto xv = as_vec(x, d);
            c.witness.insert(c.witness.begin(), xv.begin(), xv.end());
          }
          std::ostringstream os;
          os << "value " << v << " outside [" << model.alpha1 << ", " << model.alpha2 << "]";
          c.detail = os.str();
        }
      }
    }
    if (c.passed) {
      std::ostringstream os;
      os << "sampled range [" << lo << ", " << hi << "]";
      c.detail = os.str();
    }
    rep.checks.push_back(c);
  };
  bound_check("mu_bounds", [&](const Point&, const Point& y) { return model.mu(y); }, false);
  bound_check("lambda_bounds", [&](const Point& x, const Point& y) { return model.lambda(x, y); }, true);

  auto periodic_check = [&](const std::string& name, const ScalarField& f) {
    ValidationCheck c{name, true, "", {}};
    for (const Point& y : ys) {
      for (int i = 0; i < d && c.passed; ++i) {
        Point s = y;
        s[i] += 1.0;
        double a = f(y), b = f(s);
        if (std::fabs(a - b) > 1e-12 * std::max(1.0, std::fabs(a))) {
          c.passed = false;
          c.witness = as_vec(y, d);
          std::ostringstream os;
          os << "f(y) = " << a << " but f(y + e" << i + 1 << ") = " << b;
          c.detail = os.str();
        }
      }
    }
    rep.checks.push_back(c);
  };
  periodic_check("mu_periodic", model.mu);
  periodic_check("lambda1_periodic", model.lambda1);
  return rep;
}

}  // namespace perihom
