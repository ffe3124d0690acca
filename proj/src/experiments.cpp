#include "perihom/experiments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "perihom/errors.hpp"

namespace perihom {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kModelKeys = {"dimension", "kernel", "mu", "lambda0", "lambda1", "alpha1", "alpha2"};
const std::set<std::string> kExperimentKeys = {"name",       "cell_n",         "box_length", "eps",
                                               "m",          "forcing",        "seed",       "property_n",
                                               "property_pairs", "tolerances", "quadrature"};

nlohmann::json tensor_json(const Tensor4& C) {
  return std::vector<double>(C.v.begin(), C.v.begin() + C.size());
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Deterministic node sample for the literal-sum diagnostics.
std::vector<std::size_t> sample_nodes(const TorusGrid& g, int count) {
  std::vector<std::size_t> nodes;
  std::size_t stride = std::max<std::size_t>(1, g.size() / count);
  for (std::size_t q = 0; q < g.size() && static_cast<int>(nodes.size()) < count; q += stride)
    nodes.push_back((q * 7919) % g.size());
  return nodes;
}

TorusGrid box_for(const ExperimentConfig& cfg, int cell_n, double eps) {
  double periods = cfg.box_length / eps;
  return TorusGrid(cfg.model.coefficients.dim, static_cast<int>(std::lround(cell_n * periods)), cfg.box_length);
}

const TestFunction& find_function(const std::vector<TestFunction>& lib, const std::string& name) {
  for (const auto& f : lib)
    if (f.name == name) return f;
  throw ValidationError("unknown forcing '" + name + "'");
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

nlohmann::json Tolerances::to_json() const {
  return {{"cell_cg", cell_cg},
          {"cell_max_iter", cell_max_iter},
          {"fredholm", fredholm},
          {"two_formula", two_formula},
          {"symmetry", symmetry},
          {"positivity_slack", positivity_slack},
          {"diagnostic", diagnostic},
          {"resolvent", resolvent},
          {"resolvent_max_iter", resolvent_max_iter},
          {"local", local},
          {"local_max_iter", local_max_iter},
          {"operator_property", operator_property},
          {"lame_relative", lame_relative},
          {"consistency_homogeneous", consistency_homogeneous}};
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = model_json;
  j["name"] = name;
  j["cell_n"] = cell_n;
  j["box_length"] = box_length;
  j["eps"] = eps;
  j["m"] = m;
  j["forcing"] = forcing;
  j["seed"] = seed;
  j["property_n"] = property_n;
  j["property_pairs"] = property_pairs;
  j["tolerances"] = tol.to_json();
  j["quadrature"] = {{"cells_per_axis", quad.cells_per_axis},
                     {"max_depth", quad.max_depth},
                     {"tolerance", quad.tolerance},
                     {"smooth_points", quad.smooth_points}};
  return j;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

bool ExperimentConfig::homogeneous() const {
  const auto& c = model.coefficients;
  return c.mu.is_constant() && c.lambda0.is_constant() && c.lambda1.is_constant();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  ExperimentConfig cfg;
  nlohmann::json model = nlohmann::json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (kModelKeys.count(it.key())) {
      model[it.key()] = it.value();
    } else if (!kExperimentKeys.count(it.key())) {
      throw ValidationError("unknown config key '" + it.key() + "'");
    }
  }
  if (!model.contains("kernel")) throw ValidationError("config needs a kernel");
  cfg.name = j.value("name", "config");
  cfg.box_length = j.value("box_length", 1.0);
  if (!(cfg.box_length > 0.0)) throw ValidationError("box_length must be positive");
  cfg.model = parse_model_config(model, cfg.box_length);
  // Fill defaults so the canonical form is explicit.
  model["dimension"] = cfg.model.coefficients.dim;
  model["kernel"] = kernel_to_json(cfg.model.kernel);
  model["mu"] = cfg.model.coefficients.mu.description();
  model["lambda0"] = cfg.model.coefficients.lambda0.description();
  model["lambda1"] = cfg.model.coefficients.lambda1.description();
  model["alpha1"] = cfg.model.coefficients.alpha1;
  model["alpha2"] = cfg.model.coefficients.alpha2;
  cfg.model_json = model;

  cfg.cell_n = j.value("cell_n", 64);
  if (cfg.cell_n < 4 || cfg.cell_n % 2) throw ValidationError("cell_n must be even and at least 4");
  if (j.contains("eps")) cfg.eps = j.at("eps").get<std::vector<double>>();
  if (cfg.eps.empty()) throw ValidationError("eps list is empty");
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    double e = cfg.eps[i];
    if (!(e > 0.0)) throw ValidationError("eps must be positive");
    if (i > 0 && !(e < cfg.eps[i - 1])) throw ValidationError("eps list must be strictly decreasing");
    double periods = cfg.box_length / e;
    if (std::fabs(periods - std::round(periods)) > 1e-9 * std::max(1.0, periods))
      throw ValidationError("box_length / eps must be an integer for eps = " + format_double(e));
  }
  cfg.m = j.value("m", 5.0);
  if (!(cfg.m > 0.0)) throw ValidationError("m must be positive");
  cfg.forcing = j.value("forcing", cfg.forcing);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.property_n = j.value("property_n", 16);
  cfg.property_pairs = j.value("property_pairs", 100);
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    Tolerances& T = cfg.tol;
    nlohmann::json known = T.to_json();
    for (auto it = t.begin(); it != t.end(); ++it)
      if (!known.contains(it.key())) throw ValidationError("unknown tolerance '" + it.key() + "'");
    T.cell_cg = t.value("cell_cg", T.cell_cg);
    T.cell_max_iter = t.value("cell_max_iter", T.cell_max_iter);
    T.fredholm = t.value("fredholm", T.fredholm);
    T.two_formula = t.value("two_formula", T.two_formula);
    T.symmetry = t.value("symmetry", T.symmetry);
    T.positivity_slack = t.value("positivity_slack", T.positivity_slack);
    T.diagnostic = t.value("diagnostic", T.diagnostic);
    T.resolvent = t.value("resolvent", T.resolvent);
    T.resolvent_max_iter = t.value("resolvent_max_iter", T.resolvent_max_iter);
    T.local = t.value("local", T.local);
    T.local_max_iter = t.value("local_max_iter", T.local_max_iter);
    T.operator_property = t.value("operator_property", T.operator_property);
    T.lame_relative = t.value("lame_relative", T.lame_relative);
    T.consistency_homogeneous = t.value("consistency_homogeneous", T.consistency_homogeneous);
  }
  if (j.contains("quadrature")) {
    const auto& q = j.at("quadrature");
    cfg.quad.cells_per_axis = q.value("cells_per_axis", cfg.quad.cells_per_axis);
    cfg.quad.max_depth = q.value("max_depth", cfg.quad.max_depth);
    cfg.quad.tolerance = q.value("tolerance", cfg.quad.tolerance);
    cfg.quad.smooth_points = q.value("smooth_points", cfg.quad.smooth_points);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_experiment_config(j);
}

std::vector<ExperimentConfig> default_matrix(int cell_n) {
  const double c30 = std::sqrt(3.0) / 2.0;
  std::vector<std::pair<std::string, nlohmann::json>> kernels = {
      {"indicator", {{"family", "radial-indicator"}, {"radius", 0.4}, {"normalize", "a2"}}},
      {"gaussian", {{"family", "radial-gaussian"}, {"width", 0.15}, {"normalize", "a2"}}},
      {"cone",
       {{"family", "cone-restricted"},
        {"radius", 0.4},
        {"axis", {c30, 0.5}},
        {"aperture", 0.5},
        {"normalize", "a2"}}}};
  std::vector<std::pair<std::string, nlohmann::json>> mus = {
      {"mu-const", {{"kind", "constant"}, {"value", 1.0}}},
      {"mu-cos", {{"kind", "cosine"}, {"mean", 2.0}, {"amplitude", 1.0}, {"wavevector", {1, 0}}}},
      {"mu-cosprod", {{"kind", "cosine-product"}, {"mean", 2.0}, {"amplitude", 1.0}, {"wavevector", {1, 1}}}}};
  std::vector<std::pair<std::string, nlohmann::json>> l1s = {
      {"l1-const", {{"kind", "constant"}, {"value", 1.0}}},
      {"l1-inv", {{"kind", "expr"}, {"expr", "1/(2+cos(2*pi*y1))"}}}};
  std::vector<std::pair<std::string, nlohmann::json>> l0s = {
      {"l0-const", {{"kind", "constant"}, {"value", 1.0}}},
      {"l0-sin", {{"kind", "expr"}, {"expr", "1+0.5*sin(2*pi*x1/L)"}}}};
  std::vector<ExperimentConfig> out;
  for (const auto& [kn, kj] : kernels)
    for (const auto& [mn, mj] : mus)
      for (const auto& [l1n, l1j] : l1s)
        for (const auto& [l0n, l0j] : l0s) {
          nlohmann::json j = {{"name", kn + "_" + mn + "_" + l1n + "_" + l0n},
                              {"dimension", 2},
                              {"kernel", kj},
                              {"mu", mj},
                              {"lambda1", l1j},
                              {"lambda0", l0j},
                              {"alpha1", 0.15},
                              {"alpha2", 3.0},
                              {"cell_n", cell_n},
                              {"box_length", 1.0},
                              {"eps", {0.5, 0.25, 0.125}},
                              {"m", 5.0}};
          out.push_back(parse_experiment_config(j));
        }
  return out;
}

ExperimentConfig default_homogeneous_config(int cell_n) { return default_matrix(cell_n).front(); }

void write_text_atomic(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw ArgumentError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, p);
}

void write_json_atomic(const std::string& path, const nlohmann::json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Operator structure suite

nlohmann::json OperatorSuiteReport::to_json() const {
  return {{"scale", scale},
          {"symmetry_max", symmetry_max},
          {"nonpositivity_max", nonpositivity_max},
          {"smallest_eigenvalues", smallest_eigenvalues},
          {"convolution_vs_direct", convolution_vs_direct},
          {"G_fft_vs_direct", G_fft_vs_direct},
          {"passed", passed}};
}

OperatorSuiteReport operator_property_suite(const KernelSpec& spec, const CoefficientModel& model, int n,
                                            int pairs, std::uint64_t seed, const Tolerances& tol,
                                            const QuadratureConfig& quad) {
  const int d = model.dim;
  if (d == 3) n = std::min(n, 8);  // keeps the dense eigenproblem small
  TorusGrid grid(d, n, 1.0);
  LatticeKernel lk = discretize_kernel(spec, grid.spacing(), quad);
  PeriodicField mu = sample_scalar(grid, [&](const Point& y) { return model.mu(y); });
  NonlocalOperator op(lk, mu);
  OperatorSuiteReport rep;
  rep.scale = op.G().max_norm;
  const double s = rep.scale;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto random_field = [&](int rank) {
    PeriodicField f(grid, rank);
    for (double& v : f.data()) v = normal(rng);
    return f;
  };
  for (int t = 0; t < pairs; ++t) {
    PeriodicField psi = random_field(1), phi = random_field(1);
    PeriodicField Apsi = op.apply_KminusG(psi), Aphi = op.apply_KminusG(phi);
    double np = norm(psi), nf = norm(phi);
    rep.symmetry_max = std::max(rep.symmetry_max, std::fabs(inner(Apsi, phi) - inner(psi, Aphi)) / (s * np * nf));
    rep.nonpositivity_max = std::max(rep.nonpositivity_max, inner(Apsi, psi) / (s * np * np));
  }

  // Dense -(K - G) / scale.
  const std::size_t N = grid.size();
  const std::size_t D = N * d;
  Eigen::MatrixXd M(D, D);
  PeriodicField e(grid, 1);
  for (std::size_t c = 0; c < D; ++c) {
    std::fill(e.data().begin(), e.data().end(), 0.0);
    e.data()[c] = 1.0;
    PeriodicField col = op.apply_KminusG(e);
    for (std::size_t r = 0; r < D; ++r) M(r, c) = -col.data()[r] / s;
  }
  Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  for (int i = 0; i <= d; ++i) rep.smallest_eigenvalues.push_back(es.eigenvalues()[i]);

  // Periodized convolution against the literal double sum.
  PeriodicField v = random_field(1);
  PeriodicField fft = periodic_convolve(op.kernel(), v);
  const PeriodicField& W = op.kernel().weights;
  double diff = 0.0, ref = 0.0;
  for (std::size_t q = 0; q < N; ++q) {
    auto qi = grid.index(q);
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t y = 0; y < N; ++y) {
        auto yi = grid.index(y);
        std::array<int, 3> r{};
        for (int a = 0; a < d; ++a) r[a] = qi[a] - yi[a];
        std::size_t ry = grid.node(r);
        for (int j = 0; j < d; ++j) acc += W.at(ry, tidx(d, i, j)) * v.at(y, j);
      }
      diff = std::max(diff, std::fabs(acc - fft.at(q, i)));
      ref = std::max(ref, std::fabs(acc));
    }
  }
  rep.convolution_vs_direct = ref > 0.0 ? diff / ref : diff;
  GMultiplier direct = assemble_G(lk, mu);
  double gd = 0.0;
  for (std::size_t k = 0; k < direct.values.data().size(); ++k)
    gd = std::max(gd, std::fabs(direct.values.data()[k] - op.G().values.data()[k]));
  rep.G_fft_vs_direct = gd / s;

  const double t = tol.operator_property;
  rep.passed = rep.symmetry_max <= t && rep.nonpositivity_max <= t && rep.convolution_vs_direct <= t &&
               rep.G_fft_vs_direct <= t;
  for (int i = 0; i < d; ++i) rep.passed = rep.passed && std::fabs(rep.smallest_eigenvalues[i]) <= t;
  // The (d+1)-th eigenvalue must be clear of round-off.
  rep.passed = rep.passed && rep.smallest_eigenvalues[d] > 1e3 * t;
  return rep;
}

RunResult run_validate(const ExperimentConfig& cfg) {
  RunResult r;
  SampleConfig samples;
  samples.seed = cfg.seed;
  ValidationReport vr = validate_assumptions(cfg.model.kernel, cfg.model.coefficients, samples);
  nlohmann::json suite;
  bool suite_ok = false;
  try {
    OperatorSuiteReport os = operator_property_suite(cfg.model.kernel, cfg.model.coefficients, cfg.property_n,
                                                     cfg.property_pairs, cfg.seed, cfg.tol, cfg.quad);
    suite = os.to_json();
    suite_ok = os.passed;
  } catch (const std::exception& e) {
    suite = {{"passed", false}, {"error", e.what()}};
  }
  r.passed = vr.passed() && suite_ok;
  r.report = {{"config", cfg.to_json()},
              {"config_hash", cfg.hash()},
              {"model_checks", vr.to_json()},
              {"operator_suite", suite},
              {"passed", r.passed}};
  return r;
}

// ---------------------------------------------------------------------------
// Cell problems and effective tensor

CellRun run_cell(const ExperimentConfig& cfg, int n, const std::string& cache_dir) {
  if (n <= 0) n = cfg.cell_n;
  CellRun run;
  run.cp = std::make_shared<CellProblem>(cfg.model.kernel, cfg.model.coefficients, n, cfg.quad);
  const CellProblem& cp = *run.cp;
  const int d = cp.dim();
  CellSolveOptions opt{cfg.tol.cell_cg, cfg.tol.cell_max_iter, cfg.tol.fredholm};

  run.H = assemble_h(cp);
  run.A = solve_cell_A(cp, run.H, opt);
  run.ctilde = compute_Ctilde(cp, run.A);
  run.B = assemble_g_and_solve_B(cp, run.A, run.ctilde.solvability, opt);

  const double scale = cp.op.G().max_norm;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  auto nodes = sample_nodes(cp.grid, 64);
  double psi = 0.0, phi = 0.0;
  for (int t = 0; t < 3; ++t) {
    std::vector<double> M(d * d), M3(d * d * d);
    for (double& v : M) v = normal(rng);
    for (double& v : M3) v = normal(rng);
    psi = std::max(psi, check_psi_zero(cp, run.A, M, nodes).max_residual);
    phi = std::max(phi, check_phi_constant(cp, run.A, run.B, run.ctilde.solvability, M3, nodes).max_residual);
  }
  psi /= scale;
  phi /= scale;
  double a_sym = 0.0;
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (std::size_t q = 0; q < cp.grid.size(); ++q)
          a_sym = std::max(a_sym, std::fabs(run.A.a.at(q, tidx(d, i, k, l)) - run.A.a.at(q, tidx(d, i, l, k))));
  const double h_bound = cfg.model.coefficients.alpha2 * std::sqrt(cp.lattice.a1 * cp.lattice.a2);
  const double cmax = run.ctilde.quadratic.max_abs();
  const double disc = run.ctilde.discrepancy / cmax;

  run.passed = run.H.max_mean <= cfg.tol.fredholm && run.B.g_max_mean <= cfg.tol.fredholm &&
               psi <= cfg.tol.diagnostic && phi <= cfg.tol.diagnostic && disc <= cfg.tol.two_formula &&
               run.H.max_norm <= h_bound;
  run.report = {{"config_hash", cfg.hash()},
                {"name", cfg.name},
                {"grid", n},
                {"lattice", {{"offsets", cp.lattice.size()}, {"a1", cp.lattice.a1}, {"a2", cp.lattice.a2}}},
                {"h", {{"max_mean", run.H.max_mean}, {"max_norm", run.H.max_norm}, {"bound", h_bound}}},
                {"A",
                 {{"iterations", run.A.iterations},
                  {"residuals", run.A.residuals},
                  {"max_abs", max_abs(run.A.a)},
                  {"symmetry", a_sym}}},
                {"B",
                 {{"g_max_mean", run.B.g_max_mean},
                  {"iterations", run.B.iterations},
                  {"max_abs", max_abs(run.B.b)}}},
                {"psi_residual", psi},
                {"phi_residual", phi},
                {"ctilde", run.ctilde.to_json()},
                {"relative_discrepancy", disc},
                {"passed", run.passed}};
  if (!cache_dir.empty()) {
    fs::create_directories(cache_dir);
    std::string stem = (fs::path(cache_dir) / (cfg.hash() + "-n" + std::to_string(n))).string();
    write_field(stem + "-A.bin", run.A.a);
    write_field(stem + "-B.bin", run.B.b);
  }
  return run;
}

EffectiveRun run_effective(const ExperimentConfig& cfg, const CellRun& cell) {
  const CellProblem& cp = *cell.cp;
  const int d = cp.dim();
  const CoefficientModel& model = cfg.model.coefficients;
  EffectiveRun run;
  const Tensor4& C = cell.ctilde.quadratic;
  run.ceff = EffectiveTensor{C, mean_inverse_lambda1(cp), model.lambda0};
  CertifyOptions copt;
  copt.seed = cfg.seed;
  run.certificate = certify_elasticity(C, copt);

  Tensor4 quartic(d);
  const auto& tot = cp.even4.totals();
  for (int k = 0; k < quartic.size(); ++k) quartic.v[k] = tot[k];
  const double qmin = min_quartic_moment(quartic);
  run.positivity_bound = 0.5 * model.alpha1 * qmin;

  const Tolerances& T = cfg.tol;
  const double cmax = C.max_abs();
  const double disc = cell.ctilde.discrepancy / cmax;
  bool ok = disc <= T.two_formula && run.certificate.symmetry_max_violation <= T.symmetry * cmax &&
            run.certificate.gamma1 > 0.0 && run.certificate.lh_min > 0.0 &&
            run.certificate.gamma1 >= run.positivity_bound - T.positivity_slack;

  // c(x) on a 4^d sample of the box.
  nlohmann::json samples = nlohmann::json::array();
  TorusGrid xs(d, 4, cfg.box_length);
  CertifyOptions xopt;
  xopt.lh_samples = 2000;
  xopt.random_w = 50;
  xopt.seed = cfg.seed;
  for (std::size_t q = 0; q < xs.size(); ++q) {
    Point x = xs.coord(q);
    double factor = run.ceff.factor(x);
    Certificate cx = certify_elasticity(run.ceff.at(x), xopt);
    bool pass = cx.symmetry_max_violation <= T.symmetry * cmax * factor && cx.gamma1 > 0.0 &&
                cx.gamma1 >= factor * run.positivity_bound - T.positivity_slack;
    ok = ok && pass;
    samples.push_back({{"x", std::vector<double>(x.begin(), x.begin() + d)},
                       {"factor", factor},
                       {"gamma1", cx.gamma1},
                       {"lh_min", cx.lh_min},
                       {"symmetry_max_violation", cx.symmetry_max_violation},
                       {"passed", pass}});
  }

  run.report = {{"config_hash", cfg.hash()},
                {"name", cfg.name},
                {"grid", cp.grid.n},
                {"ctilde", cell.ctilde.to_json()},
                {"canonical", "quadratic"},
                {"relative_discrepancy", disc},
                {"voigt", voigt_matrix(C)},
                {"certificate", run.certificate.to_json()},
                {"quartic_moment_min", qmin},
                {"positivity_bound", run.positivity_bound},
                {"mean_inverse_lambda1", run.ceff.mean_inverse_lambda1},
                {"samples", samples}};
  const bool radial = cfg.model.kernel.family == KernelFamily::RadialIndicator ||
                      cfg.model.kernel.family == KernelFamily::RadialGaussian;
  if (radial && cfg.homogeneous()) {
    Tensor4 L = lame_closed_form(cp.lattice.a2, d);
    double lmax = L.max_abs(), rel = 0.0;
    for (int k = 0; k < L.size(); ++k) {
      double denom = L.v[k] != 0.0 ? std::fabs(L.v[k]) : lmax;
      rel = std::max(rel, std::fabs(C.v[k] - L.v[k]) / denom);
    }
    ok = ok && rel <= T.lame_relative && max_abs(cell.A.a) <= 1e-8;
    run.report["lame"] = {{"a2", cp.lattice.a2},
                          {"tensor", tensor_json(L)},
                          {"max_relative_error", rel},
                          {"corrector_max_abs", max_abs(cell.A.a)}};
  }
  run.passed = ok;
  run.report["passed"] = ok;
  return run;
}

// ---------------------------------------------------------------------------
// Resolvent runs

std::vector<TestFunction> forcing_library(int dim, double box_length, std::uint64_t seed) {
  std::vector<TestFunction> lib = test_function_library(dim, box_length);
  struct Mode {
    std::array<int, 3> k;
    std::array<double, 3> amp;
    double phase;
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<Mode> modes;
  const int K = 2;
  int total = 1;
  for (int a = 0; a < dim; ++a) total *= 2 * K + 1;
  for (int t = 0; t < total; ++t) {
    Mode m{};
    int r = t, k2 = 0;
    for (int a = 0; a < dim; ++a) {
      m.k[a] = r % (2 * K + 1) - K;
      r /= 2 * K + 1;
      k2 += m.k[a] * m.k[a];
    }
    for (int i = 0; i < dim; ++i) m.amp[i] = normal(rng) / (1.0 + k2);
    m.phase = uniform(rng);
    modes.push_back(m);
  }
  const double w = 2.0 * std::numbers::pi / box_length;
  lib.push_back({"random-smooth", [modes, dim, w](const Point& x, double* u) {
                   for (int i = 0; i < dim; ++i) u[i] = 0.0;
                   for (const auto& m : modes) {
                     double arg = m.phase;
                     for (int a = 0; a < dim; ++a) arg += w * m.k[a] * x[a];
                     double c = std::cos(arg);
                     for (int i = 0; i < dim; ++i) u[i] += m.amp[i] * c;
                   }
                 }});
  return lib;
}

RunResult run_solve(const ExperimentConfig& cfg, const CellRun& cell) {
  const CoefficientModel& model = cfg.model.coefficients;
  const int n = cell.cp->grid.n;
  auto lib = forcing_library(model.dim, cfg.box_length, cfg.seed);
  const double bound = std::sqrt(model.alpha2 / model.alpha1) / cfg.m;
  RunResult r;
  r.passed = true;
  nlohmann::json rows = nlohmann::json::array();
  for (double eps : cfg.eps) {
    TorusGrid box = box_for(cfg, n, eps);
    ScaledOperator op(cfg.model.kernel, model, eps, box, cfg.quad, &cell.cp->lattice);
    for (const auto& f : lib) {
      ResolventReport rs =
          resolvent_solve(op, cfg.m, f.sample(box), cfg.tol.resolvent, cfg.tol.resolvent_max_iter);
      bool pass = rs.norm_ratio <= bound && rs.residual <= 10.0 * cfg.tol.resolvent;
      r.passed = r.passed && pass;
      rows.push_back({{"eps", eps},
                      {"forcing", f.name},
                      {"grid", box.n},
                      {"iterations", rs.iterations},
                      {"residual", rs.residual},
                      {"norm_ratio", rs.norm_ratio},
                      {"bound", bound},
                      {"passed", pass}});
    }
  }
  r.report = {{"config_hash", cfg.hash()}, {"name", cfg.name}, {"m", cfg.m}, {"rows", rows}, {"passed", r.passed}};
  return r;
}

nlohmann::json ConvergenceTable::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"eps", r.eps},
                  {"error", r.error},
                  {"relative_error", r.relative_error},
                  {"norm_ratio", r.norm_ratio},
                  {"iterations", r.iterations},
                  {"local_iterations", r.local_iterations},
                  {"m", r.m},
                  {"grid", r.grid}});
  return {{"rows", rs},
          {"monotone", monotone},
          {"constant_errors", constant_errors},
          {"constant_exact", constant_exact}};
}

std::string ConvergenceTable::to_csv(const std::string& config_hash) const {
  std::ostringstream os;
  os << "eps,error,relative_error,norm_ratio,iterations,local_iterations,m,grid,config_hash\n";
  for (const auto& r : rows)
    os << format_double(r.eps) << ',' << format_double(r.error) << ',' << format_double(r.relative_error) << ','
       << format_double(r.norm_ratio) << ',' << r.iterations << ',' << r.local_iterations << ','
       << format_double(r.m) << ',' << r.grid << ',' << config_hash << '\n';
  return os.str();
}

ConvergenceTable run_convergence(const ExperimentConfig& cfg, const CellRun& cell, const EffectiveRun& eff) {
  const CoefficientModel& model = cfg.model.coefficients;
  const int d = model.dim;
  const int n = cell.cp->grid.n;
  auto lib = forcing_library(d, cfg.box_length, cfg.seed);
  const TestFunction& forcing = find_function(lib, cfg.forcing);
  TestFunction constant = constant_test_function(d, 1.0);
  ConvergenceTable table;
  table.constant_exact = true;
  std::vector<double> errors;
  for (double eps : cfg.eps) {
    TorusGrid box = box_for(cfg, n, eps);
    ScaledOperator op(cfg.model.kernel, model, eps, box, cfg.quad, &cell.cp->lattice);
    PeriodicField f = forcing.sample(box);
    // Raise m until the homogenized solve converges; record the value used.
    double m = cfg.m;
    LocalSolveReport ls;
    for (int attempt = 0;; ++attempt) {
      try {
        ls = solve_local(m, eff.ceff, f, cfg.tol.local, cfg.tol.local_max_iter);
        break;
      } catch (const ConvergenceError&) {
        if (attempt >= 3) throw;
        m *= 2.0;
      }
    }
    ResolventReport rs = resolvent_solve(op, m, f, cfg.tol.resolvent, cfg.tol.resolvent_max_iter);
    ConvergenceRow row;
    row.eps = eps;
    row.error = norm(rs.u - ls.u0);
    double u0n = norm(ls.u0);
    row.relative_error = u0n > 0.0 ? row.error / u0n : 0.0;
    row.norm_ratio = rs.norm_ratio;
    row.iterations = rs.iterations;
    row.local_iterations = ls.iterations;
    row.m = m;
    row.grid = box.n;
    table.rows.push_back(row);
    errors.push_back(row.error);

    PeriodicField c = constant.sample(box);
    ResolventReport rc = resolvent_solve(op, m, c, cfg.tol.resolvent, cfg.tol.resolvent_max_iter);
    LocalSolveReport lc = solve_local(m, eff.ceff, c, cfg.tol.local, cfg.tol.local_max_iter);
    PeriodicField exact = c;
    exact *= 1.0 / m;
    double en = norm(exact);
    double ce = std::max({norm(rc.u - exact), norm(lc.u0 - exact), norm(rc.u - lc.u0)}) / en;
    table.constant_errors.push_back(ce);
    table.constant_exact = table.constant_exact && ce <= 10.0 * std::max(cfg.tol.resolvent, cfg.tol.local);
  }
  table.monotone = strictly_decreasing(errors);
  return table;
}

std::string ConsistencySweep::to_csv(const std::string& config_hash) const {
  std::ostringstream os;
  os << "function,eps,residual,relative_residual,psi_term,grid,config_hash\n";
  for (const auto& r : rows)
    os << r.function << ',' << format_double(r.eps) << ',' << format_double(r.residual) << ','
       << format_double(r.relative_residual) << ',' << format_double(r.psi_term) << ',' << r.grid << ','
       << config_hash << '\n';
  return os.str();
}

nlohmann::json ConsistencySweep::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"function", r.function},
                  {"eps", r.eps},
                  {"residual", r.residual},
                  {"relative_residual", r.relative_residual},
                  {"psi_term", r.psi_term},
                  {"grid", r.grid}});
  return {{"rows", rs},
          {"monotone", monotone},
          {"constants_zero", constants_zero},
          {"homogeneous_relative", homogeneous_relative},
          {"passed", passed}};
}

ConsistencySweep run_consistency(const ExperimentConfig& cfg, const CellRun& cell, const EffectiveRun& eff) {
  const CoefficientModel& model = cfg.model.coefficients;
  const int d = model.dim;
  const int n = cell.cp->grid.n;
  auto lib = test_function_library(d, cfg.box_length);
  lib.push_back(constant_test_function(d, 1.0));
  PeriodicField psi = psi_residual(*cell.cp, cell.H, cell.A);
  ConsistencySweep sweep;
  std::vector<std::vector<double>> per(lib.size());
  sweep.constants_zero = true;
  for (double eps : cfg.eps) {
    TorusGrid box = box_for(cfg, n, eps);
    ScaledOperator op(cfg.model.kernel, model, eps, box, cfg.quad, &cell.cp->lattice);
    for (std::size_t i = 0; i < lib.size(); ++i) {
      PeriodicField u = lib[i].sample(box);
      ConsistencyResult cr = consistency_residual(op, cell.A.a, cell.B.b, eff.ceff, u, psi);
      sweep.rows.push_back({lib[i].name, eps, cr.residual, cr.relative_residual, cr.psi_term, box.n});
      per[i].push_back(cr.residual);
      if (lib[i].name == "constant") {
        // Round-off of eps^-2 (K - G) applied to a constant.
        double floor = 1e-11 * op.nonlocal().G().max_norm / (eps * eps) * norm(u);
        sweep.constants_zero = sweep.constants_zero && cr.residual <= floor;
      }
    }
  }
  sweep.monotone = true;
  for (std::size_t i = 0; i < lib.size(); ++i)
    if (lib[i].name != "constant") sweep.monotone = sweep.monotone && strictly_decreasing(per[i]);
  const double last = cfg.eps.back();
  for (const auto& r : sweep.rows)
    if (r.eps == last && r.function != "constant")
      sweep.homogeneous_relative = std::max(sweep.homogeneous_relative, r.relative_residual);
  sweep.passed = sweep.monotone && sweep.constants_zero &&
                 (!cfg.homogeneous() || sweep.homogeneous_relative <= cfg.tol.consistency_homogeneous);
  return sweep;
}

}  // namespace perihom
