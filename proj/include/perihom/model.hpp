#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace perihom {

using Point = std::array<double, 3>;  // trailing entries are zero when d < 3

enum class KernelFamily { RadialIndicator, RadialGaussian, ConeIndicator, Custom };

// How a kernel looks on an axis-aligned box; drives adaptive quadrature.
enum class BoxClass { Zero, Constant, Smooth, Cut };

// Which moment an unset amplitude normalizes to one.
enum class Normalization { FirstMoment, SecondMoment };

struct KernelSpec {
  KernelFamily family = KernelFamily::RadialIndicator;
  int dim = 2;
  double radius = 1.0;  // support radius, or width w for exp(-|z|^2/w^2)
  std::optional<double> amplitude;  // unset: normalized per `normalize`
  Normalization normalize = Normalization::FirstMoment;
  Point axis{1.0, 0.0, 0.0};        // cone axis, unit length
  double aperture = 0.5;            // cone: |z.axis|/|z| > 1 - aperture
  std::optional<double> truncation;
  std::function<double(const Point&)> custom;  // Custom family only

  static KernelSpec indicator(int dim, double radius, std::optional<double> amplitude = {});
  static KernelSpec gaussian(int dim, double width, std::optional<double> amplitude = {});
  static KernelSpec cone(int dim, double radius, Point axis, double aperture,
                         std::optional<double> amplitude = {});
  static KernelSpec from_callable(int dim, double truncation,
                                  std::function<double(const Point&)> fn);

  double amplitude_value() const;
  double truncation_radius() const;
  double operator()(const Point& z) const;
  BoxClass classify(const Point& lo, const Point& hi) const;
  // rho_eps as a kernel of the same family.
  KernelSpec scaled(double eps) const;
  void validate() const;
};

struct QuadratureConfig {
  int cells_per_axis = 64;
  int max_depth = -1;  // -1: 10 for d <= 2, 6 for d = 3
  double tolerance = 1e-6;
  int smooth_points = 6;  // Gauss points per axis on smooth boxes

  int depth_for(int dim) const { return max_depth >= 0 ? max_depth : (dim <= 2 ? 10 : 6); }
};

struct MomentReport {
  double a1 = 0.0;
  double a2 = 0.0;
  double quadrature_error_estimate = 0.0;
  std::array<double, 9> second_moment{};  // int rho z_i z_j, row-major d x d
};

// Exact a1, a2 for the closed-form families.
std::optional<std::pair<double, double>> closed_form_moments(const KernelSpec& spec);

// Weighted integral over the box [lo, hi]: visit(z, w) receives quadrature nodes
// with w = rho(z) * volume weight. Boxes cut by a discontinuity are bisected
// down to `depth` levels.
void integrate_kernel_box(const KernelSpec& spec, const Point& lo, const Point& hi, int depth,
                          int smooth_points, const std::function<void(const Point&, double)>& visit);

MomentReport kernel_moments(const KernelSpec& spec, const QuadratureConfig& quad = {});

double rho_eps(const KernelSpec& spec, double eps, const Point& z);

// Scalar coefficient field. Fast-variable fields (mu, lambda1) are 1-periodic in y;
// the slow field lambda0 lives on the solve box of length L.
class ScalarField {
 public:
  ScalarField();
  static ScalarField constant(double value);
  static ScalarField from_function(std::function<double(const Point&)> fn, nlohmann::json description);
  // Kinds: constant, cosine, cosine-product, expr. `var` is "y" or "x"; `period`
  // is 1 for fast fields and L for slow fields.
  static ScalarField from_json(const nlohmann::json& j, const std::string& var, int dim,
                               double period);

  double operator()(const Point& p) const { return fn_(p); }
  bool is_constant() const { return constant_; }
  const nlohmann::json& description() const { return description_; }

 private:
  std::function<double(const Point&)> fn_;
  nlohmann::json description_;
  bool constant_ = false;
};

struct CoefficientModel {
  int dim = 2;
  ScalarField mu;
  ScalarField lambda0;
  ScalarField lambda1;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double box_length = 1.0;

  double lambda(const Point& x, const Point& y) const { return lambda0(x) * lambda1(y); }
};

double mu_sym(const CoefficientModel& model, const Point& x, const Point& y);

struct ModelConfig {
  KernelSpec kernel;
  CoefficientModel coefficients;
  nlohmann::json source;
};

ModelConfig parse_model_config(const nlohmann::json& j, double box_length = 1.0);
nlohmann::json kernel_to_json(const KernelSpec& spec);

struct SampleConfig {
  int grid_per_axis = 16;
  int random_points = 256;
  int directions = 128;
  std::uint64_t seed = 0;
  double delta0 = -1.0;  // -1: a quarter of the truncation radius
};

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
  std::vector<double> witness;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const;
  nlohmann::json to_json() const;
};

ValidationReport validate_assumptions(const KernelSpec& spec, const CoefficientModel& model,
                                      const SampleConfig& samples = {});

}  // namespace perihom
