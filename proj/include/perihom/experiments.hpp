#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "perihom/ansatz.hpp"
#include "perihom/cell.hpp"
#include "perihom/effective.hpp"
#include "perihom/localsolver.hpp"
#include "perihom/model.hpp"

namespace perihom {

struct Tolerances {
  double cell_cg = 1e-9;
  int cell_max_iter = 5000;
  double fredholm = 1e-9;
  double two_formula = 1e-6;  // relative to max |C|
  double symmetry = 1e-8;
  double positivity_slack = 1e-6;
  double diagnostic = 1e-7;  // Psi/Phi residuals relative to max |G|
  double resolvent = 1e-10;
  int resolvent_max_iter = 2000;
  double local = 1e-10;
  int local_max_iter = 500;
  double operator_property = 1e-10;
  double lame_relative = 1e-3;
  double consistency_homogeneous = 1e-2;

  nlohmann::json to_json() const;
};

struct ExperimentConfig {
  std::string name = "config";
  nlohmann::json model_json;  // model keys only
  ModelConfig model;
  int cell_n = 64;
  double box_length = 1.0;
  std::vector<double> eps{0.5, 0.25, 0.125};
  double m = 5.0;
  std::string forcing = "gaussian-bump";
  Tolerances tol;
  std::uint64_t seed = 0;
  int property_n = 16;
  int property_pairs = 100;
  QuadratureConfig quad;

  // Canonical form used for hashing and report headers.
  nlohmann::json to_json() const;
  std::string hash() const;
  // mu, lambda0 and lambda1 all constant.
  bool homogeneous() const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Full default matrix: 3 kernels x 3 mu x 2 lambda1 x 2 lambda0.
std::vector<ExperimentConfig> default_matrix(int cell_n = 64);
ExperimentConfig default_homogeneous_config(int cell_n = 64);

// FNV-1a 64 of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

void write_text_atomic(const std::string& path, const std::string& text);
void write_json_atomic(const std::string& path, const nlohmann::json& j);

struct OperatorSuiteReport {
  double scale = 0.0;             // max nodal norm of G
  double symmetry_max = 0.0;      // relative to scale |psi||phi|
  double nonpositivity_max = 0.0;  // max <(K-G)psi,psi> / (scale |psi|^2), clipped below at 0
  std::vector<double> smallest_eigenvalues;  // of -(K-G)/scale, d+1 of them
  double convolution_vs_direct = 0.0;
  double G_fft_vs_direct = 0.0;
  bool passed = false;
  nlohmann::json to_json() const;
};

OperatorSuiteReport operator_property_suite(const KernelSpec& spec, const CoefficientModel& model, int n,
                                            int pairs, std::uint64_t seed, const Tolerances& tol,
                                            const QuadratureConfig& quad = {});

struct RunResult {
  nlohmann::json report;
  bool passed = false;
};

RunResult run_validate(const ExperimentConfig& cfg);

struct CellRun {
  std::shared_ptr<CellProblem> cp;
  CellDataH H;
  CorrectorA A;
  CTildeReport ctilde;
  CorrectorB B;
  nlohmann::json report;
  bool passed = false;
};

// Cell problems on an n^d grid (n <= 0: cfg.cell_n). Writes corrector caches
// into cache_dir when it is non-empty.
CellRun run_cell(const ExperimentConfig& cfg, int n = 0, const std::string& cache_dir = "");

struct EffectiveRun {
  EffectiveTensor ceff;
  Certificate certificate;
  double positivity_bound = 0.0;
  nlohmann::json report;
  bool passed = false;
};

EffectiveRun run_effective(const ExperimentConfig& cfg, const CellRun& cell);

// Forcing library for resolvent runs: the test functions plus a seeded random
// low-frequency field.
std::vector<TestFunction> forcing_library(int dim, double box_length, std::uint64_t seed);

RunResult run_solve(const ExperimentConfig& cfg, const CellRun& cell);

struct ConvergenceRow {
  double eps = 0.0;
  double error = 0.0;           // ||u_eps - u0||
  double relative_error = 0.0;  // error / ||u0||
  double norm_ratio = 0.0;      // ||u_eps|| / ||f||
  int iterations = 0;
  int local_iterations = 0;
  double m = 0.0;
  int grid = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool monotone = false;
  std::vector<double> constant_errors;  // per eps, f constant
  bool constant_exact = false;
  nlohmann::json to_json() const;
  std::string to_csv(const std::string& config_hash) const;
};

ConvergenceTable run_convergence(const ExperimentConfig& cfg, const CellRun& cell, const EffectiveRun& eff);

struct ConsistencyRow {
  std::string function;
  double eps = 0.0;
  double residual = 0.0;
  double relative_residual = 0.0;
  double psi_term = 0.0;
  int grid = 0;
};

struct ConsistencySweep {
  std::vector<ConsistencyRow> rows;
  bool monotone = false;        // strictly decreasing per function
  bool constants_zero = false;  // constant u rows vanish
  double homogeneous_relative = 0.0;  // max relative residual at the smallest eps
  bool passed = false;
  std::string to_csv(const std::string& config_hash) const;
  nlohmann::json to_json() const;
};

ConsistencySweep run_consistency(const ExperimentConfig& cfg, const CellRun& cell, const EffectiveRun& eff);

}  // namespace perihom
