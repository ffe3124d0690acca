// Command-line front end: one subcommand per experiment stage. Exit code 0 iff
// every gated check of the stage passes.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <iostream>

#include "perihom/errors.hpp"
#include "perihom/experiments.hpp"

namespace fs = std::filesystem;
using namespace perihom;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int grid = 0;
  std::vector<double> eps;
};

ExperimentConfig resolve(const Options& o) {
  nlohmann::json j;
  if (o.config.empty()) {
    j = default_homogeneous_config(o.grid > 0 ? o.grid : 64).to_json();
  } else {
    std::ifstream in(o.config);
    if (!in) throw ArgumentError("cannot open config '" + o.config + "'");
    in >> j;
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.grid > 0) j["cell_n"] = o.grid;
  if (!o.eps.empty()) j["eps"] = o.eps;
  return parse_experiment_config(j);
}

fs::path out_dir(const Options& o, const ExperimentConfig& cfg) { return fs::path(o.out) / cfg.name; }

int finish(const std::string& stage, const fs::path& path, bool passed) {
  std::cout << stage << ": " << (passed ? "PASS" : "FAIL") << "  " << path.string() << "\n";
  return passed ? 0 : 1;
}

int cmd_validate(const Options& o) {
  ExperimentConfig cfg = resolve(o);
  RunResult r = run_validate(cfg);
  fs::path p = out_dir(o, cfg) / "validate.json";
  write_json_atomic(p.string(), r.report);
  return finish("validate", p, r.passed);
}

int cmd_cell(const Options& o) {
  ExperimentConfig cfg = resolve(o);
  fs::path dir = out_dir(o, cfg);
  CellRun cell = run_cell(cfg, 0, (dir / "cache").string());
  write_json_atomic((dir / "cell.json").string(), cell.report);
  return finish("cell", dir / "cell.json", cell.passed);
}

int cmd_effective(const Options& o) {
  ExperimentConfig cfg = resolve(o);
  fs::path dir = out_dir(o, cfg);
  CellRun cell = run_cell(cfg);
  EffectiveRun eff = run_effective(cfg, cell);
  nlohmann::json j = eff.report;
  j["config"] = cfg.to_json();
  j["passed"] = eff.passed && cell.passed;
  write_json_atomic((dir / "effective.json").string(), j);
  return finish("effective", dir / "effective.json", eff.passed && cell.passed);
}

int cmd_solve(const Options& o) {
  ExperimentConfig cfg = resolve(o);
  fs::path dir = out_dir(o, cfg);
  CellRun cell = run_cell(cfg);
  RunResult r = run_solve(cfg, cell);
  write_json_atomic((dir / "solve.json").string(), r.report);
  return finish("solve", dir / "solve.json", r.passed);
}

int cmd_converge(const Options& o) {
  ExperimentConfig cfg = resolve(o);
  fs::path dir = out_dir(o, cfg);
  CellRun cell = run_cell(cfg);
  EffectiveRun eff = run_effective(cfg, cell);
  ConvergenceTable t = run_convergence(cfg, cell, eff);
  bool passed = t.monotone && t.constant_exact;
  nlohmann::json j = t.to_json();
  j["config_hash"] = cfg.hash();
  j["name"] = cfg.name;
  j["passed"] = passed;
  write_text_atomic((dir / "convergence.csv").string(), t.to_csv(cfg.hash()));
  write_json_atomic((dir / "convergence.json").string(), j);
  return finish("converge", dir / "convergence.csv", passed);
}

int cmd_consistency(const Options& o) {
  ExperimentConfig cfg = resolve(o);
  fs::path dir = out_dir(o, cfg);
  CellRun cell = run_cell(cfg);
  EffectiveRun eff = run_effective(cfg, cell);
  ConsistencySweep s = run_consistency(cfg, cell, eff);
  nlohmann::json j = s.to_json();
  j["config_hash"] = cfg.hash();
  j["name"] = cfg.name;
  write_text_atomic((dir / "consistency.csv").string(), s.to_csv(cfg.hash()));
  write_json_atomic((dir / "consistency.json").string(), j);
  return finish("consistency", dir / "consistency.csv", s.passed);
}

int cmd_matrix(const Options& o) {
  const fs::path dir = fs::path(o.out) / "matrix";
  for (const auto& cfg : default_matrix(o.grid > 0 ? o.grid : 64)) {
    fs::path p = dir / (cfg.name + ".json");
    write_json_atomic(p.string(), cfg.to_json());
    std::cout << p.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic nonlocal homogenization experiments"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config (default: homogeneous indicator config)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output root directory");
    sub->add_option("--seed", o.seed, "seed for random property tests");
    sub->add_option("--grid", o.grid, "cell grid nodes per axis")->check(CLI::Range(4, 1024));
    sub->add_option("--eps", o.eps, "eps list, strictly decreasing")->delimiter(',');
  };
  std::vector<std::pair<std::string, std::function<int(const Options&)>>> cmds = {
      {"validate", cmd_validate},   {"cell", cmd_cell},         {"effective", cmd_effective},
      {"solve", cmd_solve},         {"converge", cmd_converge}, {"consistency", cmd_consistency},
      {"matrix", cmd_matrix}};
  const char* help[] = {"model checks and operator structure suite",
                        "cell correctors and both effective-tensor formulas",
                        "effective tensor with certificates",
                        "resolvent solves and the uniform bound",
                        "convergence table against the homogenized solve",
                        "consistency residual sweep",
                        "write the default config matrix"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    subs.push_back(app.add_subcommand(cmds[i].first, help[i]));
    add_common(subs.back());
  }
  CLI11_PARSE(app, argc, argv);
  try {
    for (std::size_t i = 0; i < cmds.size(); ++i)
      if (subs[i]->parsed()) return cmds[i].second(o);
  } catch (const SolvabilityError& e) {
    std::cerr << "solvability error: " << e.what() << " (violation " << e.violation() << ")\n";
    return 3;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
