#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace perihom {

// Bad inputs: wrong grid, eps, shapes.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Kernel or coefficient data violating the standing assumptions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature or periodization not resolved to the requested tolerance.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Right-hand side not orthogonal to constants.
class SolvabilityError : public std::runtime_error {
 public:
  SolvabilityError(const std::string& what, double violation)
      : std::runtime_error(what), violation_(violation) {}
  double violation() const { return violation_; }

 private:
  double violation_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace perihom
