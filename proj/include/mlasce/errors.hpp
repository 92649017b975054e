#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mlasce {

/// Parameter outside its admissible domain (kernel spec, weights, norms).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent dimensions between points, designs or outputs.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cholesky factorization failed even after the full jitter escalation.
class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, double last_jitter)
      : std::runtime_error(what), last_jitter_(last_jitter) {}
  double last_jitter() const noexcept { return last_jitter_; }

 private:
  double last_jitter_;
};

/// No hyperparameter start produced a factorizable covariance.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sequential design ran out of candidate points.
class ExhaustionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The budget cannot pay for the mandatory initial design.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The allocation problem has no feasible point.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulator evaluation failed; carries the offending input.
class SimulatorError : public std::runtime_error {
 public:
  SimulatorError(const std::string& what, std::vector<double> x, std::string diagnostics = {})
      : std::runtime_error(what), x_(std::move(x)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<double>& input() const noexcept { return x_; }
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<double> x_;
  std::string diagnostics_;
};

/// Malformed or inconsistent configuration / artifact file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlasce
