#pragma once

#include <functional>

#include <Eigen/Dense>

namespace mlasce {

struct NelderMeadOptions {
  int max_evals = 500;
  double x_tol = 1e-9;   // simplex diameter, in units of the box width
  double f_tol = 1e-13;  // relative spread of simplex values
  double initial_step = 0.15;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evals = 0;
};

/// Derivative-free minimisation on the box [lower, upper]. Trial points are
/// projected onto the box, so the result is either an interior stationary
/// point or lies on a box face. Non-finite objective values are treated as +inf.
OptimResult nelder_mead_box(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const NelderMeadOptions& opts = {});

/// Golden-section minimisation of a scalar function on [lo, hi].
OptimResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                           double tol = 1e-12, int max_iter = 200);

}  // namespace mlasce
