#pragma once

#include <functional>

#include <Eigen/Dense>

namespace mlasce {

/// Deterministic scalar simulator y(x). Implementations signal failure by throwing.
using Simulator = std::function<double(const Eigen::VectorXd&)>;

/// Calls `sim` and rethrows any failure as SimulatorError carrying x.
double evaluate_simulator(const Simulator& sim, const Eigen::VectorXd& x);

}  // namespace mlasce
