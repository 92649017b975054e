#pragma once

#include <string>

#include <Eigen/Dense>

namespace mlasce {

/// Runs `command` through /bin/sh -c, writes the coordinates of x space-separated
/// on one line to its stdin and reads a single finite number from its stdout.
///
/// A nonzero exit, a signal, unparseable output or exceeding `timeout_s` throws
/// SimulatorError carrying x and whatever the process printed.
double external_simulator_eval(const std::string& command, const Eigen::VectorXd& x, double timeout_s = 300.0);

}  // namespace mlasce
