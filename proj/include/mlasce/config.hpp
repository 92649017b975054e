#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlasce/design.hpp"
#include "mlasce/multilevel.hpp"
#include "mlasce/planner.hpp"

namespace mlasce {

/// Where one fidelity level gets its values from.
struct SimulatorSpec {
  std::string builtin;  // "toy3" or "toy5"; empty for an external command
  int builtin_level = 0;
  std::string command;  // run through /bin/sh -c, one process per evaluation
};

struct LevelConfig {
  std::optional<SimulatorSpec> simulator;  // only `run` needs it
  double cost = 0.0;
  double accuracy = 1.0;
  double nu = 2.5;
};

struct RunConfig {
  std::vector<LevelConfig> levels;
  Domain domain;
  double budget = 0.0;
  std::vector<double> weights;  // empty: a_l = cost
  double nugget = 1e-8;
  double stabilizing_nugget = 1.0;
  Eigen::Index grid_size = 200;
  Eigen::Index max_candidates = 0;
  std::uint64_t seed = 0;
  double alpha = 1.0;  // planner scale exponent
  double timeout_s = 300.0;
  std::optional<SimulatorSpec> truth;  // builtin only; enables the L2 report
};

/// Parses a JSON config document. Throws ConfigError with the offending key on
/// malformed input and on ladder invariant violations.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Builds the simulator for `spec`; external commands honour timeout_s.
Simulator make_simulator(const SimulatorSpec& spec, double timeout_s);

FidelityLadder build_ladder(const RunConfig& config);
MlasceOptions build_mlasce_options(const RunConfig& config);
PlanParams build_plan_params(const RunConfig& config);

}  // namespace mlasce
