#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mlasce {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitSimulator = 4,
};

enum class OutputFormat { Csv, Json };

struct CommandOptions {
  std::string config_path;
  std::optional<double> budget;
  std::optional<std::uint64_t> seed;
  std::string out;  // file for the artifact (run) or the table (other commands); empty means stdout
  OutputFormat format = OutputFormat::Csv;
  int workers = 0;
  // predict
  std::string model_path;
  std::string points_path;
  // bench
  std::string suite = "toy3";
  std::vector<double> budgets;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
};

/// Each command writes its table to `out` (or the --out file) and diagnostics to
/// `err`, and returns one of the ExitCode values.
int cmd_plan(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_predict(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace mlasce
