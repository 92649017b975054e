// mlasce: multi-fidelity GP emulation from the command line.
//
//   mlasce plan    --config cfg.json [--budget T] [--format csv|json] [--out file]
//   mlasce run     --config cfg.json [--budget T] [--seed s] [--out model.json]
//   mlasce predict --model model.json --points points.csv [--out file]
//   mlasce bench   --suite toy3 [--budgets 340,500] [--seeds 1,2] [--methods mlasce,ar1] [--workers n]

#include <iostream>

#include <CLI11.hpp>

#include "mlasce/commands.hpp"

int main(int argc, char** argv) {
  using mlasce::OutputFormat;
  CLI::App app{"Multi-fidelity Gaussian process emulation with greedy budget allocation"};
  app.require_subcommand(1);

  mlasce::CommandOptions opts;
  double budget = 0.0;
  std::uint64_t seed = 0;
  std::string format = "csv";

  auto common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) sub->add_option("--config", opts.config_path, "JSON run configuration")->required();
    sub->add_option("--out", opts.out, "output file");
    sub->add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--budget", budget, "total budget T (overrides the config)");
    sub->add_option("--seed", seed, "run seed (overrides the config)");
    sub->add_option("--workers", opts.workers, "worker threads for bench (0: all cores)");
  };

  CLI::App* plan = app.add_subcommand("plan", "a-priori per-level run counts");
  common(plan, true);
  CLI::App* run = app.add_subcommand("run", "build an emulator and write the model artifact to --out");
  common(run, true);
  CLI::App* predict = app.add_subcommand("predict", "posterior mean and sd at the given points");
  common(predict, false);
  predict->add_option("--model", opts.model_path, "model artifact")->required();
  predict->add_option("--points", opts.points_path, "one point per line, coordinates separated by commas")
      ->required();
  CLI::App* bench = app.add_subcommand("bench", "budget sweep on a built-in toy suite");
  common(bench, false);
  bench->add_option("--suite", opts.suite, "toy3 or toy5");
  bench->add_option("--budgets", opts.budgets, "budgets to sweep")->delimiter(',');
  bench->add_option("--seeds", opts.seeds, "seeds per budget")->delimiter(',');
  bench->add_option("--methods", opts.methods, "mlasce, mlasce-fixed, ar1")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mlasce::kExitConfig;
  }

  opts.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--budget")) opts.budget = budget;
  if (sub->count("--seed")) opts.seed = seed;

  if (sub == plan) return mlasce::cmd_plan(opts, std::cout, std::cerr);
  if (sub == run) return mlasce::cmd_run(opts, std::cout, std::cerr);
  if (sub == predict) return mlasce::cmd_predict(opts, std::cout, std::cerr);
  return mlasce::cmd_bench(opts, std::cout, std::cerr);
}
