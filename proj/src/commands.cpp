#include "mlasce/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mlasce/artifact.hpp"
#include "mlasce/bench.hpp"
#include "mlasce/config.hpp"
#include "mlasce/errors.hpp"
#include "mlasce/planner.hpp"

namespace mlasce {

namespace {

using json = nlohmann::json;

std::string format_x(const std::vector<double>& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

// Maps library exceptions to exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const BudgetError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const SimulatorError& e) {
    err << "simulator failure: " << e.what() << " at x = " << format_x(e.input()) << '\n';
    if (!e.diagnostics().empty()) err << e.diagnostics() << '\n';
    return kExitSimulator;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

// Writes to the --out file when given, else to `fallback`.
void emit(const CommandOptions& opts, std::ostream& fallback, const std::string& text) {
  if (opts.out.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(opts.out, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + opts.out + "'");
  f << text;
}

RunConfig load_with_overrides(const CommandOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("--config is required");
  RunConfig c = load_config(opts.config_path);
  if (opts.budget) c.budget = *opts.budget;
  if (opts.seed) c.seed = *opts.seed;
  return c;
}

std::ostringstream precise_stream() {
  std::ostringstream os;
  os.precision(17);
  return os;
}

}  // namespace

int cmd_plan(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = load_with_overrides(opts);
    const PlanParams params = build_plan_params(config);
    const AllocationPlan numerical = solve_allocation(params);
    std::optional<AllocationPlan> closed;
    try {
      closed = closed_form_allocation(params);
    } catch (const ParameterError& e) {
      err << "note: closed form not available: " << e.what() << '\n';
    }

    auto os = precise_stream();
    const std::size_t L = params.levels();
    if (opts.format == OutputFormat::Json) {
      json j;
      j["budget"] = params.T;
      j["objective_numerical"] = numerical.objective;
      if (closed) j["objective_closed_form"] = closed->objective;
      json rows = json::array();
      for (std::size_t l = 0; l < L; ++l) {
        json r = {{"level", l + 1},
                  {"h", params.h[l]},
                  {"t", params.t[l]},
                  {"nu", params.nu_at(l)},
                  {"n_numerical", numerical.N[l]},
                  {"n_rounded", numerical.N_rounded[l]},
                  {"budget_numerical", numerical.N[l] * params.t[l]}};
        if (closed) {
          r["n_closed_form"] = closed->N[l];
          r["budget_closed_form"] = closed->N[l] * params.t[l];
        }
        rows.push_back(r);
      }
      j["levels"] = rows;
      os << j.dump(2) << '\n';
    } else {
      os << "level,h,t,nu,n_numerical,n_rounded,budget_numerical,n_closed_form,budget_closed_form\n";
      for (std::size_t l = 0; l < L; ++l) {
        os << l + 1 << ',' << params.h[l] << ',' << params.t[l] << ',' << params.nu_at(l) << ',' << numerical.N[l]
           << ',' << numerical.N_rounded[l] << ',' << numerical.N[l] * params.t[l] << ',';
        if (closed) os << closed->N[l] << ',' << closed->N[l] * params.t[l];
        else os << ',';
        os << '\n';
      }
    }
    emit(opts, out, os.str());
    return static_cast<int>(kExitOk);
  });
}

int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = load_with_overrides(opts);
    FidelityLadder ladder = build_ladder(config);
    for (std::size_t l = 0; l < ladder.size(); ++l) {
      Simulator inner = ladder.levels[l].simulator;
      ladder.levels[l].simulator = [inner, l](const Eigen::VectorXd& x) {
        try {
          return evaluate_simulator(inner, x);
        } catch (const SimulatorError& e) {
          throw SimulatorError("level " + std::to_string(l + 1) + ": " + e.what(), e.input(), e.diagnostics());
        }
      };
    }
    const MultilevelEmulator em = mlasce_run(ladder, config.budget, build_mlasce_options(config));
    const std::string artifact_path = opts.out.empty() ? "mlasce-model.json" : opts.out;
    save_artifact(em, artifact_path);

    std::optional<double> l2;
    if (config.truth) {
      const Simulator truth = make_simulator(*config.truth, config.timeout_s);
      l2 = l2_error([&](double x) { return em.predict(Eigen::VectorXd::Constant(1, x)).mean; },
                    [&](double x) { return truth(Eigen::VectorXd::Constant(1, x)); }, config.domain.lower(0),
                    config.domain.upper(0));
    }

    auto os = precise_stream();
    if (opts.format == OutputFormat::Json) {
      json j;
      j["artifact"] = artifact_path;
      j["budget"] = em.budget();
      j["spent"] = em.spent();
      if (l2) j["l2_error"] = *l2;
      json rows = json::array();
      for (const auto& lv : em.levels())
        rows.push_back({{"level", lv.level + 1},
                        {"runs", lv.model.size()},
                        {"cost_per_eval", lv.cost_per_eval},
                        {"spend", static_cast<double>(lv.model.size()) * lv.cost_per_eval},
                        {"lambda", lv.model.spec().lambda},
                        {"sigma2", lv.model.spec().sigma2}});
      j["levels"] = rows;
      os << j.dump(2) << '\n';
    } else {
      os << "level,runs,cost_per_eval,spend,lambda,sigma2\n";
      for (const auto& lv : em.levels())
        os << lv.level + 1 << ',' << lv.model.size() << ',' << lv.cost_per_eval << ','
           << static_cast<double>(lv.model.size()) * lv.cost_per_eval << ',' << lv.model.spec().lambda << ','
           << lv.model.spec().sigma2 << '\n';
      os << "\nbudget,spent,l2_error\n" << em.budget() << ',' << em.spent() << ',';
      if (l2) os << *l2;
      os << '\n';
    }
    out << os.str();
    err << "wrote " << artifact_path << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_predict(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.model_path.empty() || opts.points_path.empty())
      throw ConfigError("predict needs a model artifact and a points file");
    const MultilevelEmulator em = load_artifact(opts.model_path);
    std::ifstream in(opts.points_path);
    if (!in) throw ConfigError("cannot open points file '" + opts.points_path + "'");
    const Eigen::Index d = em.domain().dim();

    std::vector<Eigen::VectorXd> points;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
      for (char& c : line)
        if (c == ',' || c == '\t' || c == ';') c = ' ';
      std::istringstream ls(line);
      std::vector<double> v;
      std::string tok;
      while (ls >> tok) {
        if (tok[0] == '#') break;
        char* end = nullptr;
        const double x = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) {
          if (points.empty() && v.empty()) break;  // header line
          throw ConfigError("points file line " + std::to_string(lineno) + ": '" + tok + "' is not a number");
        }
        v.push_back(x);
      }
      if (v.empty()) continue;
      if (static_cast<Eigen::Index>(v.size()) != d)
        throw ConfigError("points file line " + std::to_string(lineno) + ": expected " + std::to_string(d) +
                          " coordinates");
      points.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), d));
    }

    auto os = precise_stream();
    if (opts.format == OutputFormat::Json) {
      json rows = json::array();
      for (const auto& x : points) {
        const PosteriorPoint p = em.predict(x);
        rows.push_back({{"x", std::vector<double>(x.data(), x.data() + x.size())},
                        {"mean", p.mean},
                        {"sd", std::sqrt(p.var)}});
      }
      os << rows.dump(2) << '\n';
    } else {
      for (Eigen::Index k = 0; k < d; ++k) os << 'x' << k + 1 << ',';
      os << "mean,sd\n";
      for (const auto& x : points) {
        const PosteriorPoint p = em.predict(x);
        for (Eigen::Index k = 0; k < d; ++k) os << x(k) << ',';
        os << p.mean << ',' << std::sqrt(p.var) << '\n';
      }
    }
    emit(opts, out, os.str());
    return static_cast<int>(kExitOk);
  });
}

int cmd_bench(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ToySuite suite = [&] {
      try {
        return toy_suite(opts.suite);
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
    }();
    std::vector<double> budgets = opts.budgets;
    if (budgets.empty())
      budgets = suite.levels == 3 ? std::vector<double>{340, 380, 420, 460, 500}
                                  : std::vector<double>{1050, 1150, 1250, 1350, 1450};
    if (opts.budget) budgets = {*opts.budget};
    std::vector<std::uint64_t> seeds = opts.seeds;
    if (seeds.empty()) seeds = {1, 2, 3, 4, 5};
    if (opts.seed) seeds = {*opts.seed};
    std::vector<BenchMethod> methods;
    for (const auto& m : opts.methods) {
      try {
        methods.push_back(bench_method_from_string(m));
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
    }
    if (methods.empty()) methods = {BenchMethod::Mlasce, BenchMethod::MlasceFixed, BenchMethod::Ar1};

    if (suite.levels == 5) {
      err << "self-check: xi5 breakpoint jumps (a-1, a, a+1) for a = pi/8, pi/2, 7pi/8:";
      for (const double a : {std::numbers::pi / 8, std::numbers::pi / 2, 7 * std::numbers::pi / 8})
        for (const double j : xi5_breakpoint_jumps(a)) err << ' ' << j;
      err << '\n';
    }

    BenchOptions bo;
    bo.workers = opts.workers;
    const auto rows = run_suite(suite, methods, budgets, seeds, bo);
    for (const auto& r : rows) {
      if (r.skipped)
        err << "skipped: " << to_string(r.method) << " budget " << r.budget << " seed " << r.seed << ": " << r.note
            << '\n';
      if (!r.ledger_ok)
        err << "ledger audit failed: " << to_string(r.method) << " budget " << r.budget << " seed " << r.seed << '\n';
    }

    auto os = precise_stream();
    if (opts.format == OutputFormat::Json) {
      json arr = json::array();
      for (const auto& r : rows) {
        json j = {{"suite", r.suite},       {"method", to_string(r.method)}, {"budget", r.budget},
                  {"seed", r.seed},         {"skipped", r.skipped},          {"spent", r.spent},
                  {"counts", r.counts},     {"wall_ms", r.wall_ms}};
        if (!r.skipped) j["l2_error"] = r.l2_error;
        arr.push_back(j);
      }
      os << arr.dump(2) << '\n';
    } else {
      write_results_csv(os, suite, rows);
    }
    emit(opts, out, os.str());
    return static_cast<int>(kExitOk);
  });
}

}  // namespace mlasce
