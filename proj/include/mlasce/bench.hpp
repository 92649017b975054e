#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlasce/gp.hpp"
#include "mlasce/multilevel.hpp"

namespace mlasce {

/// Matérn-5/2 shaped bump centred at a.
double xi(double x, double a, double lambda);
/// Compactly supported C-infinity bump, zero for |x - a| >= pi/8.
double xi2(double x, double a);
double xi3(double x, double a);
double xi4(double x, double a);
/// Three-piece bump: zero up to a-1, then quadratic, then flat-topped tails.
double xi5(double x, double a);

/// Three-level sine-plus-bumps ladder on [0, pi]; l is 1-based.
double toy3_f(int l, double x);
/// Five-level ladder with bumps of decreasing smoothness; l is 1-based.
double toy5_f(int l, double x);

struct ToySuite {
  std::string name;
  int levels = 0;
  std::vector<double> f_costs;          // cost of one run of f_l
  std::vector<double> h_costs;          // cost of one increment evaluation
  std::vector<Smoothness> nu;           // smoothness matched to each increment
  std::vector<int> baseline_proportions;  // nested baseline design ratios, level 1 first
  Domain domain = Domain::interval(0.0, 3.14159265358979323846);

  double f(int l, double x) const;  // 1-based level
  double truth(double x) const { return f(levels, x); }
  FidelityLadder ladder() const;
};

/// "toy3" or "toy5"; throws ParameterError otherwise.
ToySuite toy_suite(const std::string& name);

/// Jump of xi5(., a) across each breakpoint a-1, a, a+1 (right limit minus value).
std::vector<double> xi5_breakpoint_jumps(double a);

/// Integral of (predict - truth)^2 over [lo, hi] by the composite trapezoid rule.
double l2_error(const std::function<double(double)>& predict, const std::function<double(double)>& truth, double lo,
                double hi, int n_points = 10001);

/// Auto-regressive co-kriging with a constant scale factor per level:
/// Y_l = rho_{l-1} Y_{l-1} + delta_l on nested designs.
class Ar1CoKriging {
 public:
  /// designs[l] must be a row subset of designs[l-1]; outputs[l] holds f_l on designs[l].
  static Ar1CoKriging fit(const std::vector<PointSet>& designs, const std::vector<Eigen::VectorXd>& outputs,
                          Smoothness nu = Smoothness::FiveHalves, double nugget = 1e-8, std::uint64_t seed = 0,
                          int fit_starts = 8);

  PosteriorPoint predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// rho[l-1] links level l-1 to level l (zero-based), so rho().size() == levels - 1.
  const std::vector<double>& rho() const noexcept { return rho_; }
  const std::vector<GPModel>& residual_models() const noexcept { return models_; }

 private:
  Ar1CoKriging(std::vector<GPModel> models, std::vector<double> rho);
  std::vector<GPModel> models_;
  std::vector<double> rho_;
};

/// Nested run counts n_1 >= ... >= n_L following the suite's proportions and
/// spending as much of the budget as the nesting allows under f-costs.
/// Returns an empty vector when the top level cannot get a single run.
std::vector<Eigen::Index> baseline_counts(const ToySuite& suite, double budget);

/// Level-1 stratified sample, each higher level a greedy maximin subset of the one below.
std::vector<PointSet> nested_designs(const Domain& domain, const std::vector<Eigen::Index>& counts,
                                     std::uint64_t seed);

enum class BenchMethod {
  Mlasce,       // per-level smoothness of the suite
  MlasceFixed,  // Matérn 5/2 at every level
  Ar1,          // constant-rho co-kriging baseline on a nested design
};

std::string to_string(BenchMethod method);
/// "mlasce", "mlasce-fixed", "ar1"; throws ParameterError otherwise.
BenchMethod bench_method_from_string(const std::string& name);

struct ExperimentResult {
  std::string suite;
  BenchMethod method = BenchMethod::Mlasce;
  double budget = 0.0;
  std::uint64_t seed = 0;
  bool skipped = false;
  std::string note;
  double l2_error = 0.0;
  double spent = 0.0;
  std::vector<Eigen::Index> counts;
  bool ledger_ok = true;
  double wall_ms = 0.0;
};

struct BenchOptions {
  Eigen::Index n_grid = 200;
  int workers = 0;  // 0: hardware concurrency
  int fit_starts = 8;
};

/// One cell of the sweep.
ExperimentResult run_experiment(const ToySuite& suite, BenchMethod method, double budget, std::uint64_t seed,
                                const BenchOptions& opts = {});

/// Every (method, budget, seed) cell, in that nesting order, run on a bounded worker pool.
std::vector<ExperimentResult> run_suite(const ToySuite& suite, const std::vector<BenchMethod>& methods,
                                        const std::vector<double>& budgets, const std::vector<std::uint64_t>& seeds,
                                        const BenchOptions& opts = {});

/// suite,method,budget,seed,l2_error,n_1..n_L,wall_ms (skipped cells leave l2_error empty).
void write_results_csv(std::ostream& os, const ToySuite& suite, const std::vector<ExperimentResult>& rows);

double median(std::vector<double> values);

}  // namespace mlasce
