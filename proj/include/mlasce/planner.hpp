#pragma once

#include <cstdint>
#include <vector>

namespace mlasce {

/// Inputs of the a-priori allocation problem. Level l has accuracy h[l] and
/// cost t[l]; the accuracy below the first level is taken as 0.
struct PlanParams {
  std::vector<double> h;
  std::vector<double> t;
  std::vector<double> nu;  // one per level, or a single value shared by all levels
  double alpha = 1.0;
  double d = 1.0;
  double T = 0.0;
  std::uint64_t seed = 0;

  std::size_t levels() const noexcept { return h.size(); }
  double nu_at(std::size_t l) const { return nu.size() == 1 ? nu[0] : nu[l]; }
  /// |h_l - h_{l-1}| with h_{-1} = 0.
  double delta(std::size_t l) const;
  /// Throws ParameterError on malformed inputs and InfeasibleError when T < sum t.
  void validate() const;
};

enum class PlanObjective {
  LogBound,  // sum |dh|^{2 alpha} N^{-nu/d} sqrt(log N)
  Relaxed,   // sum |dh|^{2 alpha} N^{-nu/d + 1/(2e)}
};

enum class PlanMethod { Numerical, ClosedForm };

struct AllocationPlan {
  std::vector<double> N;
  std::vector<long long> N_rounded;
  double objective = 0.0;  // objective at the real-valued N
  PlanObjective objective_kind = PlanObjective::LogBound;
  PlanMethod method = PlanMethod::Numerical;
};

/// |dh|^{2 alpha} N^{-nu/d} sqrt(log N). Throws ParameterError for N < 1.
double bound_term(double h_l, double h_prev, double alpha, double nu, double d, double N);

/// Objective value of a real-valued allocation.
double plan_objective(const PlanParams& params, const std::vector<double>& N, PlanObjective kind);

/// Smallest admissible N_l: max(1, e^{d/(2 nu_l)}) for LogBound, 1 for Relaxed.
std::vector<double> plan_lower_bounds(const PlanParams& params, PlanObjective kind);

/// Minimizes the objective subject to sum N_l t_l = T and N_l >= lower bound.
///
/// N_1 is eliminated through the budget line, the rest are searched in log space
/// by a 16-start bounded Nelder-Mead; the best start is then polished by exact
/// line searches along every pairwise budget-preserving direction.
/// Throws InfeasibleError when the lower bounds alone exceed T.
AllocationPlan solve_allocation(const PlanParams& params, PlanObjective kind = PlanObjective::LogBound);

/// Lagrange solution of the Relaxed problem for a shared nu:
/// N_l = (t_l / (-r dh_l^{2a}))^{1/(r-1)} T / sum_j t_j^{r/(r-1)} (-r dh_j^{2a})^{1/(1-r)},
/// r = -nu/d + 1/(2e). Throws ParameterError unless all nu agree and r < 0.
AllocationPlan closed_form_allocation(const PlanParams& params);

/// Integer counts >= 1 with sum N t <= T: largest-remainder rounding, then
/// greedy repair that removes the run whose loss raises the objective least.
std::vector<long long> round_allocation(const PlanParams& params, const std::vector<double>& N, PlanObjective kind);

}  // namespace mlasce
