#include "mlasce/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "mlasce/errors.hpp"
#include "mlasce/optimize.hpp"

namespace mlasce {

namespace {

constexpr double kInvTwoE = 1.0 / (2.0 * 2.718281828459045235360287);

double term(const PlanParams& p, std::size_t l, double N, PlanObjective kind) {
  const double scale = std::pow(p.delta(l), 2.0 * p.alpha);
  if (kind == PlanObjective::Relaxed) return scale * std::pow(N, -p.nu_at(l) / p.d + kInvTwoE);
  return scale * std::pow(N, -p.nu_at(l) / p.d) * std::sqrt(std::log(N));
}

double budget_of(const PlanParams& p, const std::vector<double>& N) {
  double s = 0.0;
  for (std::size_t l = 0; l < N.size(); ++l) s += N[l] * p.t[l];
  return s;
}

// Exact line searches along e_i / t_i - e_j / t_j for every pair until no pair improves.
void pair_polish(const PlanParams& p, std::vector<double>& N, const std::vector<double>& lb, PlanObjective kind) {
  const std::size_t L = N.size();
  for (int sweep = 0; sweep < 500; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = i + 1; j < L; ++j) {
        const double lo = -(N[i] - lb[i]) * p.t[i];
        const double hi = (N[j] - lb[j]) * p.t[j];
        if (!(hi > lo)) continue;
        const double Ni = N[i], Nj = N[j];
        auto f = [&](double s) {
          return term(p, i, std::max(lb[i], Ni + s / p.t[i]), kind) + term(p, j, std::max(lb[j], Nj - s / p.t[j]), kind);
        };
        const double f0 = f(0.0);
        const OptimResult r = golden_section(f, lo, hi, 1e-15);
        if (r.value < f0 - 1e-15 * std::abs(f0)) {
          const double s = r.x(0);
          N[i] = std::max(lb[i], Ni + s / p.t[i]);
          N[j] = std::max(lb[j], Nj - s / p.t[j]);
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
}

}  // namespace

double PlanParams::delta(std::size_t l) const { return std::abs(h[l] - (l == 0 ? 0.0 : h[l - 1])); }

void PlanParams::validate() const {
  const std::size_t L = h.size();
  if (L == 0) throw ParameterError("plan: at least one level required");
  if (t.size() != L) throw ParameterError("plan: h and t must have the same length");
  if (nu.size() != 1 && nu.size() != L) throw ParameterError("plan: give one nu or one nu per level");
  for (const double v : nu)
    if (!(v > 0.0)) throw ParameterError("plan: nu must be > 0");
  if (!(alpha > 0.0)) throw ParameterError("plan: alpha must be > 0");
  if (!(d > 0.0)) throw ParameterError("plan: d must be > 0");
  if (!(h[0] > 0.0) || h[0] > 1.0) throw ParameterError("plan: h_1 must lie in (0, 1]");
  for (std::size_t l = 0; l < L; ++l) {
    if (!(t[l] > 0.0) || !std::isfinite(t[l])) throw ParameterError("plan: costs must be > 0");
    if (l > 0 && !(h[l] < h[l - 1])) throw ParameterError("plan: h must be strictly decreasing");
    if (l > 0 && !(t[l] > t[l - 1])) throw ParameterError("plan: t must be strictly increasing");
  }
  const double need = std::accumulate(t.begin(), t.end(), 0.0);
  if (!(T >= need * (1.0 - 1e-12))) {
    std::ostringstream os;
    os << "budget " << T << " is below one run per level (" << need << ")";
    throw InfeasibleError(os.str());
  }
}

double bound_term(double h_l, double h_prev, double alpha, double nu, double d, double N) {
  if (!(N >= 1.0)) throw ParameterError("bound_term: N must be >= 1");
  if (!(alpha > 0.0) || !(nu > 0.0) || !(d > 0.0)) throw ParameterError("bound_term: alpha, nu, d must be > 0");
  return std::pow(std::abs(h_l - h_prev), 2.0 * alpha) * std::pow(N, -nu / d) * std::sqrt(std::log(N));
}

double plan_objective(const PlanParams& params, const std::vector<double>& N, PlanObjective kind) {
  if (N.size() != params.levels()) throw ParameterError("plan_objective: one count per level required");
  double s = 0.0;
  for (std::size_t l = 0; l < N.size(); ++l) {
    if (!(N[l] >= 1.0)) throw ParameterError("plan_objective: counts must be >= 1");
    s += term(params, l, N[l], kind);
  }
  return s;
}

std::vector<double> plan_lower_bounds(const PlanParams& params, PlanObjective kind) {
  std::vector<double> lb(params.levels(), 1.0);
  if (kind == PlanObjective::LogBound)
    for (std::size_t l = 0; l < lb.size(); ++l) lb[l] = std::max(1.0, std::exp(params.d / (2.0 * params.nu_at(l))));
  return lb;
}

AllocationPlan solve_allocation(const PlanParams& params, PlanObjective kind) {
  params.validate();
  const std::size_t L = params.levels();
  const auto& t = params.t;
  const double T = params.T;
  const std::vector<double> lb = plan_lower_bounds(params, kind);
  const double floor_cost = budget_of(params, lb);
  if (floor_cost > T * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "budget " << T << " is below the cost of the minimum counts (" << floor_cost << ")";
    throw InfeasibleError(os.str());
  }

  AllocationPlan plan;
  plan.objective_kind = kind;
  plan.method = PlanMethod::Numerical;
  if (L == 1) {
    plan.N = {T / t[0]};
  } else {
    // free variables: log N_l for l >= 1; N_0 absorbs the rest of the budget
    const auto m = static_cast<Eigen::Index>(L - 1);
    Eigen::VectorXd lo(m), hi(m);
    for (std::size_t l = 1; l < L; ++l) {
      lo(static_cast<Eigen::Index>(l - 1)) = std::log(lb[l]);
      hi(static_cast<Eigen::Index>(l - 1)) = std::log(std::max(lb[l], (T - floor_cost + lb[l] * t[l]) / t[l]));
    }
    auto expand = [&](const Eigen::VectorXd& z) {
      std::vector<double> N(L);
      double rest = T;
      for (std::size_t l = 1; l < L; ++l) {
        N[l] = std::exp(z(static_cast<Eigen::Index>(l - 1)));
        rest -= N[l] * t[l];
      }
      N[0] = rest / t[0];
      return N;
    };
    auto objective = [&](const Eigen::VectorXd& z) {
      const std::vector<double> N = expand(z);
      if (N[0] < lb[0]) return std::numeric_limits<double>::infinity();
      return plan_objective(params, N, kind);
    };

    std::mt19937_64 rng(params.seed);
    std::gamma_distribution<double> share(1.0, 1.0);
    NelderMeadOptions nm;
    nm.max_evals = 400 * static_cast<int>(L);
    nm.x_tol = 1e-12;
    nm.f_tol = 1e-15;
    nm.initial_step = 0.1;
    OptimResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (int start = 0; start < 16; ++start) {
      // random split of the free budget; start 0 splits it evenly
      std::vector<double> w(L, 1.0);
      if (start > 0)
        for (auto& v : w) v = share(rng);
      const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
      Eigen::VectorXd z(m);
      for (std::size_t l = 1; l < L; ++l)
        z(static_cast<Eigen::Index>(l - 1)) = std::log(lb[l] + (T - floor_cost) * w[l] / wsum / t[l]);
      const OptimResult r = nelder_mead_box(objective, z, lo, hi, nm);
      if (r.value < best.value) best = r;
    }
    plan.N = std::isfinite(best.value) ? expand(best.x) : lb;
    if (!std::isfinite(best.value)) plan.N[0] += (T - floor_cost) / t[0];
    plan.N[0] = std::max(plan.N[0], lb[0]);
    pair_polish(params, plan.N, lb, kind);
  }
  // the polish keeps the budget up to rounding; restore it exactly through the cheapest level
  double rest = T;
  for (std::size_t l = 1; l < L; ++l) rest -= plan.N[l] * t[l];
  plan.N[0] = std::max(lb[0], rest / t[0]);
  plan.objective = plan_objective(params, plan.N, kind);
  plan.N_rounded = round_allocation(params, plan.N, kind);
  return plan;
}

AllocationPlan closed_form_allocation(const PlanParams& params) {
  params.validate();
  for (const double v : params.nu)
    if (v != params.nu[0]) throw ParameterError("closed form needs a common nu across levels");
  const double r = -params.nu[0] / params.d + kInvTwoE;
  if (!(r < 0.0)) throw ParameterError("closed form needs nu > d / (2e)");
  const std::size_t L = params.levels();

  AllocationPlan plan;
  plan.objective_kind = PlanObjective::Relaxed;
  plan.method = PlanMethod::ClosedForm;
  plan.N.resize(L);
  double denom = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    const double c = -r * std::pow(params.delta(j), 2.0 * params.alpha);
    denom += std::pow(params.t[j], r / (r - 1.0)) * std::pow(c, 1.0 / (1.0 - r));
  }
  for (std::size_t l = 0; l < L; ++l) {
    const double c = -r * std::pow(params.delta(l), 2.0 * params.alpha);
    plan.N[l] = std::pow(params.t[l] / c, 1.0 / (r - 1.0)) * params.T / denom;
  }
  double s = 0.0;
  for (std::size_t l = 0; l < L; ++l) s += term(params, l, plan.N[l], PlanObjective::Relaxed);
  plan.objective = s;
  plan.N_rounded = round_allocation(params, plan.N, PlanObjective::LogBound);
  return plan;
}

std::vector<long long> round_allocation(const PlanParams& params, const std::vector<double>& N, PlanObjective kind) {
  const std::size_t L = params.levels();
  if (N.size() != L) throw ParameterError("round_allocation: one count per level required");
  const auto& t = params.t;
  std::vector<long long> out(L);
  double spent = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    out[l] = std::max(1LL, static_cast<long long>(std::floor(N[l])));
    spent += static_cast<double>(out[l]) * t[l];
  }
  const double slack = 1e-9 * params.T;

  // largest remainder first, each extra run only if it still fits
  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return N[a] - std::floor(N[a]) > N[b] - std::floor(N[b]);
  });
  for (const std::size_t l : order) {
    if (N[l] <= static_cast<double>(out[l])) continue;
    if (spent + t[l] <= params.T + slack) {
      ++out[l];
      spent += t[l];
    }
  }

  // repair: drop the run whose removal costs the least objective
  auto value = [&](std::size_t l, long long n) { return n >= 1 ? term(params, l, static_cast<double>(n), kind) : 0.0; };
  while (spent > params.T + slack) {
    std::size_t pick = L;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < L; ++l) {
      if (out[l] <= 1) continue;
      const double loss = value(l, out[l] - 1) - value(l, out[l]);
      if (loss < best) {
        best = loss;
        pick = l;
      }
    }
    if (pick == L) throw InfeasibleError("round_allocation: budget below one run per level");
    --out[pick];
    spent -= t[pick];
  }
  return out;
}

}  // namespace mlasce
