#include "mlasce/multilevel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "mlasce/errors.hpp"

namespace mlasce {

namespace {

// Slack for comparing accumulated spend against the budget.
double budget_slack(double budget) { return 1e-9 * std::max(1.0, std::abs(budget)); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Index of the largest score among eligible levels; ties go to the lowest level.
std::optional<std::size_t> pick_level(const std::vector<double>& scores, const std::vector<bool>& eligible) {
  std::optional<std::size_t> best;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    if (!eligible[l]) continue;
    if (!best || scores[l] > scores[*best] + kScoreTieTolerance * std::abs(scores[*best])) best = l;
  }
  return best;
}

}  // namespace

void FidelityLadder::validate() const {
  domain.validate();
  if (levels.empty()) throw ParameterError("fidelity ladder needs at least one level");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& lv = levels[l];
    if (!lv.simulator) throw ParameterError("fidelity ladder: level without simulator");
    if (!(lv.cost > 0.0) || !std::isfinite(lv.cost)) throw ParameterError("fidelity ladder: costs must be > 0");
    if (!(lv.accuracy > 0.0) || lv.accuracy > 1.0) throw ParameterError("fidelity ladder: accuracy must lie in (0, 1]");
    if (l > 0 && !(lv.cost > levels[l - 1].cost))
      throw ParameterError("fidelity ladder: costs must be strictly increasing");
    if (l > 0 && !(lv.accuracy < levels[l - 1].accuracy))
      throw ParameterError("fidelity ladder: accuracies must be strictly decreasing");
  }
}

std::vector<IncrementSimulator> increment_simulators(const FidelityLadder& ladder) {
  ladder.validate();
  std::vector<IncrementSimulator> out;
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    IncrementSimulator inc;
    inc.level = l;
    if (l == 0) {
      inc.eval = ladder.levels[0].simulator;
      inc.cost_per_eval = ladder.levels[0].cost;
    } else {
      Simulator fine = ladder.levels[l].simulator;
      Simulator coarse = ladder.levels[l - 1].simulator;
      inc.eval = [fine, coarse](const Eigen::VectorXd& x) { return fine(x) - coarse(x); };
      inc.cost_per_eval = ladder.levels[l].cost + ladder.levels[l - 1].cost;
    }
    out.push_back(std::move(inc));
  }
  return out;
}

double score_norm(const GPModel& model, ScoreNorm norm) {
  const double scaled = model.rkhs_norm_sq();
  return norm == ScoreNorm::UnitVariance ? scaled * model.spec().sigma2 : scaled;
}

double score(double norm_before, double norm_after, double weight, double cost) {
  if (!(cost > 0.0)) throw ParameterError("score: cost must be > 0");
  if (!(weight >= 0.0)) throw ParameterError("score: weight must be >= 0");
  return std::abs(norm_after - norm_before) * weight / cost;
}

MultilevelEmulator::MultilevelEmulator(Domain domain, double budget, ScoreNorm norm, std::vector<LevelState> levels,
                                       std::vector<LedgerEntry> ledger)
    : domain_(std::move(domain)), budget_(budget), norm_(norm), levels_(std::move(levels)), ledger_(std::move(ledger)) {
  if (levels_.empty()) throw ParameterError("multilevel emulator needs at least one level");
  for (const auto& e : ledger_) spent_ += e.cost;
}

PosteriorPoint MultilevelEmulator::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  PosteriorPoint out;
  for (const auto& lv : levels_) {
    const PosteriorPoint p = lv.model.posterior(x);
    out.mean += p.mean;
    out.var += p.var;
  }
  return out;
}

double MultilevelEmulator::error_bound(const Eigen::Ref<const Eigen::VectorXd>& x,
                                       std::span<const double> norms) const {
  if (norms.size() != levels_.size()) throw ShapeError("error_bound: one norm estimate per level required");
  double bound = 0.0;
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    if (!(norms[l] >= 0.0)) throw ParameterError("error_bound: norm estimates must be >= 0");
    bound += std::sqrt(levels_[l].model.posterior(x).var) * norms[l];
  }
  return bound;
}

ErrorBound MultilevelEmulator::error_bound(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::vector<double> norms;
  for (const auto& lv : levels_) norms.push_back(std::sqrt(lv.model.rkhs_norm_sq()));
  return {error_bound(x, norms), true};
}

std::vector<Eigen::Index> MultilevelEmulator::counts() const {
  std::vector<Eigen::Index> out;
  for (const auto& lv : levels_) out.push_back(lv.model.size());
  return out;
}

MultilevelEmulator mlasce_run(const FidelityLadder& ladder, double budget, const MlasceOptions& opts) {
  const auto increments = increment_simulators(ladder);
  MlasceOptions resolved = opts;
  if (resolved.weights.empty())
    for (const auto& lv : ladder.levels) resolved.weights.push_back(lv.cost);
  return mlasce_run(increments, ladder.domain, budget, resolved);
}

MultilevelEmulator mlasce_run(const std::vector<IncrementSimulator>& increments, const Domain& domain,
                              double budget, const MlasceOptions& opts) {
  domain.validate();
  const std::size_t L = increments.size();
  if (L == 0) throw ParameterError("mlasce_run: no levels");
  if (!opts.weights.empty() && opts.weights.size() != L) throw ParameterError("mlasce_run: one weight per level");
  if (!opts.nu.empty() && opts.nu.size() != L) throw ParameterError("mlasce_run: one smoothness per level");
  if (!opts.level_seeds.empty() && opts.level_seeds.size() != L)
    throw ParameterError("mlasce_run: one seed per level");
  for (const double w : opts.weights)
    if (!(w > 0.0)) throw ParameterError("mlasce_run: weights must be > 0");

  const double init_cost =
      std::accumulate(increments.begin(), increments.end(), 0.0,
                      [](double acc, const IncrementSimulator& inc) { return acc + inc.cost_per_eval; });
  if (!(budget + budget_slack(budget) >= init_cost)) {
    std::ostringstream os;
    os << "budget " << budget << " is below the initial design cost " << init_cost;
    throw BudgetError(os.str());
  }

  struct Work {
    std::mt19937_64 rng;
    CandidateSet cands;
    PointSet X;
    Eigen::VectorXd y;
    Smoothness nu;
  };

  const FitOptions base_fit{domain.diameter(), opts.fit_starts, 0};
  std::vector<Work> work;
  std::vector<LevelState> levels;
  std::vector<LedgerEntry> ledger;
  double spent = 0.0;

  // Step 1: one random grid point per level
  for (std::size_t l = 0; l < L; ++l) {
    const std::uint64_t seed = opts.level_seeds.empty() ? splitmix64(opts.seed + 0x1000 * (l + 1)) : opts.level_seeds[l];
    Work w{std::mt19937_64(seed), {}, PointSet(1, domain.dim()), Eigen::VectorXd(1),
           opts.nu.empty() ? Smoothness::FiveHalves : opts.nu[l]};
    w.cands = generate_grid(domain, opts.n_grid, w.rng(), opts.grid_mode);
    std::uniform_int_distribution<std::size_t> pick(0, w.cands.active.size() - 1);
    const Eigen::Index idx = w.cands.active[pick(w.rng)];
    w.cands.remove(idx);
    w.X.row(0) = w.cands.grid.row(idx);
    w.y(0) = evaluate_simulator(increments[l].eval, w.X.row(0).transpose());
    spent += increments[l].cost_per_eval;

    FitOptions fo = base_fit;
    fo.seed = w.rng();
    GPModel model = fit(w.X, w.y, w.nu, opts.tau2, fo);
    const double weight = opts.weights.empty() ? increments[l].cost_per_eval : opts.weights[l];
    const double norm = score_norm(model, opts.norm);
    ledger.push_back({0, l, w.X.row(0).transpose(), w.y(0), increments[l].cost_per_eval, model.spec().lambda,
                      model.spec().sigma2, {}});
    levels.push_back(LevelState{l, increments[l].cost_per_eval, weight, opts.n_grid, std::move(model), 0.0, norm,
                                score(0.0, norm, weight, increments[l].cost_per_eval)});
    work.push_back(std::move(w));
  }

  // Steps 2-4: greedy loop
  for (std::size_t iteration = 1;; ++iteration) {
    const double remaining = budget - spent;
    std::vector<bool> eligible(L);
    std::vector<double> scores(L);
    for (std::size_t l = 0; l < L; ++l) {
      eligible[l] = levels[l].cost_per_eval <= remaining + budget_slack(budget) && !work[l].cands.active.empty();
      scores[l] = levels[l].score;
    }
    const auto chosen = pick_level(scores, eligible);
    if (!chosen) break;
    const std::size_t l = *chosen;
    Work& w = work[l];
    LevelState& lv = levels[l];

    const DesignState state{w.X, w.y, lv.model, opts.tau2, opts.tau2_s};
    const MiceStep step = mice_step(state, w.cands, MiceOptions{opts.max_candidates, w.rng()});
    const double value = evaluate_simulator(increments[l].eval, step.x);
    w.cands = step.remaining;
    const Eigen::Index n = w.X.rows();
    w.X.conservativeResize(n + 1, Eigen::NoChange);
    w.X.row(n) = step.x.transpose();
    w.y.conservativeResize(n + 1);
    w.y(n) = value;
    spent += lv.cost_per_eval;

    FitOptions fo = base_fit;
    fo.seed = w.rng();
    lv.model = fit(w.X, w.y, w.nu, opts.tau2, fo);
    lv.norm_previous = lv.norm_current;
    lv.norm_current = score_norm(lv.model, opts.norm);
    lv.score = score(lv.norm_previous, lv.norm_current, lv.weight, lv.cost_per_eval);
    ledger.push_back({iteration, l, step.x, value, lv.cost_per_eval, lv.model.spec().lambda, lv.model.spec().sigma2,
                      scores});
  }

  return MultilevelEmulator(domain, budget, opts.norm, std::move(levels), std::move(ledger));
}

LedgerAudit audit_ledger(const MultilevelEmulator& emulator) {
  LedgerAudit audit;
  const auto& levels = emulator.levels();
  const std::size_t L = levels.size();
  const double budget = emulator.budget();
  auto fail = [&](const std::string& msg) {
    audit.ok = false;
    audit.message = msg;
    return audit;
  };

  std::vector<PointSet> X(L);
  std::vector<std::vector<double>> y(L);
  std::vector<double> norm(L, 0.0), scores(L, 0.0);
  double spent = 0.0;

  auto rebuild_norm = [&](std::size_t l, double lambda, double sigma2) {
    const KernelSpec& fitted = levels[l].model.spec();
    KernelSpec spec{fitted.nu, lambda, sigma2, fitted.nugget};
    const Eigen::VectorXd yl = Eigen::Map<const Eigen::VectorXd>(y[l].data(), static_cast<Eigen::Index>(y[l].size()));
    return score_norm(GPModel(X[l], yl, spec), emulator.norm());
  };
  auto append = [&](const LedgerEntry& e) {
    const Eigen::Index n = X[e.level].rows();
    X[e.level].conservativeResize(n + 1, e.x.size());
    X[e.level].row(n) = e.x.transpose();
    y[e.level].push_back(e.value);
  };

  for (const auto& e : emulator.ledger()) {
    if (e.level >= L) return fail("ledger references an unknown level");
    if (std::abs(e.cost - levels[e.level].cost_per_eval) > 1e-12 * levels[e.level].cost_per_eval)
      return fail("ledger cost does not match the level's increment cost");
    if (e.iteration == 0) {
      if (X[e.level].rows() != 0) return fail("duplicate initial entry");
      append(e);
      spent += e.cost;
      norm[e.level] = rebuild_norm(e.level, e.lambda, e.sigma2);
      scores[e.level] = score(0.0, norm[e.level], levels[e.level].weight, levels[e.level].cost_per_eval);
      continue;
    }
    const double remaining = budget - spent;
    std::vector<bool> eligible(L);
    for (std::size_t l = 0; l < L; ++l)
      eligible[l] = levels[l].cost_per_eval <= remaining + budget_slack(budget) && X[l].rows() < levels[l].grid_size;
    const auto expected = pick_level(scores, eligible);
    if (!expected || *expected != e.level) {
      std::ostringstream os;
      os << "iteration " << e.iteration << ": level " << e.level + 1 << " picked but argmax is "
         << (expected ? std::to_string(*expected + 1) : std::string("none"));
      return fail(os.str());
    }
    for (std::size_t l = 0; l < L && l < e.scores.size(); ++l)
      if (std::abs(e.scores[l] - scores[l]) > 1e-9 * std::max(1.0, std::abs(scores[l])))
        return fail("recorded score snapshot disagrees with the replayed score");
    append(e);
    spent += e.cost;
    const double before = norm[e.level];
    norm[e.level] = rebuild_norm(e.level, e.lambda, e.sigma2);
    scores[e.level] = score(before, norm[e.level], levels[e.level].weight, levels[e.level].cost_per_eval);
    ++audit.picks_checked;
  }
  if (spent > budget + budget_slack(budget)) return fail("spend exceeds the budget");
  for (std::size_t l = 0; l < L; ++l) {
    if (X[l].rows() != levels[l].model.size()) return fail("ledger and level model sizes differ");
    if (levels[l].cost_per_eval <= budget - spent + budget_slack(budget) && X[l].rows() < levels[l].grid_size)
      return fail("run stopped while a level was still affordable");
  }
  return audit;
}

}  // namespace mlasce
