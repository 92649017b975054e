#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlasce/design.hpp"
#include "mlasce/gp.hpp"
#include "mlasce/simulator.hpp"

namespace mlasce {

struct FidelityLevel {
  Simulator simulator;  // y_l
  double cost = 1.0;      // t_l
  double accuracy = 1.0;  // h_l
};

/// Levels ordered by increasing fidelity: t strictly increasing, h strictly
/// decreasing, h_1 <= 1.
struct FidelityLadder {
  std::vector<FidelityLevel> levels;
  Domain domain;

  std::size_t size() const noexcept { return levels.size(); }
  void validate() const;
};

/// delta_l = y_l - y_{l-1} (delta_1 = y_1), priced at t_l + t_{l-1}.
struct IncrementSimulator {
  std::size_t level = 0;  // zero-based
  Simulator eval;
  double cost_per_eval = 0.0;
};

std::vector<IncrementSimulator> increment_simulators(const FidelityLadder& ladder);

/// Which RKHS norm drives the score.
enum class ScoreNorm {
  UnitVariance,  // delta^T Rbar^{-1} delta: norm under the fitted correlation kernel
  KernelScaled,  // delta^T K^{-1} delta with the fitted sigma2 (== N at an interior MLE)
};

double score_norm(const GPModel& model, ScoreNorm norm);

/// gamma = |norm_after - norm_before| * weight / cost.
double score(double norm_before, double norm_after, double weight, double cost);

struct MlasceOptions {
  std::vector<double> weights;            // a_l; empty means a_l = t_l
  std::vector<Smoothness> nu;             // per level; empty means 5/2 everywhere
  std::vector<std::uint64_t> level_seeds; // empty: derived from `seed`
  std::uint64_t seed = 0;
  double tau2 = 1e-8;
  double tau2_s = 1.0;
  Eigen::Index n_grid = 200;
  GridMode grid_mode = GridMode::Auto;
  Eigen::Index max_candidates = 0;
  ScoreNorm norm = ScoreNorm::UnitVariance;
  int fit_starts = 8;
};

/// One simulation of an increment. Hyperparameters are those fitted right after
/// the point was added; `scores` is the gamma of every level at decision time
/// (empty for the initial design).
struct LedgerEntry {
  std::size_t iteration = 0;
  std::size_t level = 0;
  Eigen::VectorXd x;
  double value = 0.0;
  double cost = 0.0;
  double lambda = 0.0;
  double sigma2 = 0.0;
  std::vector<double> scores;
};

struct LevelState {
  std::size_t level = 0;
  double cost_per_eval = 0.0;
  double weight = 0.0;
  Eigen::Index grid_size = 0;  // candidate grid size; the level is exhausted once model.size() reaches it
  GPModel model;
  double norm_previous = 0.0;
  double norm_current = 0.0;
  double score = 0.0;
};

struct ErrorBound {
  double value = 0.0;
  bool lower_biased = false;  // true when posterior-mean norms stood in for the true norms
};

/// Sum of independent per-level increment emulators plus the budget ledger.
class MultilevelEmulator {
 public:
  MultilevelEmulator(Domain domain, double budget, ScoreNorm norm, std::vector<LevelState> levels,
                     std::vector<LedgerEntry> ledger);

  /// mean = sum of per-level means, var = sum of per-level variances.
  PosteriorPoint predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// sum_l sqrt(s_l^2(x)) * norms[l]
  double error_bound(const Eigen::Ref<const Eigen::VectorXd>& x, std::span<const double> norms) const;
  /// Same with sqrt(rkhs_norm_sq) of each level's posterior mean, flagged lower-biased.
  ErrorBound error_bound(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  const Domain& domain() const noexcept { return domain_; }
  double budget() const noexcept { return budget_; }
  double spent() const noexcept { return spent_; }
  ScoreNorm norm() const noexcept { return norm_; }
  const std::vector<LevelState>& levels() const noexcept { return levels_; }
  const std::vector<LedgerEntry>& ledger() const noexcept { return ledger_; }
  std::vector<Eigen::Index> counts() const;

 private:
  Domain domain_;
  double budget_ = 0.0;
  double spent_ = 0.0;
  ScoreNorm norm_ = ScoreNorm::UnitVariance;
  std::vector<LevelState> levels_;
  std::vector<LedgerEntry> ledger_;
};

/// Greedy budget allocation over increment levels.
///
/// One random grid point per level is simulated first. Each iteration then
/// picks the affordable level with the largest score (ties: lowest level), adds
/// its MICE point, refits that level's lambda and sigma2 and updates its score.
/// The loop stops once the remaining budget is below every affordable cost.
/// Throws BudgetError before simulating anything if T cannot pay the initial design.
MultilevelEmulator mlasce_run(const FidelityLadder& ladder, double budget, const MlasceOptions& opts);

/// Same loop on explicit increment simulators (no ladder ordering checks).
MultilevelEmulator mlasce_run(const std::vector<IncrementSimulator>& increments, const Domain& domain,
                              double budget, const MlasceOptions& opts);

struct LedgerAudit {
  bool ok = true;
  std::size_t picks_checked = 0;
  std::string message;
};

/// Replays the ledger: rebuilds each level's models from the recorded points and
/// hyperparameters, recomputes every score and checks that each loop pick was
/// the affordable argmax, that the spend never exceeds the budget and that the
/// run stopped only when nothing was affordable.
LedgerAudit audit_ledger(const MultilevelEmulator& emulator);

}  // namespace mlasce
