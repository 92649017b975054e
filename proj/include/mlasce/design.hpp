#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mlasce/gp.hpp"
#include "mlasce/kernel.hpp"
#include "mlasce/simulator.hpp"

namespace mlasce {

/// Axis-aligned box [lower, upper].
struct Domain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Domain interval(double lo, double hi);
  Eigen::Index dim() const noexcept { return lower.size(); }
  double diameter() const { return (upper - lower).norm(); }
  bool contains(const Eigen::VectorXd& x) const;
  /// Throws ParameterError for mismatched or empty bounds.
  void validate() const;
};

enum class GridMode {
  Auto,        // uniform tensor grid for d = 1, stratified sample otherwise
  Uniform,     // tensor grid; for d >= 2 N_G must be a perfect d-th power
  Stratified,  // Latin-hypercube-style: one point per stratum along every axis
  Random,      // i.i.d. uniform points
};

/// Discretized domain plus the indices of grid points still available as candidates.
struct CandidateSet {
  PointSet grid;
  std::vector<Eigen::Index> active;  // sorted ascending
  std::uint64_t seed = 0;

  /// Removes grid index `idx` from the active set (no-op when absent).
  void remove(Eigen::Index idx);
  PointSet active_points() const;
};

CandidateSet generate_grid(const Domain& domain, Eigen::Index n_grid, std::uint64_t seed,
                           GridMode mode = GridMode::Auto);

struct DesignState {
  PointSet X;
  Eigen::VectorXd y;
  GPModel model;
  double tau2 = 1e-8;
  double tau2_s = 1.0;
};

/// MICE ratio s_k^2(x; tau2) / s_{rest}^2(x; max(tau2, tau2_s)).
///
/// The denominator is the predictive variance at x of a GP with the current
/// hyperparameters conditioned on `cand_rest` (variance only), with the
/// stabilizing nugget on every diagonal entry including x's own.
double mice_criterion(const DesignState& state, const Eigen::VectorXd& x, const PointSet& cand_rest);

struct MiceOptions {
  Eigen::Index max_candidates = 0;  // 0: score every active candidate
  std::uint64_t seed = 0;           // subsampling stream when max_candidates is set
};

struct MiceStep {
  Eigen::Index grid_index = -1;
  Eigen::VectorXd x;
  double score = 0.0;
  CandidateSet remaining;
};

/// Picks the active candidate maximizing mice_criterion (ties: lowest grid index)
/// and removes it from the candidate set. Throws ExhaustionError when no candidate
/// is left.
MiceStep mice_step(const DesignState& state, const CandidateSet& cands, const MiceOptions& opts = {});

/// Relative tolerance under which two criterion values count as tied.
inline constexpr double kScoreTieTolerance = 1e-12;

struct MiceRunOptions {
  Smoothness nu = Smoothness::FiveHalves;
  Eigen::Index n_initial = 3;
  Eigen::Index n_grid = 200;
  GridMode grid_mode = GridMode::Auto;
  bool resample_grid = false;
  Eigen::Index max_candidates = 0;
  double tau2 = 1e-8;
  double tau2_s = 1.0;
  std::uint64_t seed = 0;
  int fit_starts = 8;
};

/// Sequential MICE design: random initial points from the grid, then
/// refit / select / evaluate until n_target points are collected.
DesignState mice_run(const Simulator& simulator, const Domain& domain, Eigen::Index n_target,
                     const MiceRunOptions& opts);

}  // namespace mlasce
