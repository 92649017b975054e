#include "mlasce/design.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "mlasce/errors.hpp"

namespace mlasce {

double evaluate_simulator(const Simulator& sim, const Eigen::VectorXd& x) {
  std::vector<double> coords(x.data(), x.data() + x.size());
  double y = 0.0;
  try {
    y = sim(x);
  } catch (const SimulatorError&) {
    throw;
  } catch (const std::exception& e) {
    throw SimulatorError(std::string("simulator failed: ") + e.what(), coords);
  }
  if (!std::isfinite(y)) throw SimulatorError("simulator returned a non-finite value", coords);
  return y;
}

Domain Domain::interval(double lo, double hi) {
  Domain d{Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi)};
  d.validate();
  return d;
}

bool Domain::contains(const Eigen::VectorXd& x) const {
  return x.size() == dim() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

void Domain::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size())
    throw ParameterError("domain bounds must be non-empty and of equal dimension");
  if (!lower.allFinite() || !upper.allFinite() || !(upper.array() > lower.array()).all())
    throw ParameterError("domain is empty: every upper bound must exceed its lower bound");
}

void CandidateSet::remove(Eigen::Index idx) {
  const auto it = std::lower_bound(active.begin(), active.end(), idx);
  if (it != active.end() && *it == idx) active.erase(it);
}

PointSet CandidateSet::active_points() const {
  PointSet P(static_cast<Eigen::Index>(active.size()), grid.cols());
  for (std::size_t i = 0; i < active.size(); ++i) P.row(static_cast<Eigen::Index>(i)) = grid.row(active[i]);
  return P;
}

CandidateSet generate_grid(const Domain& domain, Eigen::Index n_grid, std::uint64_t seed, GridMode mode) {
  domain.validate();
  if (n_grid < 2) throw ParameterError("generate_grid: N_G must be >= 2");
  const Eigen::Index d = domain.dim();
  if (mode == GridMode::Auto) mode = d == 1 ? GridMode::Uniform : GridMode::Stratified;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::VectorXd width = domain.upper - domain.lower;
  CandidateSet out;
  out.seed = seed;

  switch (mode) {
    case GridMode::Uniform: {
      const auto per_axis = static_cast<Eigen::Index>(std::llround(std::pow(static_cast<double>(n_grid), 1.0 / d)));
      Eigen::Index total = 1;
      for (Eigen::Index k = 0; k < d; ++k) total *= per_axis;
      if (total != n_grid || per_axis < 2) {
        std::ostringstream os;
        os << "generate_grid: uniform mode needs N_G to be a d-th power (N_G=" << n_grid << ", d=" << d << ")";
        throw ParameterError(os.str());
      }
      out.grid.resize(n_grid, d);
      for (Eigen::Index i = 0; i < n_grid; ++i) {
        Eigen::Index rem = i;
        for (Eigen::Index k = d - 1; k >= 0; --k) {
          const Eigen::Index j = rem % per_axis;
          rem /= per_axis;
          out.grid(i, k) = domain.lower(k) + width(k) * static_cast<double>(j) / static_cast<double>(per_axis - 1);
        }
      }
      break;
    }
    case GridMode::Stratified: {
      out.grid.resize(n_grid, d);
      std::vector<Eigen::Index> perm(static_cast<std::size_t>(n_grid));
      for (Eigen::Index k = 0; k < d; ++k) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (Eigen::Index i = 0; i < n_grid; ++i)
          out.grid(i, k) = domain.lower(k) +
                           width(k) * (static_cast<double>(perm[static_cast<std::size_t>(i)]) + unif(rng)) /
                               static_cast<double>(n_grid);
      }
      break;
    }
    case GridMode::Random:
    case GridMode::Auto: {
      out.grid.resize(n_grid, d);
      for (Eigen::Index i = 0; i < n_grid; ++i)
        for (Eigen::Index k = 0; k < d; ++k) out.grid(i, k) = domain.lower(k) + width(k) * unif(rng);
      break;
    }
  }
  out.active.resize(static_cast<std::size_t>(n_grid));
  std::iota(out.active.begin(), out.active.end(), 0);
  return out;
}

namespace {

double stabilized_nugget(const DesignState& s) { return std::max(s.tau2, s.tau2_s); }

}  // namespace

double mice_criterion(const DesignState& state, const Eigen::VectorXd& x, const PointSet& cand_rest) {
  const KernelSpec& spec = state.model.spec();
  const double numerator = state.model.posterior(x).var;
  KernelSpec stab = spec;
  stab.nugget = stabilized_nugget(state);
  double denominator = spec.sigma2 * (1.0 + stab.nugget);
  if (cand_rest.rows() > 0) {
    const Cholesky chol = Cholesky::factor(cov_matrix(cand_rest, stab), stab.nugget, spec.sigma2);
    const Eigen::VectorXd v = chol.half_solve(cov_vector(cand_rest, x, stab));
    denominator = spec.sigma2 * (1.0 + chol.jitter()) - v.squaredNorm();
  }
  if (!(denominator > 0.0)) throw FactorizationError("mice_criterion: degenerate denominator", stab.nugget);
  return numerator / denominator;
}

MiceStep mice_step(const DesignState& state, const CandidateSet& cands, const MiceOptions& opts) {
  if (cands.active.empty()) throw ExhaustionError("mice_step: candidate set is empty");
  const KernelSpec& spec = state.model.spec();
  const PointSet pool = cands.active_points();
  const auto n_pool = static_cast<std::size_t>(pool.rows());

  // positions (into `active`) that are scored this step
  std::vector<std::size_t> scored(n_pool);
  std::iota(scored.begin(), scored.end(), 0);
  if (opts.max_candidates > 0 && n_pool > static_cast<std::size_t>(opts.max_candidates)) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(scored.begin(), scored.end(), rng);
    scored.resize(static_cast<std::size_t>(opts.max_candidates));
    std::sort(scored.begin(), scored.end());
  }

  // The conditional variance of candidate i given all other candidates is
  // 1 / (M^{-1})_ii, where M is the stabilized covariance of the whole pool.
  std::vector<double> denominators(n_pool, 0.0);
  bool batched = true;
  KernelSpec stab = spec;
  stab.nugget = stabilized_nugget(state);
  try {
    const Cholesky chol = Cholesky::factor(cov_matrix(pool, stab), stab.nugget, spec.sigma2);
    const Eigen::VectorXd inv_diag = chol.inverse_diagonal();
    for (std::size_t i = 0; i < n_pool; ++i) denominators[i] = 1.0 / inv_diag(static_cast<Eigen::Index>(i));
  } catch (const FactorizationError&) {
    batched = false;
  }

  MiceStep out;
  double best = -1.0;
  std::size_t best_pos = n_pool;
  for (const std::size_t pos : scored) {
    const Eigen::VectorXd x = pool.row(static_cast<Eigen::Index>(pos)).transpose();
    double score = 0.0;
    if (batched) {
      score = state.model.posterior(x).var / denominators[pos];
    } else {
      PointSet rest(pool.rows() - 1, pool.cols());
      for (Eigen::Index r = 0, w = 0; r < pool.rows(); ++r)
        if (static_cast<std::size_t>(r) != pos) rest.row(w++) = pool.row(r);
      try {
        score = mice_criterion(state, x, rest);
      } catch (const FactorizationError&) {
        std::clog << "warning: MICE skipped candidate " << cands.active[pos] << " (degenerate denominator)\n";
        continue;
      }
    }
    if (best_pos == n_pool || score > best + kScoreTieTolerance * std::abs(best)) {
      best = score;
      best_pos = pos;
    }
  }
  if (best_pos == n_pool) throw ExhaustionError("mice_step: every candidate was skipped");

  out.grid_index = cands.active[best_pos];
  out.x = pool.row(static_cast<Eigen::Index>(best_pos)).transpose();
  out.score = best;
  out.remaining = cands;
  out.remaining.remove(out.grid_index);
  return out;
}

DesignState mice_run(const Simulator& simulator, const Domain& domain, Eigen::Index n_target,
                     const MiceRunOptions& opts) {
  domain.validate();
  if (opts.n_initial < 1) throw ParameterError("mice_run: initial design needs at least one point");
  if (n_target < opts.n_initial) throw ParameterError("mice_run: N_target is smaller than the initial design");

  std::mt19937_64 rng(opts.seed);
  CandidateSet cands = generate_grid(domain, opts.n_grid, rng(), opts.grid_mode);
  if (static_cast<Eigen::Index>(cands.active.size()) < n_target)
    throw ParameterError("mice_run: grid has fewer points than N_target");

  PointSet X(opts.n_initial, domain.dim());
  Eigen::VectorXd y(opts.n_initial);
  for (Eigen::Index i = 0; i < opts.n_initial; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, cands.active.size() - 1);
    const Eigen::Index idx = cands.active[pick(rng)];
    X.row(i) = cands.grid.row(idx);
    y(i) = evaluate_simulator(simulator, X.row(i).transpose());
    cands.remove(idx);
  }

  FitOptions fopts{domain.diameter(), opts.fit_starts, rng()};
  DesignState state{X, y, fit(X, y, opts.nu, opts.tau2, fopts), opts.tau2, opts.tau2_s};

  for (Eigen::Index k = state.X.rows(); k < n_target; ++k) {
    if (opts.resample_grid) {
      cands = generate_grid(domain, opts.n_grid, rng(), GridMode::Random);
    }
    const MiceStep step = mice_step(state, cands, MiceOptions{opts.max_candidates, rng()});
    const double value = evaluate_simulator(simulator, step.x);
    cands = step.remaining;

    state.X.conservativeResize(k + 1, Eigen::NoChange);
    state.X.row(k) = step.x.transpose();
    state.y.conservativeResize(k + 1);
    state.y(k) = value;
    fopts.seed = rng();
    state.model = fit(state.X, state.y, opts.nu, opts.tau2, fopts);
  }
  return state;
}

}  // namespace mlasce
