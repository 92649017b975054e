#include "mlasce/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "mlasce/errors.hpp"
#include "mlasce/optimize.hpp"

namespace mlasce {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_data(const PointSet& X, const Eigen::VectorXd& y) {
  if (X.rows() < 1) throw ShapeError("GP needs at least one training point");
  if (X.rows() != y.size()) throw ShapeError("GP: number of inputs and outputs differ");
  if (!X.allFinite() || !y.allFinite()) throw ParameterError("GP: training data must be finite");
}

double bounding_diameter(const PointSet& X) {
  if (X.rows() < 2) return 0.0;
  return (X.colwise().maxCoeff() - X.colwise().minCoeff()).norm();
}

}  // namespace

GPModel::GPModel(PointSet X, Eigen::VectorXd y, KernelSpec spec)
    : X_(std::move(X)), y_(std::move(y)), spec_(spec) {
  check_data(X_, y_);
  spec_.validate();
  chol_ = Cholesky::factor(cov_matrix(X_, spec_), spec_.nugget, spec_.sigma2);
  alpha_ = chol_.solve(y_);
}

PosteriorPoint GPModel::posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd k = cov_vector(X_, x, spec_);
  const Eigen::VectorXd v = chol_.half_solve(k);
  return {k.dot(alpha_), std::max(0.0, spec_.sigma2 - v.squaredNorm())};
}

double GPModel::power_function(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (spec_.sigma2 <= 0.0) return 0.0;
  return std::clamp(posterior(x).var / spec_.sigma2, 0.0, 1.0);
}

double GPModel::rkhs_norm_sq() const {
  return std::max(0.0, chol_.half_solve(y_).squaredNorm());
}

double GPModel::log_marginal_likelihood() const {
  const double n = static_cast<double>(y_.size());
  return -0.5 * y_.dot(alpha_) - 0.5 * chol_.log_det() - 0.5 * n * kLog2Pi;
}

double log_marginal_likelihood(const PointSet& X, const Eigen::VectorXd& y, const KernelSpec& spec) {
  return GPModel(X, y, spec).log_marginal_likelihood();
}

HyperBounds mle_bounds(const Eigen::VectorXd& y, double domain_diameter) {
  if (!(domain_diameter > 0.0)) throw ParameterError("mle_bounds: domain diameter must be > 0");
  double v = 1.0;
  if (y.size() > 1) {
    const double mean = y.mean();
    v = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
    if (!(v > 0.0)) v = y.squaredNorm() / static_cast<double>(y.size());
    if (!(v > 0.0)) v = 1.0;
  }
  return {1e-2 * domain_diameter, 10.0 * domain_diameter, 1e-8 * v, 1e4 * v};
}

GPModel fit(PointSet X, Eigen::VectorXd y, Smoothness nu, double nugget, const FitOptions& opts) {
  check_data(X, y);
  if (!(nugget >= 0.0)) throw ParameterError("fit: nugget must be >= 0");
  double diameter = opts.domain_diameter;
  if (!(diameter > 0.0)) diameter = bounding_diameter(X);
  if (!(diameter > 0.0)) diameter = 1.0;
  const HyperBounds box = mle_bounds(y, diameter);

  if (X.rows() == 1) {
    KernelSpec spec{nu, std::sqrt(box.lambda_lo * box.lambda_hi), std::max(y(0) * y(0), 1e-8), nugget};
    return GPModel(std::move(X), std::move(y), spec);
  }

  const double n = static_cast<double>(y.size());
  const double log_lo = std::log(box.lambda_lo), log_hi = std::log(box.lambda_hi);

  // profiled negative log likelihood; also reports the optimal sigma2
  auto profile = [&](double log_lambda, double* sigma2_out) {
    KernelSpec unit{nu, std::exp(log_lambda), 1.0, nugget};
    Cholesky chol;
    try {
      chol = Cholesky::factor(cov_matrix(X, unit), nugget, 1.0);
    } catch (const FactorizationError&) {
      return std::numeric_limits<double>::infinity();
    }
    const double q = chol.half_solve(y).squaredNorm();
    const double sigma2 = std::clamp(q / n, box.sigma2_lo, box.sigma2_hi);
    if (sigma2_out) *sigma2_out = sigma2;
    return 0.5 * q / sigma2 + 0.5 * n * std::log(sigma2) + 0.5 * chol.log_det() + 0.5 * n * kLog2Pi;
  };

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double offset = unif(rng);
  const int starts = std::max(1, opts.starts);

  std::optional<OptimResult> best;
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(1, log_lo);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(1, log_hi);
  NelderMeadOptions nm;
  nm.max_evals = 80;
  nm.x_tol = 1e-7;
  nm.initial_step = 0.5 / starts;
  for (int s = 0; s < starts; ++s) {
    const double z0 = log_lo + (s + offset) / starts * (log_hi - log_lo);
    OptimResult r = nelder_mead_box([&](const Eigen::VectorXd& z) { return profile(z(0), nullptr); },
                                    Eigen::VectorXd::Constant(1, z0), lo, hi, nm);
    if (std::isfinite(r.value) && (!best || r.value < best->value)) best = r;
  }
  if (!best) throw FitError("fit: covariance could not be factorized at any start");

  double sigma2 = 1.0;
  profile(best->x(0), &sigma2);
  KernelSpec spec{nu, std::exp(best->x(0)), sigma2, nugget};
  return GPModel(std::move(X), std::move(y), spec);
}

double sup_power(const GPModel& model, const PointSet& probes) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < probes.rows(); ++i)
    best = std::max(best, model.power_function(probes.row(i).transpose()));
  return best;
}

}  // namespace mlasce
