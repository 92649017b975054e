#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "mlasce/kernel.hpp"

namespace mlasce {

struct PosteriorPoint {
  double mean = 0.0;
  double var = 0.0;
};

/// Zero-mean Gaussian process conditioned on (X, y) with fixed hyperparameters.
///
/// The Cholesky factor of cov_matrix(X, spec) and alpha = K^{-1} y are cached
/// at construction; a model is immutable afterwards, so concurrent posterior
/// queries are safe.
class GPModel {
 public:
  GPModel(PointSet X, Eigen::VectorXd y, KernelSpec spec);

  const PointSet& inputs() const noexcept { return X_; }
  const Eigen::VectorXd& outputs() const noexcept { return y_; }
  const KernelSpec& spec() const noexcept { return spec_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  const Cholesky& factor() const noexcept { return chol_; }
  /// Relative diagonal jitter actually used by the factorization (>= spec().nugget).
  double jitter() const noexcept { return chol_.jitter(); }
  Eigen::Index size() const noexcept { return X_.rows(); }
  Eigen::Index dim() const noexcept { return X_.cols(); }

  /// mean = k^T K^{-1} y, var = K(x,x) - k^T K^{-1} k clamped at 0.
  PosteriorPoint posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Posterior variance of the unit-variance kernel, 1 - k^T Kbar^{-1} k.
  double power_function(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Squared RKHS norm of the posterior mean, y^T K^{-1} y (sigma2-scaled kernel).
  double rkhs_norm_sq() const;

  double log_marginal_likelihood() const;

 private:
  PointSet X_;
  Eigen::VectorXd y_;
  KernelSpec spec_;
  Cholesky chol_;
  Eigen::VectorXd alpha_;
};

/// -1/2 y^T K^{-1} y - 1/2 log det K - N/2 log(2 pi).
double log_marginal_likelihood(const PointSet& X, const Eigen::VectorXd& y, const KernelSpec& spec);

/// Box for maximum likelihood: lambda in [1e-2 D, 10 D], sigma2 in [1e-8 v, 1e4 v].
struct HyperBounds {
  double lambda_lo = 0.0, lambda_hi = 0.0;
  double sigma2_lo = 0.0, sigma2_hi = 0.0;
};

/// v is the sample variance of y, falling back to the mean square and then to 1
/// when the outputs carry no spread.
HyperBounds mle_bounds(const Eigen::VectorXd& y, double domain_diameter);

struct FitOptions {
  double domain_diameter = 0.0;  // <= 0: bounding-box diagonal of X, or 1
  int starts = 8;
  std::uint64_t seed = 0;
};

/// Maximum likelihood fit of lambda and sigma2 with fixed smoothness and nugget.
///
/// sigma2 is profiled out in closed form (its optimum for a given lambda is
/// y^T Rbar^{-1} y / N, clamped to the box), leaving a bounded multi-start
/// Nelder-Mead search over log(lambda). A single observation gives the
/// degenerate rule sigma2 = max(y^2, 1e-8), lambda = geometric midpoint.
GPModel fit(PointSet X, Eigen::VectorXd y, Smoothness nu, double nugget, const FitOptions& opts = {});

/// Maximum of the Power function over a finite probe set.
double sup_power(const GPModel& model, const PointSet& probes);

}  // namespace mlasce
