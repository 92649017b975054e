#pragma once

#include <Eigen/Dense>

namespace mlasce {

/// Rows are points, columns are input coordinates.
using PointSet = Eigen::MatrixXd;

/// Matérn smoothness values with closed-form covariance. `Gaussian` is the
/// nu -> infinity limit.
enum class Smoothness { OneHalf, ThreeHalves, FiveHalves, SevenHalves, Gaussian };

/// Accepts 0.5, 1.5, 2.5, 3.5 or +inf (or any value >= 1e6 for the limit).
Smoothness smoothness_from_value(double nu);
double smoothness_value(Smoothness nu);

struct KernelSpec {
  Smoothness nu = Smoothness::FiveHalves;
  double lambda = 1.0;  // correlation length
  double sigma2 = 1.0;  // marginal variance
  double nugget = 0.0;  // relative diagonal jitter: diag = sigma2 * (1 + nugget)

  void validate() const;
};

/// Unit-variance Matérn correlation at distance r.
double matern_correlation(double r, Smoothness nu, double lambda);

/// sigma2 * matern_correlation(r, nu, lambda). Throws ParameterError on an invalid spec.
double matern(double r, const KernelSpec& spec);

/// K(X, X) with sigma2 * (1 + nugget) on the diagonal.
Eigen::MatrixXd cov_matrix(const PointSet& X, const KernelSpec& spec);

/// K(A, B) without nugget.
Eigen::MatrixXd cross_cov(const PointSet& A, const PointSet& B, const KernelSpec& spec);

/// K(X, x) without nugget.
Eigen::VectorXd cov_vector(const PointSet& X, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const KernelSpec& spec);

/// Jitter escalation limits for Cholesky::factor.
inline constexpr double kMaxJitter = 1e-4;
inline constexpr double kMinJitter = 1e-12;

/// Cholesky factor of a symmetric positive definite matrix.
///
/// The matrix passed to factor() is assumed to already carry `nugget * scale`
/// on its diagonal. If the factorization fails, the relative jitter is
/// multiplied by 10 (starting from max(nugget, kMinJitter)) until it exceeds
/// kMaxJitter; the jitter that succeeded is kept.
class Cholesky {
 public:
  static Cholesky factor(const Eigen::MatrixXd& A, double nugget = 0.0, double scale = 0.0);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// L^{-1} b
  Eigen::VectorXd half_solve(const Eigen::VectorXd& b) const;
  /// Diagonal of A^{-1}.
  Eigen::VectorXd inverse_diagonal() const;
  double log_det() const;
  double jitter() const noexcept { return jitter_; }
  Eigen::Index size() const noexcept { return lower_.rows(); }
  const Eigen::MatrixXd& lower() const noexcept { return lower_; }

 private:
  Eigen::MatrixXd lower_;
  double jitter_ = 0.0;
};

/// Solves A X = B through Cholesky::factor (no declared nugget).
Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

}  // namespace mlasce
