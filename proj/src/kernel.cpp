#include "mlasce/kernel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mlasce/errors.hpp"

namespace mlasce {

Smoothness smoothness_from_value(double nu) {
  if (nu == 0.5) return Smoothness::OneHalf;
  if (nu == 1.5) return Smoothness::ThreeHalves;
  if (nu == 2.5) return Smoothness::FiveHalves;
  if (nu == 3.5) return Smoothness::SevenHalves;
  if (nu >= 1e6) return Smoothness::Gaussian;
  std::ostringstream os;
  os << "unsupported Matern smoothness nu=" << nu << " (expected 0.5, 1.5, 2.5, 3.5 or inf)";
  throw ParameterError(os.str());
}

double smoothness_value(Smoothness nu) {
  switch (nu) {
    case Smoothness::OneHalf: return 0.5;
    case Smoothness::ThreeHalves: return 1.5;
    case Smoothness::FiveHalves: return 2.5;
    case Smoothness::SevenHalves: return 3.5;
    case Smoothness::Gaussian: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

void KernelSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ParameterError("kernel lambda must be finite and > 0");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw ParameterError("kernel sigma2 must be finite and >= 0");
  if (!(nugget >= 0.0) || !std::isfinite(nugget))
    throw ParameterError("kernel nugget must be finite and >= 0");
}

double matern_correlation(double r, Smoothness nu, double lambda) {
  switch (nu) {
    case Smoothness::OneHalf:
      return std::exp(-r / lambda);
    case Smoothness::ThreeHalves: {
      const double s = std::sqrt(3.0) * r / lambda;
      return (1.0 + s) * std::exp(-s);
    }
    case Smoothness::FiveHalves: {
      const double s = std::sqrt(5.0) * r / lambda;
      return (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
    case Smoothness::SevenHalves: {
      const double s = std::sqrt(7.0) * r / lambda;
      return (1.0 + s + 2.0 * s * s / 5.0 + s * s * s / 15.0) * std::exp(-s);
    }
    case Smoothness::Gaussian: {
      const double u = r / lambda;
      return std::exp(-u * u);
    }
  }
  return 0.0;
}

double matern(double r, const KernelSpec& spec) {
  spec.validate();
  if (!(r >= 0.0)) throw ParameterError("distance must be >= 0");
  return spec.sigma2 * matern_correlation(r, spec.nu, spec.lambda);
}

Eigen::MatrixXd cov_matrix(const PointSet& X, const KernelSpec& spec) {
  spec.validate();
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = spec.sigma2 * (1.0 + spec.nugget);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = (X.row(i) - X.row(j)).norm();
      K(i, j) = K(j, i) = spec.sigma2 * matern_correlation(r, spec.nu, spec.lambda);
    }
  }
  return K;
}

Eigen::MatrixXd cross_cov(const PointSet& A, const PointSet& B, const KernelSpec& spec) {
  spec.validate();
  if (A.cols() != B.cols()) throw ShapeError("cross_cov: point dimensions differ");
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j)
      K(i, j) = spec.sigma2 * matern_correlation((A.row(i) - B.row(j)).norm(), spec.nu, spec.lambda);
  return K;
}

Eigen::VectorXd cov_vector(const PointSet& X, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const KernelSpec& spec) {
  if (X.cols() != x.size()) throw ShapeError("cov_vector: point dimension mismatch");
  Eigen::VectorXd k(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    k(i) = spec.sigma2 * matern_correlation((X.row(i).transpose() - x).norm(), spec.nu, spec.lambda);
  return k;
}

Cholesky Cholesky::factor(const Eigen::MatrixXd& A, double nugget, double scale) {
  if (A.rows() != A.cols()) throw ShapeError("Cholesky: matrix is not square");
  if (!(nugget >= 0.0)) throw ParameterError("Cholesky: nugget must be >= 0");
  if (scale <= 0.0) scale = A.rows() > 0 ? A.diagonal().cwiseAbs().mean() : 1.0;
  if (!(scale > 0.0)) scale = 1.0;

  Cholesky out;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    out.lower_ = llt.matrixL();
    out.jitter_ = nugget;
    return out;
  }
  double jitter = std::max(nugget, kMinJitter);
  for (;;) {
    jitter *= 10.0;
    if (jitter > kMaxJitter * (1.0 + 1e-12)) break;
    Eigen::MatrixXd B = A;
    B.diagonal().array() += (jitter - nugget) * scale;
    llt.compute(B);
    if (llt.info() == Eigen::Success) {
      out.lower_ = llt.matrixL();
      out.jitter_ = jitter;
      return out;
    }
  }
  std::ostringstream os;
  os << "Cholesky factorization failed after jitter escalation up to " << jitter / 10.0;
  throw FactorizationError(os.str(), jitter / 10.0);
}

Eigen::MatrixXd Cholesky::solve(const Eigen::MatrixXd& B) const {
  if (B.rows() != lower_.rows()) throw ShapeError("Cholesky::solve: row mismatch");
  const auto L = lower_.triangularView<Eigen::Lower>();
  Eigen::MatrixXd Z = L.solve(B);
  return L.transpose().solve(Z);
}

Eigen::VectorXd Cholesky::solve(const Eigen::VectorXd& b) const {
  if (b.size() != lower_.rows()) throw ShapeError("Cholesky::solve: size mismatch");
  const auto L = lower_.triangularView<Eigen::Lower>();
  Eigen::VectorXd z = L.solve(b);
  return L.transpose().solve(z);
}

Eigen::VectorXd Cholesky::half_solve(const Eigen::VectorXd& b) const {
  if (b.size() != lower_.rows()) throw ShapeError("Cholesky::half_solve: size mismatch");
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

Eigen::VectorXd Cholesky::inverse_diagonal() const {
  // (A^{-1})_ii = sum_k (L^{-1})_{ki}^2
  const Eigen::Index n = lower_.rows();
  Eigen::MatrixXd Linv = Eigen::MatrixXd::Identity(n, n);
  lower_.triangularView<Eigen::Lower>().solveInPlace(Linv);
  return Linv.colwise().squaredNorm().transpose();
}

double Cholesky::log_det() const {
  return 2.0 * lower_.diagonal().array().log().sum();
}

Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != A.cols()) throw ShapeError("chol_solve: matrix is not square");
  if (!A.isApprox(A.transpose(), 1e-12) && A.size() > 0)
    throw ShapeError("chol_solve: matrix is not symmetric");
  return Cholesky::factor(A).solve(B);
}

}  // namespace mlasce
