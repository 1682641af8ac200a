#ifndef EGP_NUMERICS_HPP
#define EGP_NUMERICS_HPP

#include <Eigen/Dense>

#include "egp/errors.hpp"

namespace egp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Validated symmetric matrix intended to be positive semi-definite.
///
/// Symmetry is checked on construction (absolute tolerance
/// 1e-10 * max|entry|). Numerical PSD-ness (eigenvalues >= -1e-8 * trace/dim)
/// is not recomputed eagerly; it is enforced where it matters, by
/// robust_cholesky failing with NotPsd.
class PsdMatrix {
 public:
  explicit PsdMatrix(Matrix m);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }

 private:
  Matrix m_;
};

struct CholeskyFactor {
  Matrix lower;        // lower-triangular L with L L^T = input + jitter_used * I
  double jitter_used = 0.0;

  Eigen::Index dim() const { return lower.rows(); }
};

/// Cholesky factorization with geometric jitter escalation.
///
/// `base_jitter` is relative to the mean diagonal of `m`. The first attempt
/// uses base_jitter * mean_diag (0 is allowed and tried exactly); failures
/// escalate from 1e-10 * mean_diag by factors of 10 up to 1e-2 * mean_diag,
/// after which NotPsd is thrown. jitter_used records the absolute jitter of
/// the successful attempt.
CholeskyFactor robust_cholesky(const PsdMatrix& m, double base_jitter = 1e-10);
CholeskyFactor robust_cholesky(const Matrix& m, double base_jitter = 1e-10);

/// Solves (M + jitter_used * I) X = rhs from a factor of M.
Matrix solve_psd(const CholeskyFactor& factor, const Matrix& rhs);
Vector solve_psd(const CholeskyFactor& factor, const Vector& rhs);

/// log det of the factored matrix (including jitter).
double log_det(const CholeskyFactor& factor);

struct ThinSvd {
  Matrix u;   // K x r
  Vector s;   // r, descending, non-negative
  Matrix vt;  // r x M
};

/// Thin SVD with r = min(K, M); lossless (reconstruction to ~1e-10 relative).
ThinSvd thin_svd(const Matrix& y);

}  // namespace egp

#endif  // EGP_NUMERICS_HPP
