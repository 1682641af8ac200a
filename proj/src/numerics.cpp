#include "egp/numerics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace egp {

PsdMatrix::PsdMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw DimensionMismatch("PsdMatrix: matrix is " + std::to_string(m_.rows()) +
                            "x" + std::to_string(m_.cols()) + ", expected square");
  }
  if (!m_.allFinite()) {
    throw NonFinite("PsdMatrix: non-finite entries");
  }
  const double scale = m_.size() > 0 ? m_.cwiseAbs().maxCoeff() : 0.0;
  const double tol = 1e-10 * scale;
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    throw NotPsd("PsdMatrix: asymmetry " + std::to_string(asym) +
                 " exceeds tolerance " + std::to_string(tol));
  }
}

namespace {

bool try_llt(const Matrix& m, double jitter, Matrix* lower) {
  Matrix work = m;
  if (jitter > 0.0) work.diagonal().array() += jitter;
  Eigen::LLT<Matrix> llt(work);
  if (llt.info() != Eigen::Success) return false;
  *lower = llt.matrixL();
  // LLT can report success on borderline matrices while producing
  // non-finite entries; treat that as a failure so escalation continues.
  if (!lower->allFinite()) return false;
  return true;
}

}  // namespace

CholeskyFactor robust_cholesky(const PsdMatrix& m, double base_jitter) {
  return robust_cholesky(m.mat(), base_jitter);
}

CholeskyFactor robust_cholesky(const Matrix& m, double base_jitter) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("robust_cholesky: non-square input");
  }
  if (base_jitter < 0.0) {
    throw InvalidSpec("robust_cholesky: negative base jitter");
  }
  const double mean_diag = m.rows() > 0 ? m.diagonal().mean() : 0.0;
  const double scale = mean_diag > 0.0 ? mean_diag : 1.0;
  const double cap = 1e-2 * scale;

  CholeskyFactor factor;
  double jitter = base_jitter * scale;
  while (true) {
    if (try_llt(m, jitter, &factor.lower)) {
      factor.jitter_used = jitter;
      return factor;
    }
    jitter = jitter == 0.0 ? 1e-10 * scale : jitter * 10.0;
    if (jitter > cap) {
      throw NotPsd("robust_cholesky: factorization failed at maximum jitter " +
                   std::to_string(cap));
    }
  }
}

Matrix solve_psd(const CholeskyFactor& factor, const Matrix& rhs) {
  if (factor.dim() != rhs.rows()) {
    throw DimensionMismatch("solve_psd: factor dim " + std::to_string(factor.dim()) +
                            " vs rhs rows " + std::to_string(rhs.rows()));
  }
  Matrix x = factor.lower.triangularView<Eigen::Lower>().solve(rhs);
  factor.lower.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

Vector solve_psd(const CholeskyFactor& factor, const Vector& rhs) {
  Matrix x = solve_psd(factor, Matrix(rhs));
  return Vector(x.col(0));
}

double log_det(const CholeskyFactor& factor) {
  return 2.0 * factor.lower.diagonal().array().log().sum();
}

ThinSvd thin_svd(const Matrix& y) {
  if (!y.allFinite()) {
    throw NonFinite("thin_svd: input contains NaN/Inf");
  }
  Eigen::BDCSVD<Matrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out;
  out.u = svd.matrixU();
  out.s = svd.singularValues();
  out.vt = svd.matrixV().transpose();
  return out;
}

}  // namespace egp
