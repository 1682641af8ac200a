#include "egp/inference.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>

#include "egp/rng.hpp"

namespace egp {

namespace {

constexpr double kZ95 = 1.6448536269514722;  // 95th percentile of N(0,1)

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::pair<double, double>> GaussianPredictive::marginals() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(locations.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    out.emplace_back(mean[i], std::max(cov(i, i), 0.0));
  }
  return out;
}

void GaussianPredictive::to_csv(std::ostream& out) const {
  out << "x,mean,std,q05,q50,q95\n";
  const auto margs = marginals();
  for (std::size_t i = 0; i < margs.size(); ++i) {
    const double sd = std::sqrt(margs[i].second);
    out << format_number(locations[i]) << ',' << format_number(margs[i].first) << ','
        << format_number(sd) << ',' << format_number(margs[i].first - kZ95 * sd) << ','
        << format_number(margs[i].first) << ','
        << format_number(margs[i].first + kZ95 * sd) << '\n';
  }
}

PriorHandle PriorHandle::dense(std::shared_ptr<const DensePrior> prior,
                               std::optional<double> obs_noise_var) {
  PriorHandle h;
  h.kind_ = PriorKind::Dense;
  h.dense_ = std::move(prior);
  h.obs_noise_var_ = obs_noise_var;
  if (obs_noise_var && !(*obs_noise_var > 0.0)) {
    throw InvalidSpec("PriorHandle: obs_noise_var must be positive");
  }
  return h;
}

PriorHandle PriorHandle::em(std::shared_ptr<const EmPrior> prior,
                            std::optional<double> obs_noise_var) {
  PriorHandle h;
  h.kind_ = PriorKind::Em;
  h.em_ = std::move(prior);
  h.obs_noise_var_ = obs_noise_var;
  if (obs_noise_var && !(*obs_noise_var > 0.0)) {
    throw InvalidSpec("PriorHandle: obs_noise_var must be positive");
  }
  return h;
}

PriorHandle PriorHandle::parametric(KernelSpec kernel, MeanSpec mean,
                                    std::optional<double> obs_noise_var) {
  kernel.validate();
  PriorHandle h;
  h.kind_ = PriorKind::Parametric;
  h.kernel_ = kernel;
  h.mean_ = mean;
  h.obs_noise_var_ = obs_noise_var;
  if (obs_noise_var && !(*obs_noise_var > 0.0)) {
    throw InvalidSpec("PriorHandle: obs_noise_var must be positive");
  }
  return h;
}

Vector PriorHandle::mean_at(const std::vector<double>& query) const {
  switch (kind_) {
    case PriorKind::Dense: return dense_->mean_at(query);
    case PriorKind::Em: return em_->mean_at(query);
    case PriorKind::Parametric: return mean_.at(query);
  }
  throw Error("PriorHandle: invalid kind");
}

Matrix PriorHandle::cov(const std::vector<double>& qa,
                        const std::vector<double>& qb) const {
  switch (kind_) {
    case PriorKind::Dense: return dense_->cov(qa, qb);
    case PriorKind::Em: {
      // moments() evaluates one joint covariance; stitch the cross block
      if (qa == qb) return em_->moments(qa).second;
      std::vector<double> joint = qa;
      joint.insert(joint.end(), qb.begin(), qb.end());
      const Matrix full = em_->moments(joint).second;
      return full.block(0, static_cast<Eigen::Index>(qa.size()),
                        static_cast<Eigen::Index>(qa.size()),
                        static_cast<Eigen::Index>(qb.size()));
    }
    case PriorKind::Parametric:
      if (qa == qb) return kernel_matrix(kernel_, qa).mat();
      return cross_kernel_matrix(kernel_, qa, qb);
  }
  throw Error("PriorHandle: invalid kind");
}

namespace {

double resolve_obs_noise(const PriorHandle& prior, const std::vector<double>& train_y) {
  if (prior.obs_noise_var()) return *prior.obs_noise_var();
  double mean = 0.0;
  for (double v : train_y) mean += v;
  mean /= static_cast<double>(train_y.size());
  double var = 0.0;
  for (double v : train_y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(train_y.size());
  return std::max(1e-6 * var, 1e-10);
}

GaussianPredictive condition_explicit(const PriorHandle& prior,
                                      const std::vector<double>& train_x,
                                      const std::vector<double>& train_y,
                                      const std::vector<double>& query,
                                      double noise) {
  const auto n = static_cast<Eigen::Index>(train_x.size());
  Matrix k_xx = prior.cov(train_x, train_x);
  k_xx.diagonal().array() += noise;
  const CholeskyFactor factor = robust_cholesky(k_xx, 0.0);

  const Vector resid =
      Eigen::Map<const Vector>(train_y.data(), n) - prior.mean_at(train_x);
  const Matrix k_qx = prior.cov(query, train_x);
  const Vector alpha = solve_psd(factor, resid);

  GaussianPredictive out;
  out.locations = query;
  out.mean = prior.mean_at(query) + k_qx * alpha;
  // Subtract a sum of squares so the posterior diagonal can never exceed
  // the prior diagonal by more than rounding.
  const Matrix v =
      factor.lower.triangularView<Eigen::Lower>().solve(Matrix(k_qx.transpose()));
  Matrix cov = prior.cov(query, query) - v.transpose() * v;
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

// Dense prior, rank-r route: with prior covariance B_x^T B_x (B = basis_at),
//   S = noise I_r + B_x B_x^T
//   posterior mean = m(q) + B_q^T S^-1 B_x (y - m(x))
//   posterior cov  = noise * B_q^T S^-1 B_q
GaussianPredictive condition_dense_lowrank(const DensePrior& prior,
                                           const std::vector<double>& train_x,
                                           const std::vector<double>& train_y,
                                           const std::vector<double>& query,
                                           double noise) {
  const Matrix bx = prior.basis_at(train_x);  // r x n
  const Matrix bq = prior.basis_at(query);    // r x q
  Matrix s = bx * bx.transpose();
  s.diagonal().array() += noise;
  const CholeskyFactor factor = robust_cholesky(s, 0.0);

  const Vector resid =
      Eigen::Map<const Vector>(train_y.data(), static_cast<Eigen::Index>(train_y.size())) -
      prior.mean_at(train_x);

  GaussianPredictive out;
  out.locations = query;
  out.mean = prior.mean_at(query) + bq.transpose() * solve_psd(factor, Vector(bx * resid));
  const Matrix v = factor.lower.triangularView<Eigen::Lower>().solve(bq);
  Matrix cov = noise * v.transpose() * v;
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

}  // namespace

GaussianPredictive condition(const PriorHandle& prior,
                             const std::vector<double>& train_x,
                             const std::vector<double>& train_y,
                             const std::vector<double>& query) {
  if (train_x.size() != train_y.size()) {
    throw DimensionMismatch("condition: train_x/train_y length mismatch");
  }
  if (query.empty()) throw EmptyGrid("condition: empty query");

  if (train_x.empty()) {
    GaussianPredictive out;
    out.locations = query;
    out.mean = prior.mean_at(query);
    out.cov = prior.cov(query, query);
    return out;
  }

  const double noise = resolve_obs_noise(prior, train_y);
  if (prior.kind() == PriorKind::Dense &&
      train_x.size() + query.size() > prior.dense_prior()->grid().size()) {
    return condition_dense_lowrank(*prior.dense_prior(), train_x, train_y, query, noise);
  }
  return condition_explicit(prior, train_x, train_y, query, noise);
}

std::vector<Vector> sample_paths(const GaussianPredictive& p, int n,
                                 std::uint64_t seed) {
  if (n < 1) throw InvalidSpec("sample_paths: n must be >= 1");
  const auto dim = p.mean.size();

  Matrix lower;
  try {
    // base jitter of 1e-10 is relative to the mean diagonal, i.e. trace/dim
    lower = robust_cholesky(p.cov, 1e-10).lower;
  } catch (const NotPsd&) {
    // repair by symmetric eigenvalue clipping, then factor the clipped matrix
    Eigen::SelfAdjointEigenSolver<Matrix> eig(p.cov);
    Vector vals = eig.eigenvalues().cwiseMax(0.0);
    const Matrix repaired = eig.eigenvectors() * vals.asDiagonal() *
                            eig.eigenvectors().transpose();
    lower = robust_cholesky(repaired, 1e-10).lower;
  }

  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n));
  Rng rng(seed);
  Vector z(dim);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) z[j] = rng.normal();
    out.push_back(p.mean + lower * z);
  }
  return out;
}

}  // namespace egp
