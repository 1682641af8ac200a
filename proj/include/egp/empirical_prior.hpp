#ifndef EGP_EMPIRICAL_PRIOR_HPP
#define EGP_EMPIRICAL_PRIOR_HPP

#include <atomic>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "egp/dataset.hpp"
#include "egp/numerics.hpp"

namespace egp {

/// Piecewise-linear interpolation of a path, exact at knots, clamped to the
/// endpoint values outside [xs.front(), xs.back()].
std::vector<double> interpolate(const SamplePath& path,
                                const std::vector<double>& query);

/// Interpolation-based empirical prior over a reference grid.
///
/// The basis holds the scaled eigen-observation rows (r x M, r = min(K, M))
/// of the centered grid observations, normalized so that the covariance is a
/// plain inner product: cov(a, b) = sum_j v_j(a) v_j(b), where v_j linearly
/// interpolates basis row j over the grid. At the grid this equals the
/// empirical covariance (1/K) Y^T Y exactly (lossless SVD).
class DensePrior {
 public:
  /// Fits mean and basis from K >= 2 paths discretized onto `grid`.
  static DensePrior fit(const Corpus& corpus, const std::vector<double>& grid);

  // copyable despite the atomic instrumentation counter
  DensePrior(const DensePrior& other) { *this = other; }
  DensePrior& operator=(const DensePrior& other) {
    grid_ = other.grid_;
    mean_ = other.mean_;
    basis_ = other.basis_;
    num_paths_ = other.num_paths_;
    interp_evals_.store(other.interp_evals_.load());
    return *this;
  }

  const std::vector<double>& grid() const { return grid_; }
  const Vector& grid_mean() const { return mean_; }
  const Matrix& basis() const { return basis_; }
  int num_paths() const { return num_paths_; }
  Eigen::Index rank() const { return basis_.rows(); }

  /// Linear interpolation of the stored grid mean; clamped outside the grid.
  Vector mean_at(const std::vector<double>& query) const;

  /// Covariance between two query location sets via the eigen-basis.
  Matrix cov(const std::vector<double>& qa, const std::vector<double>& qb) const;

  /// Basis rows interpolated at query locations (r x |query|). One
  /// interpolant evaluation per (row, query point); the instrumentation
  /// counter below tracks exactly that work.
  Matrix basis_at(const std::vector<double>& query) const;

  std::uint64_t interp_eval_count() const { return interp_evals_.load(); }
  void reset_interp_eval_count() const { interp_evals_.store(0); }

  nlohmann::json to_json() const;
  static DensePrior from_json(const nlohmann::json& j);

 private:
  DensePrior() = default;

  std::vector<double> grid_;
  Vector mean_;
  Matrix basis_;  // r x M
  int num_paths_ = 0;
  mutable std::atomic<std::uint64_t> interp_evals_{0};
};

}  // namespace egp

#endif  // EGP_EMPIRICAL_PRIOR_HPP
