#ifndef EGP_INFERENCE_HPP
#define EGP_INFERENCE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "egp/em_prior.hpp"
#include "egp/empirical_prior.hpp"
#include "egp/kernels.hpp"
#include "egp/numerics.hpp"

namespace egp {

/// Finite-dimensional predictive law at a set of query locations.
struct GaussianPredictive {
  std::vector<double> locations;
  Vector mean;
  Matrix cov;

  /// Per-location (mean, variance); tiny negative variances clamp to 0.
  std::vector<std::pair<double, double>> marginals() const;

  /// CSV export: x, mean, std, q05, q50, q95 (Gaussian quantiles).
  void to_csv(std::ostream& out) const;
};

enum class PriorKind { Dense, Em, Parametric };

/// Uniform mean/covariance access over the three prior families, plus the
/// observation noise used when conditioning. When obs_noise_var is not set,
/// condition() uses 1e-6 * var(train_y), floored at 1e-10.
class PriorHandle {
 public:
  static PriorHandle dense(std::shared_ptr<const DensePrior> prior,
                           std::optional<double> obs_noise_var = std::nullopt);
  static PriorHandle em(std::shared_ptr<const EmPrior> prior,
                        std::optional<double> obs_noise_var = std::nullopt);
  static PriorHandle parametric(KernelSpec kernel, MeanSpec mean,
                                std::optional<double> obs_noise_var = std::nullopt);

  PriorKind kind() const { return kind_; }
  std::optional<double> obs_noise_var() const { return obs_noise_var_; }
  const DensePrior* dense_prior() const { return dense_.get(); }

  Vector mean_at(const std::vector<double>& query) const;
  Matrix cov(const std::vector<double>& qa, const std::vector<double>& qb) const;

 private:
  PriorKind kind_ = PriorKind::Parametric;
  std::shared_ptr<const DensePrior> dense_;
  std::shared_ptr<const EmPrior> em_;
  KernelSpec kernel_;
  MeanSpec mean_;
  std::optional<double> obs_noise_var_;
};

/// Standard GP conditioning of the prior on (train_x, train_y), evaluated at
/// `query`. An empty training set returns the prior moments. Dense priors
/// route through their eigen-basis (rank-r) when train+query exceeds the
/// grid size; both routes agree to ~1e-8.
GaussianPredictive condition(const PriorHandle& prior,
                             const std::vector<double>& train_x,
                             const std::vector<double>& train_y,
                             const std::vector<double>& query);

/// Joint samples from the predictive; deterministic per seed. The covariance
/// is factored with a trace-scaled jitter; if that fails it is repaired by
/// clipping negative eigenvalues at zero.
std::vector<Vector> sample_paths(const GaussianPredictive& p, int n,
                                 std::uint64_t seed);

}  // namespace egp

#endif  // EGP_INFERENCE_HPP
