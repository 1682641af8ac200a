#ifndef EGP_EM_PRIOR_HPP
#define EGP_EM_PRIOR_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "egp/dataset.hpp"
#include "egp/kernels.hpp"
#include "egp/numerics.hpp"

namespace egp {

struct EmConfig {
  int max_iters = 100;
  double tol = 1e-6;        // on max(L2 mean step, Frobenius covariance step)
  double noise_var = 1e-4;
  bool estimate_noise = false;
  double jitter = 1e-10;    // relative, for the grid kernel factorization

  void validate() const;
};

/// One task: interpolation weights W (N_i x M) and observed values y (N_i).
struct EmTask {
  Matrix weights;
  Vector y;
};

/// Per-task posterior moments of the latent grid values, plus the
/// observed-data log-likelihood summed over tasks.
struct EStepResult {
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  double loglik = 0.0;
};

struct EmIterStats {
  int iter = 0;
  double mu_step = 0.0;
  double sigma_step = 0.0;
  double loglik = 0.0;
  double noise_var = 0.0;
};

/// Kernel interpolation weights W = k(xs, grid) k(grid, grid)^-1.
Matrix interp_weights(const KernelSpec& base_kernel, const std::vector<double>& xs,
                      const std::vector<double>& grid, double jitter = 1e-10);

/// Per-task Gaussian conditioning of the latent grid values. Tasks with
/// N_i > M are routed through a Woodbury factorization (M x M solves);
/// both paths agree to ~1e-8. Parallel over tasks (EGP_THREADS workers);
/// the loglik reduction is a fixed pairwise tree, so results do not depend
/// on the worker count.
EStepResult e_step(const Vector& prior_mu, const PsdMatrix& prior_sigma,
                   double noise_var, const std::vector<EmTask>& tasks);

/// Closed-form maximum-likelihood update from E-step moments
/// (1/K normalization; the returned covariance is PSD by construction).
std::pair<Vector, PsdMatrix> m_step(const EStepResult& e);

/// Closed-form noise update: mean expected squared residual, floored at 1e-12.
double estimate_noise_update(const EStepResult& e, const std::vector<EmTask>& tasks);

/// Number of task conditionings performed by e_step since the last reset
/// (process-wide instrumentation; one per task per call).
std::uint64_t e_step_conditioning_count();
void reset_e_step_conditioning_count();

/// EM-estimated prior: latent grid moments plus residuals against a
/// parametric base GP, queryable anywhere via residual interpolation.
class EmPrior {
 public:
  static EmPrior fit(const Corpus& corpus, const std::vector<double>& grid,
                     const KernelSpec& base_kernel, const MeanSpec& base_mean,
                     const EmConfig& cfg = {});

  const std::vector<double>& grid() const { return grid_; }
  const Vector& mu() const { return mu_; }
  const Matrix& sigma() const { return sigma_; }
  double noise_var() const { return noise_var_; }
  const KernelSpec& base_kernel() const { return base_kernel_; }
  const MeanSpec& base_mean() const { return base_mean_; }
  const Vector& delta_mu() const { return delta_mu_; }
  const Matrix& delta_sigma() const { return delta_sigma_; }
  int iterations_run() const { return iterations_run_; }
  std::pair<double, double> final_step_norms() const { return final_step_norms_; }
  double jitter() const { return jitter_; }

  /// Per-iteration step norms and log-likelihood (not serialized).
  const std::vector<EmIterStats>& trace() const { return trace_; }

  /// Prior moments at arbitrary locations:
  ///   mean = mu_base(q) + W_q delta_mu
  ///   cov  = k_base(q, q') + W_q delta_sigma W_q'^T
  /// Recovers (mu, sigma) at the grid; reverts to the base GP far from it.
  std::pair<Vector, Matrix> moments(const std::vector<double>& query) const;
  Vector mean_at(const std::vector<double>& query) const;

  nlohmann::json to_json() const;
  static EmPrior from_json(const nlohmann::json& j);

 private:
  EmPrior() = default;

  std::vector<double> grid_;
  Vector mu_;
  Matrix sigma_;
  double noise_var_ = 1e-4;
  KernelSpec base_kernel_;
  MeanSpec base_mean_;
  Vector delta_mu_;
  Matrix delta_sigma_;
  int iterations_run_ = 0;
  std::pair<double, double> final_step_norms_{0.0, 0.0};
  double jitter_ = 1e-10;
  std::vector<EmIterStats> trace_;

  void refresh_residuals();
};

}  // namespace egp

#endif  // EGP_EM_PRIOR_HPP
