#include "egp/em_prior.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace egp {

namespace {

std::atomic<std::uint64_t> g_conditioning_count{0};

int worker_count(std::size_t num_tasks) {
  int n = 0;
  if (const char* env = std::getenv("EGP_THREADS")) {
    n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  return static_cast<int>(std::min<std::size_t>(n, num_tasks));
}

// Deterministic pairwise tree sum over term(lo..hi-1).
template <typename F>
auto pairwise_sum(std::size_t lo, std::size_t hi, F&& term) {
  if (hi - lo == 1) return term(lo);
  const std::size_t mid = lo + (hi - lo) / 2;
  auto left = pairwise_sum(lo, mid, term);
  auto right = pairwise_sum(mid, hi, term);
  left += right;
  return left;
}

struct TaskMoments {
  Vector mean;
  Matrix cov;
  double loglik = 0.0;
};

TaskMoments condition_direct(const Vector& mu, const Matrix& sigma, double noise_var,
                             const EmTask& task) {
  const auto n = task.y.size();
  const Matrix cross = sigma * task.weights.transpose();        // M x N
  Matrix obs_cov = task.weights * cross;                        // N x N
  obs_cov.diagonal().array() += noise_var;

  Eigen::LLT<Matrix> llt(obs_cov);
  if (llt.info() != Eigen::Success) {
    throw NotPsd("e_step: observed covariance not factorizable; "
                 "noise_var is likely too small for the conditioning");
  }
  const Matrix lower = llt.matrixL();
  const Vector resid = task.y - task.weights * mu;
  const Vector alpha = llt.solve(resid);

  TaskMoments out;
  out.mean = mu + cross * alpha;
  const Matrix v = lower.triangularView<Eigen::Lower>().solve(cross.transpose());
  Matrix cov = sigma - v.transpose() * v;
  out.cov = 0.5 * (cov + cov.transpose());
  const double logdet = 2.0 * lower.diagonal().array().log().sum();
  out.loglik = -0.5 * (static_cast<double>(n) * std::log(2.0 * M_PI) + logdet +
                       resid.dot(alpha));
  return out;
}

// N_i > M path: only M x M factorizations, via the matrix inversion lemma.
TaskMoments condition_woodbury(const Vector& mu, const Matrix& sigma,
                               const CholeskyFactor& sigma_factor, double noise_var,
                               const EmTask& task) {
  const auto n = task.y.size();
  const auto m = mu.size();
  const Matrix& ls = sigma_factor.lower;
  const double s2 = noise_var;

  const Matrix gram = task.weights.transpose() * task.weights;  // M x M
  const Vector resid = task.y - task.weights * mu;
  const Vector b = task.weights.transpose() * resid;

  Matrix inner = ls.transpose() * gram * ls / s2;
  inner.diagonal().array() += 1.0;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw NotPsd("e_step (woodbury): inner system not factorizable");
  }
  const Matrix lb = llt.matrixL();

  // Sigma_XX^-1 = I/s2 - W ls inner^-1 ls^T W^T / s2^2  (sandwiched forms below)
  const Vector t1 = ls.transpose() * b;
  const Vector t2 = llt.solve(t1);
  const Vector info_vec = b / s2 - gram * (ls * t2) / (s2 * s2);

  const Matrix p = lb.triangularView<Eigen::Lower>().solve(Matrix(ls.transpose() * gram));
  const Matrix t_mat = gram / s2 - p.transpose() * p / (s2 * s2);

  TaskMoments out;
  out.mean = mu + sigma * info_vec;
  Matrix cov = sigma - sigma * t_mat * sigma;
  out.cov = 0.5 * (cov + cov.transpose());

  const Vector t1w = lb.triangularView<Eigen::Lower>().solve(t1);
  const double quad = resid.squaredNorm() / s2 - t1w.squaredNorm() / (s2 * s2);
  const double logdet = static_cast<double>(n) * std::log(s2) +
                        2.0 * lb.diagonal().array().log().sum();
  out.loglik = -0.5 * (static_cast<double>(n) * std::log(2.0 * M_PI) + logdet + quad);
  (void)m;
  return out;
}

}  // namespace

void EmConfig::validate() const {
  if (max_iters < 1) throw InvalidSpec("EmConfig: max_iters must be >= 1");
  if (!(tol > 0.0)) throw InvalidSpec("EmConfig: tol must be positive");
  if (!(noise_var > 0.0)) throw InvalidSpec("EmConfig: noise_var must be positive");
  if (!(jitter >= 0.0)) throw InvalidSpec("EmConfig: jitter must be non-negative");
}

Matrix interp_weights(const KernelSpec& base_kernel, const std::vector<double>& xs,
                      const std::vector<double>& grid, double jitter) {
  if (xs.empty()) throw EmptyGrid("interp_weights: empty query locations");
  if (grid.empty()) throw EmptyGrid("interp_weights: empty grid");
  const CholeskyFactor factor = robust_cholesky(kernel_matrix(base_kernel, grid), jitter);
  const Matrix cross = cross_kernel_matrix(base_kernel, grid, xs);  // M x N
  return solve_psd(factor, cross).transpose();                      // N x M
}

std::uint64_t e_step_conditioning_count() { return g_conditioning_count.load(); }
void reset_e_step_conditioning_count() { g_conditioning_count.store(0); }

EStepResult e_step(const Vector& prior_mu, const PsdMatrix& prior_sigma,
                   double noise_var, const std::vector<EmTask>& tasks) {
  if (!(noise_var > 0.0)) throw InvalidSpec("e_step: noise_var must be positive");
  const auto m = prior_mu.size();
  if (prior_sigma.dim() != m) {
    throw DimensionMismatch("e_step: mu/sigma dimension mismatch");
  }
  for (const EmTask& task : tasks) {
    if (task.weights.rows() != task.y.size() ||
        (task.y.size() > 0 && task.weights.cols() != m)) {
      throw DimensionMismatch("e_step: task weight/observation shape mismatch");
    }
  }

  const Matrix& sigma = prior_sigma.mat();

  // The Woodbury route needs a factor of Sigma itself; compute it once,
  // and only when some task is large enough to use it.
  bool any_large = false;
  for (const EmTask& task : tasks) any_large |= task.y.size() > m;
  CholeskyFactor sigma_factor;
  if (any_large) sigma_factor = robust_cholesky(sigma, 0.0);

  EStepResult result;
  result.means.resize(tasks.size());
  result.covs.resize(tasks.size());
  std::vector<double> logliks(tasks.size(), 0.0);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        const EmTask& task = tasks[i];
        if (task.y.size() == 0) {
          result.means[i] = prior_mu;
          result.covs[i] = sigma;
          continue;
        }
        TaskMoments moments =
            task.y.size() > m
                ? condition_woodbury(prior_mu, sigma, sigma_factor, noise_var, task)
                : condition_direct(prior_mu, sigma, noise_var, task);
        g_conditioning_count.fetch_add(1, std::memory_order_relaxed);
        result.means[i] = std::move(moments.mean);
        result.covs[i] = std::move(moments.cov);
        logliks[i] = moments.loglik;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  const int workers = worker_count(tasks.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  result.loglik =
      tasks.empty() ? 0.0
                    : pairwise_sum(0, logliks.size(), [&](std::size_t i) {
                        return logliks[i];
                      });
  return result;
}

std::pair<Vector, PsdMatrix> m_step(const EStepResult& e) {
  const auto k = e.means.size();
  if (k == 0) throw EmptyCorpus("m_step: no tasks");
  const double inv_k = 1.0 / static_cast<double>(k);

  Vector mu = pairwise_sum(0, k, [&](std::size_t i) { return e.means[i]; }) * inv_k;
  Matrix sigma = pairwise_sum(0, k, [&](std::size_t i) {
                   const Vector d = e.means[i] - mu;
                   return Matrix(e.covs[i] + d * d.transpose());
                 }) *
                 inv_k;
  sigma = 0.5 * (sigma + sigma.transpose());
  return {std::move(mu), PsdMatrix(std::move(sigma))};
}

double estimate_noise_update(const EStepResult& e, const std::vector<EmTask>& tasks) {
  if (e.means.size() != tasks.size()) {
    throw DimensionMismatch("estimate_noise_update: result/task count mismatch");
  }
  double total = 0.0;
  std::size_t points = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const EmTask& task = tasks[i];
    if (task.y.size() == 0) continue;
    const Vector resid = task.y - task.weights * e.means[i];
    const Matrix wc = task.weights * e.covs[i] * task.weights.transpose();
    total += resid.squaredNorm() + wc.trace();
    points += static_cast<std::size_t>(task.y.size());
  }
  if (points == 0) return 1e-12;
  return std::max(total / static_cast<double>(points), 1e-12);
}

EmPrior EmPrior::fit(const Corpus& corpus, const std::vector<double>& grid,
                     const KernelSpec& base_kernel, const MeanSpec& base_mean,
                     const EmConfig& cfg) {
  cfg.validate();
  base_kernel.validate();
  if (corpus.paths.empty()) throw EmptyCorpus("EmPrior::fit: empty corpus");
  if (grid.empty()) throw EmptyGrid("EmPrior::fit: empty grid");

  const CholeskyFactor grid_factor =
      robust_cholesky(kernel_matrix(base_kernel, grid), cfg.jitter);

  std::vector<EmTask> tasks;
  tasks.reserve(corpus.paths.size());
  for (const SamplePath& path : corpus.paths) {
    path.validate();
    EmTask task;
    const Matrix cross = cross_kernel_matrix(base_kernel, grid, path.xs);
    task.weights = solve_psd(grid_factor, cross).transpose();
    task.y = Eigen::Map<const Vector>(path.ys.data(),
                                      static_cast<Eigen::Index>(path.ys.size()));
    tasks.push_back(std::move(task));
  }

  EmPrior prior;
  prior.grid_ = grid;
  prior.base_kernel_ = base_kernel;
  prior.base_mean_ = base_mean;
  prior.jitter_ = cfg.jitter;
  prior.mu_ = base_mean.at(grid);
  prior.sigma_ = kernel_matrix(base_kernel, grid).mat();

  double noise_var = cfg.noise_var;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const EStepResult e = e_step(prior.mu_, PsdMatrix(prior.sigma_), noise_var, tasks);
    auto [mu_next, sigma_next] = m_step(e);
    if (cfg.estimate_noise) noise_var = estimate_noise_update(e, tasks);

    const double mu_step = (mu_next - prior.mu_).norm();
    const double sigma_step = (sigma_next.mat() - prior.sigma_).norm();
    prior.mu_ = std::move(mu_next);
    prior.sigma_ = sigma_next.mat();
    prior.iterations_run_ = iter;
    prior.final_step_norms_ = {mu_step, sigma_step};
    prior.trace_.push_back({iter, mu_step, sigma_step, e.loglik, noise_var});
    if (std::max(mu_step, sigma_step) < cfg.tol) break;
  }
  prior.noise_var_ = noise_var;
  prior.refresh_residuals();
  return prior;
}

void EmPrior::refresh_residuals() {
  delta_mu_ = mu_ - base_mean_.at(grid_);
  Matrix base = kernel_matrix(base_kernel_, grid_).mat();
  delta_sigma_ = sigma_ - base;
  delta_sigma_ = 0.5 * (delta_sigma_ + delta_sigma_.transpose());
}

std::pair<Vector, Matrix> EmPrior::moments(const std::vector<double>& query) const {
  const Matrix w = interp_weights(base_kernel_, query, grid_, jitter_);
  Vector mean = base_mean_.at(query) + w * delta_mu_;
  Matrix cov = kernel_matrix(base_kernel_, query).mat() +
               w * delta_sigma_ * w.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return {std::move(mean), std::move(cov)};
}

Vector EmPrior::mean_at(const std::vector<double>& query) const {
  const Matrix w = interp_weights(base_kernel_, query, grid_, jitter_);
  return base_mean_.at(query) + w * delta_mu_;
}

nlohmann::json EmPrior::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["kind"] = "em";
  j["grid"] = grid_;
  j["mu"] = std::vector<double>(mu_.data(), mu_.data() + mu_.size());
  std::vector<double> sigma_flat;
  sigma_flat.reserve(static_cast<std::size_t>(sigma_.size()));
  for (Eigen::Index r = 0; r < sigma_.rows(); ++r) {
    for (Eigen::Index c = 0; c < sigma_.cols(); ++c) sigma_flat.push_back(sigma_(r, c));
  }
  j["sigma"] = sigma_flat;  // row-major
  j["noise_var"] = noise_var_;
  j["base_kernel"] = base_kernel_;
  j["base_mean"] = base_mean_;
  j["iterations_run"] = iterations_run_;
  j["jitter"] = jitter_;
  return j;
}

EmPrior EmPrior::from_json(const nlohmann::json& j) {
  if (j.value("kind", "em") != "em") {
    throw ParseError("EmPrior::from_json: kind is not 'em'");
  }
  if (j.at("version").get<int>() != 1) {
    throw ParseError("EmPrior::from_json: unsupported version");
  }
  EmPrior prior;
  prior.grid_ = j.at("grid").get<std::vector<double>>();
  const auto m = static_cast<Eigen::Index>(prior.grid_.size());
  const auto mu = j.at("mu").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(mu.size()) != m) {
    throw ParseError("EmPrior::from_json: mu length mismatch");
  }
  prior.mu_ = Eigen::Map<const Vector>(mu.data(), m);
  const auto sigma_flat = j.at("sigma").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(sigma_flat.size()) != m * m) {
    throw ParseError("EmPrior::from_json: sigma length mismatch");
  }
  prior.sigma_.resize(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      prior.sigma_(r, c) = sigma_flat[static_cast<std::size_t>(r * m + c)];
    }
  }
  prior.noise_var_ = j.at("noise_var").get<double>();
  prior.base_kernel_ = j.at("base_kernel").get<KernelSpec>();
  prior.base_mean_ = j.at("base_mean").get<MeanSpec>();
  prior.iterations_run_ = j.at("iterations_run").get<int>();
  prior.jitter_ = j.value("jitter", 1e-10);
  // delta_mu / delta_sigma are derived, never stored
  prior.refresh_residuals();
  return prior;
}

}  // namespace egp
