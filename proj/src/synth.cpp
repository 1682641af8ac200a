#include "egp/synth.hpp"

#include <cmath>

#include "egp/numerics.hpp"
#include "egp/rng.hpp"

namespace egp {

Corpus sample_gp_corpus(const KernelSpec& kernel, const MeanSpec& mean,
                        const std::vector<double>& grid, int num_paths,
                        std::uint64_t seed) {
  if (num_paths < 1) throw InvalidSpec("sample_gp_corpus: num_paths must be >= 1");
  if (grid.empty()) throw EmptyGrid("sample_gp_corpus: empty grid");
  const auto m = static_cast<Eigen::Index>(grid.size());

  const CholeskyFactor factor = robust_cholesky(kernel_matrix(kernel, grid), 1e-10);
  const Vector mean_vec = mean.at(grid);

  Corpus out;
  out.meta["source"] = "gp:" + family_name(kernel.family);
  out.paths.reserve(static_cast<std::size_t>(num_paths));
  Vector z(m);
  for (int i = 0; i < num_paths; ++i) {
    Rng rng(split_stream(seed, static_cast<std::uint64_t>(i)));
    for (Eigen::Index j = 0; j < m; ++j) z[j] = rng.normal();
    const Vector y = mean_vec + factor.lower * z;
    SamplePath path;
    path.xs = grid;
    path.ys.assign(y.data(), y.data() + y.size());
    out.paths.push_back(std::move(path));
  }
  return out;
}

Corpus sample_gbm_corpus(double mu, double sigma, double s0, int steps, double dt,
                         int num_paths, std::uint64_t seed) {
  if (num_paths < 1 || steps < 1) {
    throw InvalidSpec("sample_gbm_corpus: num_paths and steps must be >= 1");
  }
  if (!(s0 > 0.0) || !(dt > 0.0) || sigma < 0.0) {
    throw InvalidSpec("sample_gbm_corpus: need s0 > 0, dt > 0, sigma >= 0");
  }

  const double drift = (mu - 0.5 * sigma * sigma) * dt;
  const double diffusion = sigma * std::sqrt(dt);

  Corpus out;
  out.meta["source"] = "gbm";
  out.paths.reserve(static_cast<std::size_t>(num_paths));
  for (int i = 0; i < num_paths; ++i) {
    Rng rng(split_stream(seed, static_cast<std::uint64_t>(i)));
    SamplePath path;
    path.xs.reserve(static_cast<std::size_t>(steps + 1));
    path.ys.reserve(static_cast<std::size_t>(steps + 1));
    double log_s = std::log(s0);
    path.xs.push_back(0.0);
    path.ys.push_back(s0);
    for (int k = 1; k <= steps; ++k) {
      log_s += drift + diffusion * rng.normal();
      path.xs.push_back(k * dt);
      path.ys.push_back(std::exp(log_s));
    }
    out.paths.push_back(std::move(path));
  }
  return out;
}

}  // namespace egp
