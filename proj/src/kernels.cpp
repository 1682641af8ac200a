#include "egp/kernels.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

#include "egp/dataset.hpp"

namespace egp {

bool is_stationary(KernelFamily family) {
  switch (family) {
    case KernelFamily::Rbf:
    case KernelFamily::Matern52:
    case KernelFamily::Matern32:
    case KernelFamily::Periodic:
      return true;
    case KernelFamily::Linear:
    case KernelFamily::Quadratic:
      return false;
  }
  throw InvalidSpec("unknown kernel family");
}

std::string family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::Rbf: return "rbf";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Periodic: return "periodic";
    case KernelFamily::Linear: return "linear";
    case KernelFamily::Quadratic: return "quadratic";
  }
  throw InvalidSpec("unknown kernel family");
}

KernelFamily parse_family(const std::string& name) {
  if (name == "rbf") return KernelFamily::Rbf;
  if (name == "matern52") return KernelFamily::Matern52;
  if (name == "matern32") return KernelFamily::Matern32;
  if (name == "periodic") return KernelFamily::Periodic;
  if (name == "linear") return KernelFamily::Linear;
  if (name == "quadratic") return KernelFamily::Quadratic;
  throw InvalidSpec("unknown kernel family: " + name);
}

void KernelSpec::validate() const {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw InvalidSpec("kernel lengthscale must be positive");
  }
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw InvalidSpec("kernel amplitude must be positive");
  }
  if (family == KernelFamily::Periodic && (!(period > 0.0) || !std::isfinite(period))) {
    throw InvalidSpec("periodic kernel period must be positive");
  }
}

Vector MeanSpec::at(const std::vector<double>& xs) const {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = (*this)(xs[i]);
  return out;
}

double kernel_eval(const KernelSpec& spec, double x, double x2) {
  spec.validate();
  const double l = spec.lengthscale;
  const double a = spec.amplitude;
  switch (spec.family) {
    case KernelFamily::Rbf: {
      const double d = (x - x2) / l;
      return a * std::exp(-0.5 * d * d);
    }
    case KernelFamily::Matern52: {
      const double d = std::abs(x - x2) / l;
      const double s = std::sqrt(5.0) * d;
      return a * (1.0 + s + 5.0 * d * d / 3.0) * std::exp(-s);
    }
    case KernelFamily::Matern32: {
      const double d = std::abs(x - x2) / l;
      const double s = std::sqrt(3.0) * d;
      return a * (1.0 + s) * std::exp(-s);
    }
    case KernelFamily::Periodic: {
      const double s = std::sin(M_PI * std::abs(x - x2) / spec.period) / l;
      return a * std::exp(-2.0 * s * s);
    }
    case KernelFamily::Linear:
      return a * (1.0 + x * x2 / (l * l));
    case KernelFamily::Quadratic: {
      const double b = 1.0 + x * x2 / (l * l);
      return a * b * b;
    }
  }
  throw InvalidSpec("unknown kernel family");
}

PsdMatrix kernel_matrix(const KernelSpec& spec, const std::vector<double>& xs) {
  spec.validate();
  if (xs.empty()) throw EmptyGrid("kernel_matrix: empty location list");
  for (double x : xs) {
    if (!std::isfinite(x)) throw NonFinite("kernel_matrix: non-finite location");
  }
  const auto n = static_cast<Eigen::Index>(xs.size());
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_eval(spec, xs[i], xs[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return PsdMatrix(std::move(k));
}

Matrix cross_kernel_matrix(const KernelSpec& spec, const std::vector<double>& xs,
                           const std::vector<double>& zs) {
  spec.validate();
  if (xs.empty() || zs.empty()) {
    throw EmptyGrid("cross_kernel_matrix: empty location list");
  }
  Matrix k(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(zs.size()));
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      k(i, j) = kernel_eval(spec, xs[static_cast<std::size_t>(i)],
                            zs[static_cast<std::size_t>(j)]);
    }
  }
  return k;
}

namespace {

// Marginal log-likelihood of one mean-centered path under a zero-mean GP
// with kernel `spec` and relative nugget 1e-6 * amplitude.
double path_log_marginal(const KernelSpec& spec, const SamplePath& path) {
  const auto n = static_cast<Eigen::Index>(path.xs.size());
  Vector y(n);
  double mean = 0.0;
  for (double v : path.ys) mean += v;
  mean /= static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = path.ys[static_cast<std::size_t>(i)] - mean;

  Matrix k = kernel_matrix(spec, path.xs).mat();
  k.diagonal().array() += 1e-6 * spec.amplitude;
  const CholeskyFactor factor = robust_cholesky(k, 0.0);
  const Vector alpha = solve_psd(factor, y);
  return -0.5 * (y.dot(alpha) + log_det(factor) +
                 static_cast<double>(n) * std::log(2.0 * M_PI));
}

}  // namespace

KernelSpec fit_kernel_hyperparams(const KernelSpec& spec, const Corpus& corpus) {
  if (corpus.paths.empty()) throw EmptyCorpus("fit_kernel_hyperparams: empty corpus");

  // Pooled variance of all values sets the amplitude scale.
  double sum = 0.0, sumsq = 0.0;
  std::size_t count = 0;
  for (const auto& path : corpus.paths) {
    for (double v : path.ys) {
      sum += v;
      sumsq += v * v;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  double var = sumsq / static_cast<double>(count) - mean * mean;
  var = std::max(var, 1e-12);

  constexpr int kGridSize = 16;
  const double log_lo = std::log(1e-2);
  const double log_hi = std::log(1e2);
  const double step = (log_hi - log_lo) / (kGridSize - 1);

  KernelSpec best = spec;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGridSize; ++i) {
    for (int j = 0; j < kGridSize; ++j) {
      KernelSpec candidate = spec;
      candidate.lengthscale = std::exp(log_lo + step * i);
      candidate.amplitude = var * std::exp(log_lo + step * j);
      double score = 0.0;
      for (const auto& path : corpus.paths) score += path_log_marginal(candidate, path);
      if (score > best_score) {
        best_score = score;
        best = candidate;
      }
    }
  }
  return best;
}

void to_json(nlohmann::json& j, const KernelSpec& spec) {
  j = nlohmann::json{{"family", family_name(spec.family)},
                     {"lengthscale", spec.lengthscale},
                     {"amplitude", spec.amplitude}};
  if (spec.family == KernelFamily::Periodic) j["period"] = spec.period;
}

void from_json(const nlohmann::json& j, KernelSpec& spec) {
  spec.family = parse_family(j.at("family").get<std::string>());
  spec.lengthscale = j.at("lengthscale").get<double>();
  spec.amplitude = j.at("amplitude").get<double>();
  spec.period = j.value("period", 1.0);
  spec.validate();
}

void to_json(nlohmann::json& j, const MeanSpec& spec) {
  j = nlohmann::json{{"family", spec.family == MeanFamily::Zero ? "zero" : "constant"}};
  if (spec.family == MeanFamily::Constant) j["value"] = spec.value;
}

void from_json(const nlohmann::json& j, MeanSpec& spec) {
  const auto name = j.at("family").get<std::string>();
  if (name == "zero") {
    spec.family = MeanFamily::Zero;
    spec.value = 0.0;
  } else if (name == "constant") {
    spec.family = MeanFamily::Constant;
    spec.value = j.at("value").get<double>();
  } else {
    throw InvalidSpec("unknown mean family: " + name);
  }
}

}  // namespace egp
