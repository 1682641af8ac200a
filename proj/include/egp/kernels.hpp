#ifndef EGP_KERNELS_HPP
#define EGP_KERNELS_HPP

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "egp/numerics.hpp"

namespace egp {

struct Corpus;  // dataset.hpp

enum class KernelFamily { Rbf, Matern52, Matern32, Periodic, Linear, Quadratic };

bool is_stationary(KernelFamily family);
std::string family_name(KernelFamily family);
KernelFamily parse_family(const std::string& name);

/// Parametric base kernel over 1-D inputs (the time axis).
///
/// Stationary families (rbf, matern52, matern32, periodic):
///   k(x, x') depends on |x - x'| only and k(x, x) = amplitude.
/// Non-stationary families:
///   linear      k(x, x') = amplitude * (1 + x x' / lengthscale^2)
///   quadratic   k(x, x') = amplitude * (1 + x x' / lengthscale^2)^2
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern52;
  double lengthscale = 1.0;
  double amplitude = 1.0;
  double period = 1.0;  // Periodic only

  void validate() const;
};

enum class MeanFamily { Zero, Constant };

struct MeanSpec {
  MeanFamily family = MeanFamily::Zero;
  double value = 0.0;  // Constant only

  double operator()(double) const {
    return family == MeanFamily::Constant ? value : 0.0;
  }
  Vector at(const std::vector<double>& xs) const;
};

double kernel_eval(const KernelSpec& spec, double x, double x2);

PsdMatrix kernel_matrix(const KernelSpec& spec, const std::vector<double>& xs);

Matrix cross_kernel_matrix(const KernelSpec& spec, const std::vector<double>& xs,
                           const std::vector<double>& zs);

/// Grid search for (lengthscale, amplitude) maximizing the summed per-path
/// marginal log-likelihood of a zero-mean GP on mean-centered path values.
/// 16 x 16 log-spaced grid: lengthscales in [1e-2, 1e2], amplitudes in
/// [1e-2, 1e2] x pooled data variance. Deterministic; other fields of `spec`
/// (family, period) are kept.
KernelSpec fit_kernel_hyperparams(const KernelSpec& spec, const Corpus& corpus);

void to_json(nlohmann::json& j, const KernelSpec& spec);
void from_json(const nlohmann::json& j, KernelSpec& spec);
void to_json(nlohmann::json& j, const MeanSpec& spec);
void from_json(const nlohmann::json& j, MeanSpec& spec);

}  // namespace egp

#endif  // EGP_KERNELS_HPP
