#ifndef EGP_SYNTH_HPP
#define EGP_SYNTH_HPP

#include <cstdint>
#include <vector>

#include "egp/dataset.hpp"
#include "egp/kernels.hpp"

namespace egp {

/// Exact GP samples on `grid` (zero mean unless `mean` says otherwise).
Corpus sample_gp_corpus(const KernelSpec& kernel, const MeanSpec& mean,
                        const std::vector<double>& grid, int num_paths,
                        std::uint64_t seed);

/// Geometric Brownian motion paths, simulated exactly in log space:
/// log S_{t+dt} = log S_t + (mu - sigma^2/2) dt + sigma sqrt(dt) z.
Corpus sample_gbm_corpus(double mu, double sigma, double s0, int steps, double dt,
                         int num_paths, std::uint64_t seed);

}  // namespace egp

#endif  // EGP_SYNTH_HPP
