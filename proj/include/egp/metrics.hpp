#ifndef EGP_METRICS_HPP
#define EGP_METRICS_HPP

#include <map>
#include <string>
#include <vector>

#include "egp/dataset.hpp"
#include "egp/numerics.hpp"

namespace egp {

struct EvalRecord {
  std::string model;
  std::string dataset;
  double rmse = 0.0;
  double crps = 0.0;
};

double rmse(const std::vector<double>& pred_mean, const std::vector<double>& target);

/// Closed-form CRPS of a Gaussian marginal. std = 0 degenerates to |target - mean|.
double crps_gaussian(double mean, double std, double target);

/// Per model: geometric mean over datasets of (model crps / baseline crps).
/// The baseline maps to exactly 1.0.
std::map<std::string, double> crps_relative(const std::vector<EvalRecord>& records,
                                            const std::string& baseline_model);

enum class RankMetric { Rmse, Crps };

struct RankSummary {
  double mean_rank = 0.0;
  double std_error = 0.0;
};

/// Mid-rank ties; standard error of the per-dataset ranks across datasets.
std::map<std::string, RankSummary> average_rank(const std::vector<EvalRecord>& records,
                                                RankMetric metric);

struct SeasonalForecast {
  std::vector<double> means;
  std::vector<double> stds;  // constant; std of in-context seasonal differences
};

SeasonalForecast seasonal_naive_forecast(const SamplePath& context, int season,
                                         int horizon);

void save_records_csv(const std::vector<EvalRecord>& records, const std::string& path);
std::vector<EvalRecord> load_records_csv(const std::string& path);

}  // namespace egp

#endif  // EGP_METRICS_HPP
