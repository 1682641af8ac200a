#include "egp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace egp {

double rmse(const std::vector<double>& pred_mean, const std::vector<double>& target) {
  if (pred_mean.size() != target.size() || pred_mean.empty()) {
    throw DimensionMismatch("rmse: length mismatch or empty input");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double e = pred_mean[i] - target[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(target.size()));
}

double crps_gaussian(double mean, double std, double target) {
  if (std < 0.0) throw InvalidSpec("crps_gaussian: negative std");
  if (std == 0.0) return std::abs(target - mean);
  const double z = (target - mean) / std;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return std * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(M_PI));
}

std::map<std::string, double> crps_relative(const std::vector<EvalRecord>& records,
                                            const std::string& baseline_model) {
  std::map<std::string, double> baseline_by_dataset;
  for (const auto& r : records) {
    if (r.model == baseline_model) baseline_by_dataset[r.dataset] = r.crps;
  }
  std::map<std::string, std::vector<double>> ratios;
  for (const auto& r : records) {
    const auto it = baseline_by_dataset.find(r.dataset);
    if (it == baseline_by_dataset.end()) {
      throw MissingBaseline("crps_relative: no baseline record for dataset " +
                            r.dataset);
    }
    ratios[r.model].push_back(r.crps / it->second);
  }
  std::map<std::string, double> out;
  for (const auto& [model, values] : ratios) {
    if (model == baseline_model) {
      out[model] = 1.0;
      continue;
    }
    double log_sum = 0.0;
    bool zero = false;
    for (double v : values) {
      if (v <= 0.0) zero = true;
      else log_sum += std::log(v);
    }
    out[model] = zero ? 0.0 : std::exp(log_sum / static_cast<double>(values.size()));
  }
  return out;
}

std::map<std::string, RankSummary> average_rank(const std::vector<EvalRecord>& records,
                                                RankMetric metric) {
  std::set<std::string> models, datasets;
  std::map<std::pair<std::string, std::string>, double> value;
  for (const auto& r : records) {
    models.insert(r.model);
    datasets.insert(r.dataset);
    value[{r.model, r.dataset}] = metric == RankMetric::Rmse ? r.rmse : r.crps;
  }
  for (const auto& m : models) {
    for (const auto& d : datasets) {
      if (!value.count({m, d})) {
        throw IncompleteGrid("average_rank: model " + m + " missing on dataset " + d);
      }
    }
  }

  std::map<std::string, std::vector<double>> ranks;
  for (const auto& d : datasets) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& m : models) scored.emplace_back(value[{m, d}], m);
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // mid-rank for ties
    std::size_t i = 0;
    while (i < scored.size()) {
      std::size_t j = i;
      while (j + 1 < scored.size() && scored[j + 1].first == scored[i].first) ++j;
      const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) ranks[scored[k].second].push_back(rank);
      i = j + 1;
    }
  }

  std::map<std::string, RankSummary> out;
  const auto n = static_cast<double>(datasets.size());
  for (const auto& [model, rs] : ranks) {
    double mean = 0.0;
    for (double r : rs) mean += r;
    mean /= n;
    double se = 0.0;
    if (rs.size() >= 2) {
      double ss = 0.0;
      for (double r : rs) ss += (r - mean) * (r - mean);
      se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    out[model] = {mean, se};
  }
  return out;
}

SeasonalForecast seasonal_naive_forecast(const SamplePath& context, int season,
                                         int horizon) {
  if (season < 1 || horizon < 1) {
    throw InvalidSpec("seasonal_naive_forecast: season and horizon must be >= 1");
  }
  const auto len = static_cast<int>(context.size());
  if (len < season) {
    throw ContextTooShort("seasonal_naive_forecast: context length " +
                          std::to_string(len) + " < season " + std::to_string(season));
  }

  SeasonalForecast out;
  out.means.reserve(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    out.means.push_back(context.ys[static_cast<std::size_t>(len - season + h % season)]);
  }

  // spread of the seasonal differences in the context (population std)
  double sd = 0.0;
  const int diffs = len - season;
  if (diffs > 0) {
    double mean = 0.0;
    std::vector<double> d(static_cast<std::size_t>(diffs));
    for (int i = 0; i < diffs; ++i) {
      d[static_cast<std::size_t>(i)] = context.ys[static_cast<std::size_t>(i + season)] -
                                       context.ys[static_cast<std::size_t>(i)];
      mean += d[static_cast<std::size_t>(i)];
    }
    mean /= diffs;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    sd = std::sqrt(ss / diffs);
  }
  sd = std::max(sd, 1e-8);
  out.stds.assign(static_cast<std::size_t>(horizon), sd);
  return out;
}

void save_records_csv(const std::vector<EvalRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("save_records_csv: cannot open " + path);
  out << "model,dataset,rmse,crps\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r.rmse, r.crps);
    out << r.model << ',' << r.dataset << ',' << buf << '\n';
  }
}

std::vector<EvalRecord> load_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw EmptyFile(path + ": empty file");
  std::vector<EvalRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    EvalRecord r;
    std::string rmse_s, crps_s;
    if (!std::getline(ss, r.model, ',') || !std::getline(ss, r.dataset, ',') ||
        !std::getline(ss, rmse_s, ',') || !std::getline(ss, crps_s)) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed record");
    }
    r.rmse = std::stod(rmse_s);
    r.crps = std::stod(crps_s);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace egp
