#ifndef EGP_DATASET_HPP
#define EGP_DATASET_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "egp/errors.hpp"

namespace egp {

/// One discretized realization of the process.
struct SamplePath {
  std::vector<double> xs;  // strictly increasing
  std::vector<double> ys;  // same length as xs

  std::size_t size() const { return xs.size(); }
  void validate() const;
};

/// A collection of independent sample paths ("historical data").
struct Corpus {
  std::vector<SamplePath> paths;
  std::map<std::string, std::string> meta;
};

struct WindowConfig {
  int context_len = 1;
  int pred_len = 1;
  int max_windows = 1;
  std::uint64_t seed = 0;

  int window_len() const { return context_len + pred_len; }
  void validate() const;
};

enum class SeriesFormat { Csv, Jsonl };

/// CSV: header row with columns "t" (optional) and "y"; one series per file.
/// JSONL: one {"id", "t"?, "y"} object per line; one series per line.
/// Missing "t" means 0..n-1.
std::vector<SamplePath> load_series(const std::string& path, SeriesFormat format);

/// Sliding-window extraction. Per-series window quotas are proportional to
/// series length (largest-remainder rounding); start offsets are sampled
/// without replacement using substream split_stream(seed, series_index).
/// Window xs are re-based to start at 0.
Corpus extract_windows(const std::vector<SamplePath>& series, const WindowConfig& cfg);

/// ys -> log(ys) - log(ys[0]); every path then starts at exactly 0.
Corpus transform_log_align(const Corpus& corpus);

/// Keeps a uniformly chosen floor(full_fraction * K) subset untouched and
/// truncates every other path to its first ceil(u * len) points,
/// u ~ Uniform(lo, hi). No path is reduced below one point.
Corpus truncate_paths(const Corpus& corpus, double full_fraction, double lo,
                      double hi, std::uint64_t seed);

/// context = first ceil(fraction * len) points (capped at len - 1 so the
/// target is never empty), target = remainder.
std::pair<SamplePath, SamplePath> split_context_target(const SamplePath& path,
                                                       double observed_fraction);

void save_corpus_jsonl(const Corpus& corpus, const std::string& path);
Corpus load_corpus_jsonl(const std::string& path);

}  // namespace egp

#endif  // EGP_DATASET_HPP
