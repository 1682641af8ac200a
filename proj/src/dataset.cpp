#include "egp/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "egp/rng.hpp"

namespace egp {

void SamplePath::validate() const {
  if (xs.size() != ys.size()) {
    throw DimensionMismatch("SamplePath: xs/ys length mismatch");
  }
  if (xs.empty()) throw PathTooShort("SamplePath: empty path");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw NonFinite("SamplePath: non-finite value at index " + std::to_string(i));
    }
    if (i > 0 && !(xs[i] > xs[i - 1])) {
      throw NonMonotoneTime("SamplePath: xs not strictly increasing at index " +
                            std::to_string(i));
    }
  }
}

void WindowConfig::validate() const {
  if (context_len < 1 || pred_len < 1 || max_windows < 1) {
    throw InvalidSpec("WindowConfig: context_len, pred_len, max_windows must be >= 1");
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& field, const std::string& file, int line,
                    int column) {
  const std::string t = trim(field);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ParseError(file + ":" + std::to_string(line) + ":" + std::to_string(column) +
                     ": cannot parse number '" + t + "'");
  }
  return v;
}

std::vector<SamplePath> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string header;
  if (!std::getline(in, header)) throw EmptyFile(path + ": empty file");

  const auto columns = split_csv_line(header);
  int t_col = -1, y_col = -1;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const std::string name = trim(columns[i]);
    if (name == "t") t_col = static_cast<int>(i);
    if (name == "y") y_col = static_cast<int>(i);
  }
  if (y_col < 0) throw ParseError(path + ":1: header must contain a 'y' column");

  SamplePath out;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) <= std::max(t_col, y_col)) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": too few columns");
    }
    const double y = parse_number(fields[y_col], path, line_no, y_col + 1);
    const double t = t_col >= 0 ? parse_number(fields[t_col], path, line_no, t_col + 1)
                                : static_cast<double>(out.xs.size());
    if (!out.xs.empty() && !(t > out.xs.back())) {
      throw NonMonotoneTime(path + ":" + std::to_string(line_no) +
                            ": time column not strictly increasing");
    }
    out.xs.push_back(t);
    out.ys.push_back(y);
  }
  if (out.xs.empty()) throw EmptyFile(path + ": no data rows");
  out.validate();
  return {out};
}

SamplePath path_from_json(const nlohmann::json& j, const std::string& where) {
  SamplePath p;
  try {
    p.ys = j.at("y").get<std::vector<double>>();
    if (j.contains("t")) {
      p.xs = j.at("t").get<std::vector<double>>();
    } else {
      p.xs.resize(p.ys.size());
      std::iota(p.xs.begin(), p.xs.end(), 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  if (p.xs.size() != p.ys.size()) {
    throw ParseError(where + ": t/y length mismatch");
  }
  p.validate();
  return p;
}

std::vector<SamplePath> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::vector<SamplePath> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(path_from_json(j, path + ":" + std::to_string(line_no)));
  }
  if (out.empty()) throw EmptyFile(path + ": no records");
  return out;
}

}  // namespace

std::vector<SamplePath> load_series(const std::string& path, SeriesFormat format) {
  return format == SeriesFormat::Csv ? load_csv(path) : load_jsonl(path);
}

namespace {

// Largest-remainder apportionment of `total` among weights, capped per entry.
std::vector<int> apportion(const std::vector<double>& weights,
                           const std::vector<int>& caps, int total) {
  const std::size_t n = weights.size();
  std::vector<int> quota(n, 0);
  int remaining = total;
  std::vector<bool> open(n, true);
  while (remaining > 0) {
    double open_weight = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (open[i]) open_weight += weights[i];
    }
    if (open_weight <= 0.0) break;
    // fractional shares for the still-open entries
    std::vector<std::pair<double, std::size_t>> remainders;
    std::vector<int> add(n, 0);
    int assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!open[i]) continue;
      const double share = remaining * weights[i] / open_weight;
      add[i] = static_cast<int>(std::floor(share));
      remainders.emplace_back(share - add[i], i);
      assigned += add[i];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;  // deterministic tie-break by index
    });
    for (std::size_t k = 0; assigned < remaining && k < remainders.size(); ++k) {
      ++add[remainders[k].second];
      ++assigned;
    }
    bool progress = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (add[i] == 0) continue;
      const int granted = std::min(add[i], caps[i] - quota[i]);
      quota[i] += granted;
      remaining -= granted;
      progress = granted > 0 || progress;
      if (quota[i] >= caps[i]) open[i] = false;
    }
    if (!progress) break;
  }
  return quota;
}

// Partial Fisher-Yates: k distinct values from 0..n-1, returned sorted.
std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Corpus extract_windows(const std::vector<SamplePath>& series, const WindowConfig& cfg) {
  cfg.validate();
  const int len = cfg.window_len();

  std::vector<std::size_t> usable;
  std::vector<double> weights;
  std::vector<int> caps;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (static_cast<int>(series[i].size()) >= len) {
      usable.push_back(i);
      weights.push_back(static_cast<double>(series[i].size()));
      caps.push_back(static_cast<int>(series[i].size()) - len + 1);
    }
  }
  if (usable.empty()) {
    throw NoUsableSeries("extract_windows: no series of length >= " +
                         std::to_string(len));
  }

  const long long total_caps = std::accumulate(caps.begin(), caps.end(), 0LL);
  const int target = static_cast<int>(
      std::min<long long>(cfg.max_windows, total_caps));
  const std::vector<int> quota = apportion(weights, caps, target);

  Corpus out;
  for (std::size_t u = 0; u < usable.size(); ++u) {
    if (quota[u] == 0) continue;
    const SamplePath& src = series[usable[u]];
    Rng rng(split_stream(cfg.seed, usable[u]));
    const auto starts = sample_without_replacement(caps[u], quota[u], rng);
    for (int start : starts) {
      SamplePath w;
      w.xs.reserve(len);
      w.ys.reserve(len);
      const double x0 = src.xs[static_cast<std::size_t>(start)];
      for (int k = 0; k < len; ++k) {
        w.xs.push_back(src.xs[static_cast<std::size_t>(start + k)] - x0);
        w.ys.push_back(src.ys[static_cast<std::size_t>(start + k)]);
      }
      out.paths.push_back(std::move(w));
    }
  }
  return out;
}

Corpus transform_log_align(const Corpus& corpus) {
  Corpus out;
  out.meta = corpus.meta;
  out.paths.reserve(corpus.paths.size());
  for (std::size_t i = 0; i < corpus.paths.size(); ++i) {
    const SamplePath& p = corpus.paths[i];
    for (double v : p.ys) {
      if (!(v > 0.0)) {
        throw NonPositiveValue("transform_log_align: non-positive value in path " +
                               std::to_string(i));
      }
    }
    SamplePath t;
    t.xs = p.xs;
    t.ys.reserve(p.ys.size());
    const double base = std::log(p.ys.front());
    for (double v : p.ys) t.ys.push_back(std::log(v) - base);
    t.ys.front() = 0.0;  // exact zero, not just log(y0)-log(y0)
    out.paths.push_back(std::move(t));
  }
  return out;
}

Corpus truncate_paths(const Corpus& corpus, double full_fraction, double lo,
                      double hi, std::uint64_t seed) {
  if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) {
    throw InvalidSpec("truncate_paths: need 0 <= lo <= hi <= 1");
  }
  full_fraction = std::clamp(full_fraction, 0.0, 1.0);
  const auto k = corpus.paths.size();
  const auto keep_count =
      static_cast<std::size_t>(std::floor(full_fraction * static_cast<double>(k)));

  Rng rng(split_stream(seed, 0));
  std::vector<int> keep_idx =
      sample_without_replacement(static_cast<int>(k), static_cast<int>(keep_count), rng);
  std::vector<bool> keep(k, false);
  for (int i : keep_idx) keep[static_cast<std::size_t>(i)] = true;

  Corpus out;
  out.meta = corpus.meta;
  out.paths.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const SamplePath& p = corpus.paths[i];
    if (keep[i]) {
      out.paths.push_back(p);
      continue;
    }
    Rng path_rng(split_stream(seed, i + 1));
    const double u = path_rng.uniform(lo, hi);
    auto n = static_cast<std::size_t>(std::ceil(u * static_cast<double>(p.size())));
    n = std::clamp<std::size_t>(n, 1, p.size());
    SamplePath t;
    t.xs.assign(p.xs.begin(), p.xs.begin() + static_cast<std::ptrdiff_t>(n));
    t.ys.assign(p.ys.begin(), p.ys.begin() + static_cast<std::ptrdiff_t>(n));
    out.paths.push_back(std::move(t));
  }
  return out;
}

std::pair<SamplePath, SamplePath> split_context_target(const SamplePath& path,
                                                       double observed_fraction) {
  if (path.size() < 2) throw PathTooShort("split_context_target: need >= 2 points");
  if (!(observed_fraction > 0.0 && observed_fraction < 1.0)) {
    throw InvalidSpec("split_context_target: fraction must be in (0, 1)");
  }
  auto n = static_cast<std::size_t>(
      std::ceil(observed_fraction * static_cast<double>(path.size())));
  n = std::clamp<std::size_t>(n, 1, path.size() - 1);
  SamplePath context, target;
  context.xs.assign(path.xs.begin(), path.xs.begin() + static_cast<std::ptrdiff_t>(n));
  context.ys.assign(path.ys.begin(), path.ys.begin() + static_cast<std::ptrdiff_t>(n));
  target.xs.assign(path.xs.begin() + static_cast<std::ptrdiff_t>(n), path.xs.end());
  target.ys.assign(path.ys.begin() + static_cast<std::ptrdiff_t>(n), path.ys.end());
  return {std::move(context), std::move(target)};
}

void save_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("save_corpus_jsonl: cannot open " + path);
  for (std::size_t i = 0; i < corpus.paths.size(); ++i) {
    nlohmann::json j{{"id", std::to_string(i)},
                     {"t", corpus.paths[i].xs},
                     {"y", corpus.paths[i].ys}};
    out << j.dump() << '\n';
  }
}

Corpus load_corpus_jsonl(const std::string& path) {
  Corpus out;
  out.paths = load_series(path, SeriesFormat::Jsonl);
  return out;
}

}  // namespace egp
