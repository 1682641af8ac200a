#include "egp/empirical_prior.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace egp {

namespace {

// Linear interpolation of (xs, ys) at a single query point, clamped.
double interp_one(const std::vector<double>& xs, const double* ys, double q) {
  if (q <= xs.front()) return ys[0];
  if (q >= xs.back()) return ys[xs.size() - 1];
  const auto it = std::upper_bound(xs.begin(), xs.end(), q);
  const auto hi = static_cast<std::size_t>(it - xs.begin());
  const auto lo = hi - 1;
  const double w = (q - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + w * (ys[hi] - ys[lo]);
}

}  // namespace

std::vector<double> interpolate(const SamplePath& path,
                                const std::vector<double>& query) {
  path.validate();
  std::vector<double> out;
  out.reserve(query.size());
  for (double q : query) out.push_back(interp_one(path.xs, path.ys.data(), q));
  return out;
}

DensePrior DensePrior::fit(const Corpus& corpus, const std::vector<double>& grid) {
  const auto k = static_cast<Eigen::Index>(corpus.paths.size());
  if (k < 2) throw TooFewPaths("DensePrior::fit: need at least 2 paths");
  if (grid.empty()) throw EmptyGrid("DensePrior::fit: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw InvalidSpec("DensePrior::fit: grid must be strictly increasing");
    }
  }

  const auto m = static_cast<Eigen::Index>(grid.size());
  Matrix y(k, m);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto row = interpolate(corpus.paths[static_cast<std::size_t>(i)], grid);
    for (Eigen::Index j = 0; j < m; ++j) y(i, j) = row[static_cast<std::size_t>(j)];
  }

  DensePrior prior;
  prior.grid_ = grid;
  prior.num_paths_ = static_cast<int>(k);
  prior.mean_ = y.colwise().mean();
  y.rowwise() -= prior.mean_.transpose();

  const ThinSvd svd = thin_svd(y);
  // basis = diag(s) vt / sqrt(K), so cov is basis^T basis with the 1/K
  // normalization already folded in.
  prior.basis_ = svd.s.asDiagonal() * svd.vt / std::sqrt(static_cast<double>(k));
  return prior;
}

Vector DensePrior::mean_at(const std::vector<double>& query) const {
  Vector out(static_cast<Eigen::Index>(query.size()));
  for (std::size_t i = 0; i < query.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = interp_one(grid_, mean_.data(), query[i]);
  }
  return out;
}

Matrix DensePrior::basis_at(const std::vector<double>& query) const {
  const auto r = basis_.rows();
  Matrix out(r, static_cast<Eigen::Index>(query.size()));
  // basis rows are stored row-major across the grid; interpolate each row
  std::vector<double> row(grid_.size());
  for (Eigen::Index j = 0; j < r; ++j) {
    for (std::size_t g = 0; g < grid_.size(); ++g) {
      row[g] = basis_(j, static_cast<Eigen::Index>(g));
    }
    for (std::size_t i = 0; i < query.size(); ++i) {
      out(j, static_cast<Eigen::Index>(i)) = interp_one(grid_, row.data(), query[i]);
    }
  }
  interp_evals_.fetch_add(static_cast<std::uint64_t>(r) * query.size(),
                          std::memory_order_relaxed);
  return out;
}

Matrix DensePrior::cov(const std::vector<double>& qa,
                       const std::vector<double>& qb) const {
  const Matrix ba = basis_at(qa);
  if (&qa == &qb || qa == qb) {
    Matrix c = ba.transpose() * ba;
    return 0.5 * (c + c.transpose());
  }
  const Matrix bb = basis_at(qb);
  return ba.transpose() * bb;
}

nlohmann::json DensePrior::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["kind"] = "dense";
  j["grid"] = grid_;
  j["mean"] = std::vector<double>(mean_.data(), mean_.data() + mean_.size());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < basis_.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(basis_.cols()));
    for (Eigen::Index c = 0; c < basis_.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = basis_(r, c);
    }
    rows.push_back(row);
  }
  j["basis"] = rows;
  j["num_paths"] = num_paths_;
  j["interp"] = "linear";
  return j;
}

DensePrior DensePrior::from_json(const nlohmann::json& j) {
  if (j.value("kind", "dense") != "dense") {
    throw ParseError("DensePrior::from_json: kind is not 'dense'");
  }
  if (j.at("version").get<int>() != 1) {
    throw ParseError("DensePrior::from_json: unsupported version");
  }
  DensePrior prior;
  prior.grid_ = j.at("grid").get<std::vector<double>>();
  const auto mean = j.at("mean").get<std::vector<double>>();
  prior.mean_ = Eigen::Map<const Vector>(mean.data(),
                                         static_cast<Eigen::Index>(mean.size()));
  const auto& rows = j.at("basis");
  prior.basis_.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(prior.grid_.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = rows[r].get<std::vector<double>>();
    if (row.size() != prior.grid_.size()) {
      throw ParseError("DensePrior::from_json: basis row length mismatch");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      prior.basis_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  prior.num_paths_ = j.at("num_paths").get<int>();
  if (prior.mean_.size() != static_cast<Eigen::Index>(prior.grid_.size())) {
    throw ParseError("DensePrior::from_json: mean length mismatch");
  }
  return prior;
}

}  // namespace egp
