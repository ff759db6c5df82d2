#include "crembo/depth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crembo/kernels.hpp"

namespace crembo {

IndexList all_rows(std::size_t n) {
  IndexList rows(n);
  std::iota(rows.begin(), rows.end(), RowIndex{0});
  return rows;
}

std::size_t trim_budget(double epsilon, std::size_t m) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw Error(ErrorCode::InvalidArgument, "trim level must lie in [0, 1)");
  return static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(m) + 1e-9));
}

namespace {

DepthProfile profile_of(std::span<const RowIndex> rows, const std::vector<double>& depths) {
  DepthProfile p;
  p.perPoint.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    p.perPoint.push_back({rows[k], depths[k]});
  p.overall = *std::min_element(depths.begin(), depths.end());
  return p;
}

} // namespace

DepthProfile empirical_depth(std::span<const ClassId> predictions, const OracleSource& o,
                             std::span<const RowIndex> rows) {
  if (rows.empty())
    throw Error(ErrorCode::EmptySample, "empirical depth over an empty sample");
  return profile_of(rows, kernels::point_depths(predictions, o, rows));
}

DepthProfile trimmed_depth(std::span<const ClassId> predictions, const OracleSource& o,
                           std::span<const RowIndex> rows, double epsilon) {
  if (rows.empty())
    throw Error(ErrorCode::EmptySample, "trimmed depth over an empty sample");
  const std::size_t k = trim_budget(epsilon, rows.size());
  if (k >= rows.size())
    throw Error(ErrorCode::TrimExceedsSample, "trim budget leaves no rows");
  DepthProfile p = empirical_depth(predictions, o, rows);
  if (k == 0)
    return p;

  std::vector<PointDepth> order = p.perPoint;
  std::sort(order.begin(), order.end(), [](const PointDepth& a, const PointDepth& b) {
    return a.depth < b.depth || (a.depth == b.depth && a.row < b.row);
  });
  p.overall = order[k].depth;
  for (std::size_t j = 0; j < k; ++j)
    p.trimmedRows.push_back(order[j].row);
  std::sort(p.trimmedRows.begin(), p.trimmedRows.end());
  return p;
}

DepthProfile sample_depth(std::span<const ClassId> f, std::span<const std::vector<ClassId>> hypotheses,
                          std::span<const RowIndex> rows) {
  if (hypotheses.empty())
    throw Error(ErrorCode::EmptyHypothesisSample, "sample depth needs at least one hypothesis");
  if (rows.empty())
    throw Error(ErrorCode::EmptySample, "sample depth over an empty sample");
  const double n = static_cast<double>(hypotheses.size());
  std::vector<double> depths;
  depths.reserve(rows.size());
  for (RowIndex r : rows) {
    int agree = 0;
    for (const auto& h : hypotheses)
      agree += h.at(r) == f[r];
    depths.push_back(quantize(agree / n));
  }
  return profile_of(rows, depths);
}

} // namespace crembo
