#pragma once

#include <span>
#include <vector>

#include "crembo/core.hpp"
#include "crembo/learners.hpp"
#include "crembo/oracle.hpp"

namespace crembo {

struct PointDepth {
  RowIndex row = 0;
  double depth = 0.0;

  bool operator==(const PointDepth&) const = default;
};

struct DepthProfile {
  std::vector<PointDepth> perPoint;
  /// Minimum over the non-trimmed entries of perPoint.
  double overall = 0.0;
  IndexList trimmedRows;

  bool operator==(const DepthProfile&) const = default;
};

/// floor(epsilon * m), robust to representation error in epsilon.
std::size_t trim_budget(double epsilon, std::size_t m);

// Prediction-level entry points: `predictions` is indexed by dataset row.

DepthProfile empirical_depth(std::span<const ClassId> predictions, const OracleSource& o,
                             std::span<const RowIndex> rows);

DepthProfile trimmed_depth(std::span<const ClassId> predictions, const OracleSource& o,
                           std::span<const RowIndex> rows, double epsilon);

/// Depth of `f` with respect to a hypothesis sample, by direct counting of
/// agreeing hypotheses. Values are snapped to the oracle quantum so they are
/// comparable with depths under the corresponding counting oracle.
DepthProfile sample_depth(std::span<const ClassId> f, std::span<const std::vector<ClassId>> hypotheses,
                          std::span<const RowIndex> rows);

// Model-level entry points.

template <Classifier M>
double depth_at_point(const M& f, const Dataset& d, const OracleSource& o, RowIndex i) {
  return o.prob(i, f.predict_row(d.row(i)));
}

template <Classifier M>
DepthProfile empirical_depth(const M& f, const Dataset& d, const OracleSource& o,
                             std::span<const RowIndex> rows) {
  const auto preds = f.predict(d);
  return empirical_depth(preds, o, rows);
}

template <Classifier M>
DepthProfile trimmed_depth(const M& f, const Dataset& d, const OracleSource& o, std::span<const RowIndex> rows,
                           double epsilon) {
  const auto preds = f.predict(d);
  return trimmed_depth(preds, o, rows, epsilon);
}

template <Classifier M>
DepthProfile sample_depth(const M& f, std::span<const M> hypotheses, const Dataset& d,
                          std::span<const RowIndex> rows) {
  if (hypotheses.empty())
    throw Error(ErrorCode::EmptyHypothesisSample, "sample depth needs at least one hypothesis");
  std::vector<std::vector<ClassId>> preds;
  preds.reserve(hypotheses.size());
  for (const auto& h : hypotheses)
    preds.push_back(h.predict(d));
  const auto own = f.predict(d);
  return sample_depth(own, preds, rows);
}

/// All rows of a sample, 0..n-1.
IndexList all_rows(std::size_t n);

} // namespace crembo
