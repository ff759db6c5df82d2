#include "crembo/memo.hpp"

#include <algorithm>
#include <bit>

namespace crembo {

std::size_t learner_call_bound(std::size_t thresholdCount) {
  if (thresholdCount <= 1)
    return 1;
  return static_cast<std::size_t>(std::bit_width(thresholdCount - 1)) + 1;
}

ConstraintSample build_constraints(const OracleSource& o, std::span<const RowIndex> rows, double d) {
  ConstraintSample s;
  s.pairs.reserve(rows.size());
  for (RowIndex r : rows) {
    ConstraintPair p;
    p.row = r;
    p.preferred = o.argmax(r);
    for (ClassId y = 0; y < o.num_classes(); ++y)
      if (o.prob(r, y) >= d)
        p.allowed.insert(y);
    s.pairs.push_back(p);
  }
  return s;
}

std::optional<ConstraintSample> build_trimmed_constraints(const OracleSource& o, std::span<const RowIndex> rows,
                                                          double d, std::size_t budget) {
  ConstraintSample full = build_constraints(o, rows, d);
  std::vector<const ConstraintPair*> empties;
  for (const auto& p : full.pairs)
    if (p.allowed.empty())
      empties.push_back(&p);
  if (empties.size() > budget)
    return std::nullopt;
  if (empties.empty())
    return full;

  std::sort(empties.begin(), empties.end(), [&](const ConstraintPair* a, const ConstraintPair* b) {
    const double ma = o.max_prob(a->row), mb = o.max_prob(b->row);
    return ma < mb || (ma == mb && a->row < b->row);
  });
  ConstraintSample s;
  for (const auto* p : empties)
    s.trimmedRows.push_back(p->row);
  for (const auto& p : full.pairs)
    if (!p.allowed.empty())
      s.pairs.push_back(p);
  return s;
}

namespace {

struct Success {
  TreeModel model;
  ConstraintSample sample;
};

} // namespace

MemoResult memo_trimmed(const Dataset& d, const OracleSource& o, const ConsistentLearner& learner, double epsilon) {
  if (o.num_rows() != d.num_rows() || o.num_classes() != d.num_classes())
    throw Error(ErrorCode::ShapeMismatch, "oracle does not cover the dataset rows and classes");
  const IndexList rows = all_rows(d.num_rows());
  const std::size_t budget = trim_budget(epsilon, rows.size());
  if (budget >= rows.size())
    throw Error(ErrorCode::TrimExceedsSample, "trim budget leaves no rows");

  const ThresholdSet theta = threshold_set(o, rows);
  MemoResult result;
  result.thresholdCount = theta.size();

  auto probe = [&](std::size_t i) -> std::optional<Success> {
    const double t = theta.values[i];
    result.probedThresholds.push_back(t);
    auto sample = build_trimmed_constraints(o, rows, t, budget);
    if (!sample)
      return std::nullopt; // some Y_i is empty beyond the budget: no f can be consistent
    ++result.learnerCalls;
    LearnResult lr = learner.learn(d, *sample);
    if (!lr.ok())
      return std::nullopt;
    return Success{std::move(*lr.model), std::move(*sample)};
  };

  // Invariant: theta[lo] is feasible (the smallest value always is), and every
  // index above hi has failed.
  std::size_t lo = 0, hi = theta.size() - 1;
  std::optional<Success> best;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (auto s = probe(mid)) {
      lo = mid;
      best = std::move(s);
    } else {
      hi = mid - 1;
    }
  }
  if (!best) {
    best = probe(lo);
    if (!best)
      throw Error(ErrorCode::LearnerAlwaysFails,
                  learner.name() + " failed at the minimal threshold, where every hypothesis is consistent");
  }

  if (!satisfies(best->model, d, best->sample))
    throw Error(ErrorCode::ConstraintViolation, "returned model violates the constraints at the chosen threshold");

  result.threshold = theta.values[lo];
  result.trimmedRows = best->sample.trimmedRows;
  std::sort(result.trimmedRows.begin(), result.trimmedRows.end());
  IndexList kept;
  kept.reserve(rows.size() - result.trimmedRows.size());
  std::set_difference(rows.begin(), rows.end(), result.trimmedRows.begin(), result.trimmedRows.end(),
                      std::back_inserter(kept));
  const auto preds = best->model.predict(d);
  result.depth = empirical_depth(preds, o, kept).overall;
  if (result.depth < result.threshold)
    throw Error(ErrorCode::ConstraintViolation, "model depth fell below the certified threshold");
  result.model = std::move(best->model);
  return result;
}

MemoResult memo(const Dataset& d, const OracleSource& o, const ConsistentLearner& learner) {
  return memo_trimmed(d, o, learner, 0.0);
}

} // namespace crembo
