#pragma once

#include <vector>

#include "crembo/core.hpp"
#include "crembo/depth.hpp"
#include "crembo/learners.hpp"
#include "crembo/oracle.hpp"

namespace crembo {

struct MemoResult {
  TreeModel model;
  /// Depth of `model` over the non-trimmed rows, recomputed from the oracle.
  double depth = 0.0;
  /// The largest probed threshold at which the learner succeeded.
  double threshold = 0.0;
  std::size_t learnerCalls = 0;
  /// Every threshold probed, in probe order (including probes rejected
  /// without a learner call because some allowed set was empty).
  std::vector<double> probedThresholds;
  IndexList trimmedRows;
  std::size_t thresholdCount = 0;

  bool operator==(const MemoResult&) const = default;
};

/// Y_i = {y : O(x_i, y) >= d} for each row; empty sets are kept.
ConstraintSample build_constraints(const OracleSource& o, std::span<const RowIndex> rows, double d);

/// Constraints at threshold d with up to `budget` empty rows moved to
/// trimmedRows (lowest max-probability first, then lowest row). Returns
/// nullopt when more than `budget` rows are empty.
std::optional<ConstraintSample> build_trimmed_constraints(const OracleSource& o, std::span<const RowIndex> rows,
                                                          double d, std::size_t budget);

/// Binary search over the threshold set for the deepest constraint-consistent
/// hypothesis. The oracle is indexed by dataset row.
MemoResult memo(const Dataset& d, const OracleSource& o, const ConsistentLearner& learner);

/// Trimmed variant: at each threshold up to floor(epsilon * m) rows whose
/// allowed set is empty are dropped from the constraints. epsilon = 0
/// reproduces memo() exactly.
MemoResult memo_trimmed(const Dataset& d, const OracleSource& o, const ConsistentLearner& learner, double epsilon);

/// ceil(log2(n)) + 1, the learner-call ceiling for |Theta| = n.
std::size_t learner_call_bound(std::size_t thresholdCount);

} // namespace crembo
