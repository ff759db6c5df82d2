#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crembo/core.hpp"
#include "crembo/learners.hpp"
#include "crembo/memo.hpp"
#include "crembo/oracle.hpp"

namespace crembo {

struct CremboConfig {
  /// Ascending trim levels in [0, 1).
  std::vector<double> trimGrid{0.0, 0.01, 0.02, 0.05, 0.1};
  double valFraction = 0.15;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct TraceEntry {
  double epsilon = 0.0;
  double depth = 0.0;
  double valAccuracy = 0.0;
  bool feasible = false;
  /// The entry reuses the model of a smaller trim level whose depth was
  /// higher (see run_crembo).
  bool carried = false;
  std::size_t learnerCalls = 0;

  bool operator==(const TraceEntry&) const = default;
};

struct CremboResult {
  TreeModel model;
  double chosenEpsilon = 0.0;
  double depth = 0.0;
  double valAccuracy = 0.0;
  double threshold = 0.0;
  std::size_t learnerCalls = 0;
  IndexList trimmedRows;
  std::vector<TraceEntry> perEpsilonTrace;

  bool operator==(const CremboResult&) const = default;
};

/// Runs trimmed MEMO on `train` for every trim level of the grid and keeps the
/// model with the best validation accuracy (ties: smaller epsilon, then larger
/// depth). The oracle is indexed by rows of `train`.
///
/// A larger trim budget admits every constraint sample a smaller one does, so
/// the model found at a smaller level stays valid at a larger one. When the
/// heuristic search at a larger level ends shallower, that deeper model is
/// carried forward; the depth trace is therefore nondecreasing in epsilon.
CremboResult run_crembo(const Dataset& train, const Dataset& val, const OracleSource& o,
                        const ConsistentLearner& learner, const CremboConfig& cfg);

struct CompressResult {
  CremboResult crembo;
  IndexList trainRows;
  IndexList valRows;
  std::string oracleProvenance;
};

/// End to end: split d into train/validation parts, restrict the oracle (built
/// over all of d) to the training part and run CREMBO with the constrained
/// tree learner.
CompressResult compress(const Dataset& d, const OracleSource& oracle, const CremboConfig& cfg,
                        const LearnerConfig& learnerCfg);

CompressResult compress(const Dataset& d, const ForestModel& forest, const CremboConfig& cfg,
                        const LearnerConfig& learnerCfg, bool softVotes = false);

CompressResult compress(const Dataset& d, const std::filesystem::path& matrix, MatrixOptions opts,
                        const CremboConfig& cfg, const LearnerConfig& learnerCfg);

void validate(const CremboConfig& cfg);

} // namespace crembo
