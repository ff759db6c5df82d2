#include "crembo/crembo.hpp"

#include <exception>

#include "crembo/rng.hpp"

namespace crembo {

void validate(const CremboConfig& cfg) {
  if (cfg.trimGrid.empty())
    throw Error(ErrorCode::InvalidArgument, "trim grid is empty");
  for (std::size_t i = 0; i < cfg.trimGrid.size(); ++i) {
    const double e = cfg.trimGrid[i];
    if (!(e >= 0.0 && e < 1.0))
      throw Error(ErrorCode::InvalidArgument, "trim levels must lie in [0, 1)");
    if (i > 0 && !(e > cfg.trimGrid[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "trim grid must be strictly ascending");
  }
  if (!(cfg.valFraction > 0.0 && cfg.valFraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "validation fraction must lie in (0, 1)");
}

CremboResult run_crembo(const Dataset& train, const Dataset& val, const OracleSource& o,
                        const ConsistentLearner& learner, const CremboConfig& cfg) {
  validate(cfg);
  const auto& valLabels = val.labels();
  const auto n = static_cast<std::ptrdiff_t>(cfg.trimGrid.size());

  std::vector<std::optional<MemoResult>> runs(cfg.trimGrid.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      runs[static_cast<std::size_t>(k)] = memo_trimmed(train, o, learner, cfg.trimGrid[static_cast<std::size_t>(k)]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::LearnerAlwaysFails && e.code() != ErrorCode::TrimExceedsSample) {
#pragma omp critical(crembo_sweep)
        if (!failure)
          failure = std::current_exception();
      }
    } catch (...) {
#pragma omp critical(crembo_sweep)
      if (!failure)
        failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);

  CremboResult result;
  std::vector<double> accuracies(runs.size(), 0.0);
  const MemoResult* deepest = nullptr;
  std::vector<const MemoResult*> chosenRun(runs.size(), nullptr);
  for (std::size_t k = 0; k < runs.size(); ++k) {
    TraceEntry entry;
    entry.epsilon = cfg.trimGrid[k];
    if (runs[k]) {
      const MemoResult* run = &*runs[k];
      if (deepest && deepest->depth > run->depth) {
        run = deepest;
        entry.carried = true;
      } else {
        deepest = run;
      }
      chosenRun[k] = run;
      entry.feasible = true;
      entry.depth = run->depth;
      entry.learnerCalls = runs[k]->learnerCalls;
      const auto preds = run->model.predict(val);
      entry.valAccuracy = accuracy(preds, valLabels);
      accuracies[k] = entry.valAccuracy;
    }
    result.perEpsilonTrace.push_back(entry);
  }

  // The grid is strictly ascending, so keeping the first maximum prefers the
  // smaller epsilon; the depth tie-break can never be reached.
  std::optional<std::size_t> pick;
  for (std::size_t k = 0; k < runs.size(); ++k)
    if (chosenRun[k] && (!pick || accuracies[k] > accuracies[*pick]))
      pick = k;
  if (!pick)
    throw Error(ErrorCode::AllEpsilonInfeasible, "no trim level produced a model");

  double last = -1.0;
  for (const auto& e : result.perEpsilonTrace) {
    if (!e.feasible)
      continue;
    if (e.depth < last)
      throw Error(ErrorCode::ConstraintViolation, "depth trace is not monotone in the trim level");
    last = e.depth;
  }

  const MemoResult& chosen = *chosenRun[*pick];
  result.model = chosen.model;
  result.chosenEpsilon = cfg.trimGrid[*pick];
  result.depth = chosen.depth;
  result.valAccuracy = accuracies[*pick];
  result.threshold = chosen.threshold;
  result.learnerCalls = chosen.learnerCalls;
  result.trimmedRows = chosen.trimmedRows;
  return result;
}

CompressResult compress(const Dataset& d, const OracleSource& oracle, const CremboConfig& cfg,
                        const LearnerConfig& learnerCfg) {
  validate(cfg);
  if (oracle.num_rows() != d.num_rows() || oracle.num_classes() != d.num_classes())
    throw Error(ErrorCode::ShapeMismatch, "oracle does not cover the dataset");
  SplitSpec spec;
  spec.seed = derive_seed(cfg.seed, stream::kValidationSplit);
  spec.fraction = cfg.valFraction;
  spec.stratified = cfg.stratified;
  auto [trainRows, valRows] = split_indices(d, spec);

  CompressResult out;
  const Dataset train = d.subset(trainRows);
  const Dataset val = d.subset(valRows);
  const OracleSource trainOracle = oracle.subset(trainRows);
  ConstrainedTreeLearner learner(learnerCfg);
  out.crembo = run_crembo(train, val, trainOracle, learner, cfg);
  out.trainRows = std::move(trainRows);
  out.valRows = std::move(valRows);
  out.oracleProvenance = oracle.provenance();
  return out;
}

CompressResult compress(const Dataset& d, const ForestModel& forest, const CremboConfig& cfg,
                        const LearnerConfig& learnerCfg, bool softVotes) {
  const OracleSource o = softVotes ? soft_vote_oracle(forest, d) : ensemble_vote_oracle(forest, d);
  return compress(d, o, cfg, learnerCfg);
}

CompressResult compress(const Dataset& d, const std::filesystem::path& matrix, MatrixOptions opts,
                        const CremboConfig& cfg, const LearnerConfig& learnerCfg) {
  const OracleSource o = matrix_oracle(matrix, d, opts);
  return compress(d, o, cfg, learnerCfg);
}

} // namespace crembo
