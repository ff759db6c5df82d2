#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crembo/core.hpp"
#include "crembo/crembo.hpp"
#include "crembo/learners.hpp"
#include "crembo/oracle.hpp"

namespace crembo {

inline const std::string kBenchmarkTree = "BM";
inline const std::string kStudentTree = "ST";
inline const std::string kMedianTree = "MED";

enum class BigModelKind { Forest, Matrix };

struct BigModelSpec {
  BigModelKind kind = BigModelKind::Forest;
  ForestConfig forest{};
  bool softVotes = false;
  /// Belief over every row of the dataset when kind == Matrix.
  std::optional<OracleSource> matrix;

  std::string name() const { return kind == BigModelKind::Forest ? "RF" : "MATRIX"; }
};

struct PipelineConfig {
  BigModelSpec big;
  LearnerConfig tree{};
  CremboConfig crembo{};
  std::size_t folds = 10;
  bool stratified = true;
  std::uint64_t seed = 0;
  int repeats = 20;
  /// Held-out share for the robustness protocol.
  double testFraction = 0.15;
};

void validate(const PipelineConfig& cfg);

/// Models produced by one training round of the BM / ST / MED protocol.
struct PipelineModels {
  std::optional<ForestModel> forest;
  TreeModel bm;
  TreeModel st;
  TreeModel med;
  CremboResult crembo;
  /// Dataset rows (global indices) that CREMBO trained and validated on.
  IndexList medTrainRows;
  IndexList valRows;
};

/// Trains the big model, BM, ST and MED on `trainRows` of d.
PipelineModels run_pipeline(const Dataset& d, const IndexList& trainRows, std::uint64_t seed,
                            const PipelineConfig& cfg);

struct FoldOutcome {
  std::size_t repeat = 0;
  std::size_t foldIndex = 0;
  std::map<std::string, double> accuracies;
  std::map<std::string, TreeModel> models;
  double medDepth = 0.0;
  double medEpsilon = 0.0;
};

struct ExperimentReport {
  std::vector<std::string> compared;
  std::string bigName;
  std::map<std::string, double> meanAccuracy;
  /// Percentages over the compared models; sums to 100.
  std::map<std::string, double> winRate;
  int repeats = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<FoldOutcome> folds;
};

/// Percentage of rounds each model attains the highest accuracy; a k-way tie
/// credits 1/k to each tied model.
std::map<std::string, double> win_rates(const std::vector<std::map<std::string, double>>& rounds,
                                        const std::vector<std::string>& models);

/// Repeated k-fold CV comparing BM, ST and MED on held-out folds.
ExperimentReport generalization_experiment(const Dataset& d, const PipelineConfig& cfg);

/// Fraction of positions with equal predictions.
double agreement(std::span<const ClassId> a, std::span<const ClassId> b);

/// Mean agreement over all unordered pairs of prediction vectors.
double mean_pairwise_agreement(const std::vector<std::vector<ClassId>>& predictions);

struct RobustnessReport {
  std::vector<std::string> compared;
  std::map<std::string, double> agreement;
  std::vector<std::map<std::string, double>> perRepeat;
  int repeats = 0;
  std::vector<std::uint64_t> seeds;
};

/// Fold-omission protocol: a fixed held-out test split, `cfg.folds` rounds
/// each dropping one training fold, scored by same-type agreement on the test
/// split across all round pairs.
RobustnessReport robustness_experiment(const Dataset& d, const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Breakdown probe

struct BreakdownOptions {
  std::vector<double> deltaGrid;
  std::size_t randomPerturbations = 20;
  std::uint64_t seed = 0;
};

/// 0.01, 0.02, ..., 1.00.
std::vector<double> default_delta_grid();

struct BreakdownReport {
  double depth = 0.0;
  double pStar = 0.0;
  double bound = 0.0;
  /// Every (row, class) attaining pStar.
  std::vector<std::pair<RowIndex, ClassId>> argmins;
  std::size_t perturbations = 0;
  std::size_t withinBound = 0;
  std::size_t violations = 0;
  /// Smallest sup-norm change observed to make the output predict an argmin
  /// class at its row.
  std::optional<double> empiricalBreakdown;
  bool passed = false;
};

inline constexpr std::size_t kProbeMaxRows = 6;
inline constexpr int kProbeMaxClasses = 3;

BreakdownReport breakdown_probe(const Dataset& d, const OracleSource& o, const ConsistentLearner& learner,
                                const BreakdownOptions& opts = {});

/// Clip to [0, 1] and rescale each row onto the probability simplex.
std::vector<double> project_rows(std::vector<double> values, int numClasses);

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
  std::size_t rows = 304;
  std::size_t attrs = 13;
  std::size_t informative = 5;
  int classes = 5;
  /// Class priors; uniform when empty.
  std::vector<double> priors;
  double separation = 1.6;
  double labelNoise = 0.25;
  std::uint64_t seed = 0;
};

/// Gaussian class clusters on a few informative attributes plus noise
/// attributes, with a fraction of labels flipped uniformly at random.
Dataset make_synthetic(const SyntheticSpec& spec);

/// 303 rows x 13 attributes x 5 imbalanced classes with 25% label noise.
SyntheticSpec heart_surrogate_spec(std::uint64_t seed = 7);

// ---------------------------------------------------------------------------
// Text tables

std::string format_table(const ExperimentReport& r, const std::string& datasetName);
std::string format_table(const RobustnessReport& r, const std::string& datasetName);

} // namespace crembo
