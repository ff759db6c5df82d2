#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crembo/core.hpp"

namespace crembo {

struct TreeNode {
  /// -1 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  ClassId label = 0;
  /// Optional class distribution at a leaf (weighted training frequencies).
  std::vector<double> distribution;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Axis-aligned binary decision tree stored as a flat node array rooted at
/// index 0. Rows route left when x[feature] < threshold.
class TreeModel {
public:
  TreeModel() = default;
  TreeModel(std::vector<TreeNode> nodes, int numAttrs, int numClasses, int maxDepth);

  static TreeModel constant(ClassId c, int numAttrs, int numClasses, int maxDepth = 1);

  ClassId predict_row(std::span<const double> x) const;
  std::vector<ClassId> predict(const Dataset& d) const;
  /// Leaf reached by the row.
  const TreeNode& leaf_for(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int num_attrs() const { return num_attrs_; }
  int num_classes() const { return num_classes_; }
  int max_depth() const { return max_depth_; }
  /// Longest root-to-leaf edge count.
  int depth() const;
  std::size_t leaf_count() const;

  bool operator==(const TreeModel&) const = default;

private:
  std::vector<TreeNode> nodes_;
  int num_attrs_ = 0;
  int num_classes_ = 0;
  int max_depth_ = 0;
};

enum class ClassWeighting { Balanced, Uniform };

struct LearnerConfig {
  int maxDepth = 4;
  int minLeafSize = 1;
  ClassWeighting classWeighting = ClassWeighting::Balanced;
  std::uint64_t seed = 0;
};

struct ForestConfig {
  int treeCount = 100;
  int maxDepth = 12;
  int minLeafSize = 1;
  ClassWeighting classWeighting = ClassWeighting::Balanced;
  std::uint64_t seed = 0;
};

class ForestModel {
public:
  ForestModel() = default;
  ForestModel(std::vector<TreeModel> trees, std::vector<std::uint64_t> perTreeSeeds, ForestConfig config);

  /// Majority hard vote; ties go to the lowest ClassId.
  ClassId predict_row(std::span<const double> x) const;
  std::vector<ClassId> predict(const Dataset& d) const;
  std::vector<int> votes(std::span<const double> x) const;

  const std::vector<TreeModel>& trees() const { return trees_; }
  std::size_t tree_count() const { return trees_.size(); }
  const std::vector<std::uint64_t>& per_tree_seeds() const { return per_tree_seeds_; }
  const ForestConfig& config() const { return config_; }
  int num_attrs() const { return trees_.front().num_attrs(); }
  int num_classes() const { return trees_.front().num_classes(); }

private:
  std::vector<TreeModel> trees_;
  std::vector<std::uint64_t> per_tree_seeds_;
  ForestConfig config_;
};

template <class M>
concept Classifier = requires(const M& m, std::span<const double> x, const Dataset& d) {
  { m.predict_row(x) } -> std::convertible_to<ClassId>;
  { m.predict(d) } -> std::same_as<std::vector<ClassId>>;
  { m.num_attrs() } -> std::convertible_to<int>;
};

/// Throws FeatureDimensionMismatch when the model and dataset disagree.
void check_dimensions(int modelAttrs, const Dataset& d);

/// Majority class among predictions-vote counts; ties to the lowest class.
ClassId argmax_lowest(std::span<const int> counts);

/// Per-class weights: m / (K * m_c) for Balanced, 1 for Uniform.
std::vector<double> class_weights(const Dataset& d, ClassWeighting weighting);

// ---------------------------------------------------------------------------
// Standard (Gini) trees and forests

TreeModel train_standard_tree(const Dataset& d, const LearnerConfig& cfg);

/// One bootstrap tree of a forest; tree `index` draws from
/// derive_seed(cfg.seed, stream::kForestTree, index).
TreeModel train_forest_tree(const Dataset& d, const ForestConfig& cfg, std::size_t index);

/// Trees are trained in parallel; the result does not depend on the number
/// of worker threads.
ForestModel train_forest(const Dataset& d, const ForestConfig& cfg);

// ---------------------------------------------------------------------------
// Consistent learners

enum class LearnStatus { Success, Fail, ConflictingDuplicate };

struct LearnResult {
  LearnStatus status = LearnStatus::Fail;
  std::optional<TreeModel> model;

  bool ok() const { return status == LearnStatus::Success; }
};

/// Given per-row allowed label sets, returns a model f with f(x_i) in Y_i for
/// every constrained row, or a failure. `exact()` declares whether failure
/// certifies that no such model exists in the learner's class.
class ConsistentLearner {
public:
  virtual ~ConsistentLearner() = default;
  virtual LearnResult learn(const Dataset& d, const ConstraintSample& s) const = 0;
  virtual bool exact() const = 0;
  virtual std::string name() const = 0;
};

/// True when the model satisfies every pair of the sample.
bool satisfies(const TreeModel& model, const Dataset& d, const ConstraintSample& s);

/// Greedy bounded-depth tree induction under label-set constraints.
///
/// A node whose rows share a common allowed class becomes a leaf labelled
/// with the shared class preferred by most of its rows. Otherwise the node is
/// split on the (feature, threshold) that maximises the number of rows a
/// single leaf label could satisfy on each side; ties fall back to the Gini
/// impurity of the rows' preferred classes, then to the lower feature index
/// and threshold. Reaching maxDepth with an unsatisfiable node fails.
class ConstrainedTreeLearner final : public ConsistentLearner {
public:
  explicit ConstrainedTreeLearner(LearnerConfig cfg = {}) : cfg_(cfg) {}

  LearnResult learn(const Dataset& d, const ConstraintSample& s) const override;
  bool exact() const override { return false; }
  std::string name() const override { return "constrained-tree"; }
  const LearnerConfig& config() const { return cfg_; }

private:
  LearnerConfig cfg_;
};

struct ExhaustiveSpec {
  bool constants = true;
  bool stumps = true;
  bool depth2 = false;
  std::size_t budget = 1'000'000;
};

/// Exact learner for constants, stumps and depth-2 trees over midpoint
/// thresholds of the constrained rows. Enumerates constants first, then stumps
/// by (feature, threshold), then depth-2 trees; returns the first consistent
/// member with leaves labelled by the lowest admissible class.
class ExhaustiveLearner final : public ConsistentLearner {
public:
  explicit ExhaustiveLearner(ExhaustiveSpec spec = {}) : spec_(spec) {}

  LearnResult learn(const Dataset& d, const ConstraintSample& s) const override;
  bool exact() const override { return true; }
  std::string name() const override { return "exhaustive"; }

  /// Number of hypotheses the enumeration would visit on this instance.
  std::size_t candidate_count(const Dataset& d, const ConstraintSample& s) const;

private:
  ExhaustiveSpec spec_;
};

/// Midpoints between consecutive distinct values of `attr` over `rows`.
std::vector<double> midpoint_thresholds(const Dataset& d, std::span<const RowIndex> rows, std::size_t attr);

} // namespace crembo
