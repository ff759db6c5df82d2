#include <algorithm>
#include <cmath>
#include <numeric>

#include "crembo/kernels.hpp"
#include "crembo/learners.hpp"
#include "crembo/rng.hpp"

namespace crembo {

// ---------------------------------------------------------------------------
// TreeModel

TreeModel::TreeModel(std::vector<TreeNode> nodes, int numAttrs, int numClasses, int maxDepth)
    : nodes_(std::move(nodes)), num_attrs_(numAttrs), num_classes_(numClasses), max_depth_(maxDepth) {
  if (nodes_.empty())
    throw Error(ErrorCode::InvalidArgument, "tree without nodes");
  const int n = static_cast<int>(nodes_.size());
  for (const auto& node : nodes_) {
    if (node.is_leaf()) {
      if (node.label < 0 || node.label >= num_classes_)
        throw Error(ErrorCode::InvalidArgument, "leaf label outside class range");
      continue;
    }
    if (node.feature >= num_attrs_)
      throw Error(ErrorCode::FeatureDimensionMismatch, "split feature outside feature range");
    if (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n)
      throw Error(ErrorCode::InvalidArgument, "internal node with invalid child index");
  }
  if (max_depth_ > 0 && depth() > max_depth_)
    throw Error(ErrorCode::InvalidArgument, "tree deeper than its declared maxDepth");
}

TreeModel TreeModel::constant(ClassId c, int numAttrs, int numClasses, int maxDepth) {
  TreeNode leaf;
  leaf.label = c;
  return TreeModel({leaf}, numAttrs, numClasses, maxDepth);
}

const TreeNode& TreeModel::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf())
    node = &nodes_[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] < node->threshold
                                                ? node->left
                                                : node->right)];
  return *node;
}

ClassId TreeModel::predict_row(std::span<const double> x) const { return leaf_for(x).label; }

std::vector<ClassId> TreeModel::predict(const Dataset& d) const { return kernels::predict(*this, d); }

int TreeModel::depth() const {
  // Iterative walk; nodes carry no parent links.
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, level] = stack.back();
    stack.pop_back();
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.is_leaf()) {
      best = std::max(best, level);
    } else {
      stack.emplace_back(node.left, level + 1);
      stack.emplace_back(node.right, level + 1);
    }
  }
  return best;
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

// ---------------------------------------------------------------------------
// ForestModel

ForestModel::ForestModel(std::vector<TreeModel> trees, std::vector<std::uint64_t> perTreeSeeds,
                         ForestConfig config)
    : trees_(std::move(trees)), per_tree_seeds_(std::move(perTreeSeeds)), config_(config) {
  if (trees_.empty())
    throw Error(ErrorCode::InvalidArgument, "forest needs at least one tree");
  for (const auto& t : trees_)
    if (t.num_attrs() != trees_.front().num_attrs() || t.num_classes() != trees_.front().num_classes())
      throw Error(ErrorCode::FeatureDimensionMismatch, "forest trees disagree on feature space");
  config_.treeCount = static_cast<int>(trees_.size());
}

std::vector<int> ForestModel::votes(std::span<const double> x) const {
  std::vector<int> counts(static_cast<std::size_t>(num_classes()), 0);
  for (const auto& t : trees_)
    ++counts[static_cast<std::size_t>(t.predict_row(x))];
  return counts;
}

ClassId ForestModel::predict_row(std::span<const double> x) const { return argmax_lowest(votes(x)); }

std::vector<ClassId> ForestModel::predict(const Dataset& d) const { return kernels::predict(*this, d); }

// ---------------------------------------------------------------------------
// Helpers

void check_dimensions(int modelAttrs, const Dataset& d) {
  if (static_cast<std::size_t>(modelAttrs) != d.num_attrs())
    throw Error(ErrorCode::FeatureDimensionMismatch, "model expects " + std::to_string(modelAttrs) +
                                                         " features, dataset has " +
                                                         std::to_string(d.num_attrs()));
}

ClassId argmax_lowest(std::span<const int> counts) {
  return static_cast<ClassId>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::vector<double> class_weights(const Dataset& d, ClassWeighting weighting) {
  const auto K = static_cast<std::size_t>(d.num_classes());
  std::vector<double> w(K, 1.0);
  if (weighting == ClassWeighting::Uniform)
    return w;
  const auto counts = d.class_counts();
  const double m = static_cast<double>(d.num_rows());
  for (std::size_t c = 0; c < K; ++c)
    w[c] = counts[c] > 0 ? m / (static_cast<double>(K) * static_cast<double>(counts[c])) : 0.0;
  return w;
}

std::vector<double> midpoint_thresholds(const Dataset& d, std::span<const RowIndex> rows, std::size_t attr) {
  std::vector<double> values;
  values.reserve(rows.size());
  for (RowIndex r : rows)
    values.push_back(d.at(r, attr));
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    double mid = values[i] + (values[i + 1] - values[i]) / 2.0;
    if (!(mid > values[i]))
      mid = values[i + 1];
    out.push_back(mid);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gini tree growing

namespace {

struct WeightedRow {
  RowIndex row;
  double weight;
  int count; // bootstrap multiplicity
};

class GiniGrower {
public:
  GiniGrower(const Dataset& d, int maxDepth, int minLeaf, std::size_t maxFeatures, Rng* rng)
      : d_(d), y_(d.labels()), K_(static_cast<std::size_t>(d.num_classes())), max_depth_(maxDepth),
        min_leaf_(minLeaf), max_features_(maxFeatures), rng_(rng) {}

  TreeModel grow(std::vector<WeightedRow> rows) {
    nodes_.clear();
    grow_node(rows, 0);
    return TreeModel(std::move(nodes_), static_cast<int>(d_.num_attrs()), d_.num_classes(), max_depth_);
  }

private:
  struct Split {
    double score = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
    bool valid = false;

    bool better_than(const Split& o) const {
      if (!o.valid)
        return true;
      if (score != o.score)
        return score < o.score;
      if (feature != o.feature)
        return feature < o.feature;
      return threshold < o.threshold;
    }
  };

  static double weighted_gini(std::span<const double> w, double total) {
    if (total <= 0.0)
      return 0.0;
    double sq = 0.0;
    for (double v : w)
      sq += v * v;
    return total - sq / total;
  }

  void evaluate_feature(std::vector<WeightedRow>& rows, std::size_t f, Split& best) const {
    std::sort(rows.begin(), rows.end(), [&](const WeightedRow& a, const WeightedRow& b) {
      const double va = d_.at(a.row, f), vb = d_.at(b.row, f);
      return va < vb || (va == vb && a.row < b.row);
    });
    std::vector<double> total(K_, 0.0), left(K_, 0.0), right(K_);
    int totalCount = 0;
    for (const auto& r : rows) {
      total[static_cast<std::size_t>(y_[r.row])] += r.weight;
      totalCount += r.count;
    }
    double leftW = 0.0, totalW = std::accumulate(total.begin(), total.end(), 0.0);
    int leftCount = 0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      left[static_cast<std::size_t>(y_[rows[i].row])] += rows[i].weight;
      leftW += rows[i].weight;
      leftCount += rows[i].count;
      const double lo = d_.at(rows[i].row, f), hi = d_.at(rows[i + 1].row, f);
      if (!(lo < hi))
        continue;
      if (leftCount < min_leaf_ || totalCount - leftCount < min_leaf_)
        continue;
      for (std::size_t c = 0; c < K_; ++c)
        right[c] = total[c] - left[c];
      Split cand;
      cand.score = weighted_gini(left, leftW) + weighted_gini(right, totalW - leftW);
      cand.feature = f;
      cand.threshold = lo + (hi - lo) / 2.0;
      if (!(cand.threshold > lo))
        cand.threshold = hi;
      cand.valid = true;
      if (cand.better_than(best))
        best = cand;
    }
  }

  int grow_node(std::vector<WeightedRow>& rows, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    std::vector<double> w(K_, 0.0);
    int count = 0;
    for (const auto& r : rows) {
      w[static_cast<std::size_t>(y_[r.row])] += r.weight;
      count += r.count;
    }
    const double totalW = std::accumulate(w.begin(), w.end(), 0.0);
    TreeNode leaf;
    leaf.label = static_cast<ClassId>(std::max_element(w.begin(), w.end()) - w.begin());
    leaf.distribution.resize(K_);
    for (std::size_t c = 0; c < K_; ++c)
      leaf.distribution[c] = totalW > 0.0 ? w[c] / totalW : 0.0;

    const auto present = std::count_if(w.begin(), w.end(), [](double v) { return v > 0.0; });
    if (present <= 1 || depth >= max_depth_ || count < 2 * min_leaf_) {
      nodes_[static_cast<std::size_t>(index)] = std::move(leaf);
      return index;
    }

    const std::size_t p = d_.num_attrs();
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (max_features_ < p && rng_)
      std::shuffle(order.begin(), order.end(), *rng_);

    // Inspect max_features_ candidates, continuing past the quota only while
    // no valid partition has been found.
    Split best;
    for (std::size_t k = 0; k < p; ++k) {
      if (k >= max_features_ && best.valid)
        break;
      evaluate_feature(rows, order[k], best);
    }
    if (!best.valid) {
      nodes_[static_cast<std::size_t>(index)] = std::move(leaf);
      return index;
    }

    std::vector<WeightedRow> leftRows, rightRows;
    for (const auto& r : rows)
      (d_.at(r.row, best.feature) < best.threshold ? leftRows : rightRows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    TreeNode node;
    node.feature = static_cast<int>(best.feature);
    node.threshold = best.threshold;
    node.label = leaf.label;
    node.left = grow_node(leftRows, depth + 1);
    node.right = grow_node(rightRows, depth + 1);
    nodes_[static_cast<std::size_t>(index)] = std::move(node);
    return index;
  }

  const Dataset& d_;
  const std::vector<ClassId>& y_;
  std::size_t K_;
  int max_depth_;
  int min_leaf_;
  std::size_t max_features_;
  Rng* rng_;
  std::vector<TreeNode> nodes_;
};

void validate(int maxDepth, int minLeaf) {
  if (maxDepth < 1)
    throw Error(ErrorCode::InvalidArgument, "maxDepth must be at least 1");
  if (minLeaf < 1)
    throw Error(ErrorCode::InvalidArgument, "minLeafSize must be at least 1");
}

} // namespace

TreeModel train_standard_tree(const Dataset& d, const LearnerConfig& cfg) {
  validate(cfg.maxDepth, cfg.minLeafSize);
  const auto& y = d.labels();
  const auto w = class_weights(d, cfg.classWeighting);
  std::vector<WeightedRow> rows;
  rows.reserve(d.num_rows());
  for (RowIndex i = 0; i < d.num_rows(); ++i)
    rows.push_back({i, w[static_cast<std::size_t>(y[i])], 1});
  GiniGrower grower(d, cfg.maxDepth, cfg.minLeafSize, d.num_attrs(), nullptr);
  return grower.grow(std::move(rows));
}

TreeModel train_forest_tree(const Dataset& d, const ForestConfig& cfg, std::size_t index) {
  validate(cfg.maxDepth, cfg.minLeafSize);
  const auto& y = d.labels();
  const auto w = class_weights(d, cfg.classWeighting);
  Rng rng(derive_seed(cfg.seed, stream::kForestTree, index));

  const std::size_t n = d.num_rows();
  std::vector<int> draws(n, 0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t k = 0; k < n; ++k)
    ++draws[pick(rng)];
  std::vector<WeightedRow> rows;
  for (RowIndex i = 0; i < n; ++i)
    if (draws[i] > 0)
      rows.push_back({i, draws[i] * w[static_cast<std::size_t>(y[i])], draws[i]});

  const auto maxFeatures =
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d.num_attrs()))));
  GiniGrower grower(d, cfg.maxDepth, cfg.minLeafSize, maxFeatures, &rng);
  return grower.grow(std::move(rows));
}

ForestModel train_forest(const Dataset& d, const ForestConfig& cfg) {
  if (cfg.treeCount < 1)
    throw Error(ErrorCode::InvalidArgument, "treeCount must be at least 1");
  d.labels();
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.treeCount; ++i)
    seeds.push_back(derive_seed(cfg.seed, stream::kForestTree, static_cast<std::uint64_t>(i)));
  return ForestModel(kernels::train_trees(d, cfg), std::move(seeds), cfg);
}

} // namespace crembo
