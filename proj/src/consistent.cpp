#include <algorithm>
#include <numeric>

#include "crembo/learners.hpp"

namespace crembo {

bool satisfies(const TreeModel& model, const Dataset& d, const ConstraintSample& s) {
  check_dimensions(model.num_attrs(), d);
  return std::all_of(s.pairs.begin(), s.pairs.end(), [&](const ConstraintPair& p) {
    return p.allowed.contains(model.predict_row(d.row(p.row)));
  });
}

namespace {

void check_rows(const Dataset& d, const ConstraintSample& s) {
  for (const auto& p : s.pairs)
    if (p.row >= d.num_rows())
      throw Error(ErrorCode::InvalidArgument, "constraint references row " + std::to_string(p.row) +
                                                  " outside the dataset");
}

LearnResult success(TreeModel model, const Dataset& d, const ConstraintSample& s) {
  if (!satisfies(model, d, s))
    throw Error(ErrorCode::ConstraintViolation, "learner produced a model violating its constraints");
  return {LearnStatus::Success, std::move(model)};
}

/// Identical feature vectors whose allowed sets do not intersect make the
/// sample unsatisfiable by any function.
bool has_conflicting_duplicates(const Dataset& d, const ConstraintSample& s) {
  std::vector<std::size_t> order(s.pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rowOf = [&](std::size_t k) { return d.row(s.pairs[k].row); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ra = rowOf(a), rb = rowOf(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  for (std::size_t i = 0; i < order.size();) {
    LabelSet inter = s.pairs[order[i]].allowed;
    std::size_t j = i + 1;
    while (j < order.size() && std::ranges::equal(rowOf(order[i]), rowOf(order[j]))) {
      inter &= s.pairs[order[j]].allowed;
      ++j;
    }
    if (inter.empty())
      return true;
    i = j;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Greedy constrained induction

class ConstrainedGrower {
public:
  ConstrainedGrower(const Dataset& d, const ConstraintSample& s, const LearnerConfig& cfg)
      : d_(d), s_(s), cfg_(cfg), K_(static_cast<std::size_t>(d.num_classes())) {}

  std::optional<TreeModel> grow() {
    std::vector<std::size_t> items(s_.pairs.size());
    std::iota(items.begin(), items.end(), std::size_t{0});
    if (grow_node(items, 0) < 0)
      return std::nullopt;
    return TreeModel(std::move(nodes_), static_cast<int>(d_.num_attrs()), d_.num_classes(), cfg_.maxDepth);
  }

private:
  struct Split {
    std::size_t cover = 0;
    double gini = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
    bool valid = false;
  };

  LabelSet intersection(const std::vector<std::size_t>& items) const {
    LabelSet inter = LabelSet::full(d_.num_classes());
    for (std::size_t k : items)
      inter &= s_.pairs[k].allowed;
    return inter;
  }

  ClassId leaf_label(const std::vector<std::size_t>& items, LabelSet inter) const {
    std::vector<std::size_t> votes(K_, 0);
    for (std::size_t k : items)
      if (inter.contains(s_.pairs[k].preferred))
        ++votes[static_cast<std::size_t>(s_.pairs[k].preferred)];
    ClassId best = inter.lowest();
    for (ClassId c : inter.members())
      if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)])
        best = c;
    return best;
  }

  static std::size_t max_of(const std::vector<std::size_t>& v) { return *std::max_element(v.begin(), v.end()); }

  static double weighted_gini(const std::vector<std::size_t>& counts, std::size_t n) {
    if (n == 0)
      return 0.0;
    double sq = 0.0;
    for (std::size_t c : counts)
      sq += static_cast<double>(c) * static_cast<double>(c);
    return static_cast<double>(n) - sq / static_cast<double>(n);
  }

  void evaluate_feature(std::vector<std::size_t>& items, std::size_t f, Split& best) const {
    auto x = [&](std::size_t k) { return d_.at(s_.pairs[k].row, f); };
    std::sort(items.begin(), items.end(), [&](std::size_t a, std::size_t b) {
      return x(a) < x(b) || (x(a) == x(b) && s_.pairs[a].row < s_.pairs[b].row);
    });
    std::vector<std::size_t> coverAll(K_, 0), prefAll(K_, 0);
    for (std::size_t k : items) {
      for (ClassId c : s_.pairs[k].allowed.members())
        ++coverAll[static_cast<std::size_t>(c)];
      ++prefAll[static_cast<std::size_t>(s_.pairs[k].preferred)];
    }
    std::vector<std::size_t> coverL(K_, 0), prefL(K_, 0), coverR(K_), prefR(K_);
    const std::size_t n = items.size();
    const auto minLeaf = static_cast<std::size_t>(cfg_.minLeafSize);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto& p = s_.pairs[items[i]];
      for (ClassId c : p.allowed.members())
        ++coverL[static_cast<std::size_t>(c)];
      ++prefL[static_cast<std::size_t>(p.preferred)];
      const double lo = x(items[i]), hi = x(items[i + 1]);
      if (!(lo < hi))
        continue;
      const std::size_t nL = i + 1, nR = n - nL;
      if (nL < minLeaf || nR < minLeaf)
        continue;
      for (std::size_t c = 0; c < K_; ++c) {
        coverR[c] = coverAll[c] - coverL[c];
        prefR[c] = prefAll[c] - prefL[c];
      }
      Split cand;
      cand.cover = max_of(coverL) + max_of(coverR);
      cand.gini = weighted_gini(prefL, nL) + weighted_gini(prefR, nR);
      cand.feature = f;
      cand.threshold = lo + (hi - lo) / 2.0;
      if (!(cand.threshold > lo))
        cand.threshold = hi;
      cand.valid = true;
      // Features and thresholds are visited in ascending order, so only a
      // strictly better score replaces the incumbent.
      if (!best.valid || cand.cover > best.cover || (cand.cover == best.cover && cand.gini < best.gini))
        best = cand;
    }
  }

  /// Returns the node index, or -1 on failure.
  int grow_node(std::vector<std::size_t>& items, int depth) {
    const LabelSet inter = intersection(items);
    if (!inter.empty()) {
      TreeNode leaf;
      leaf.label = leaf_label(items, inter);
      nodes_.push_back(std::move(leaf));
      return static_cast<int>(nodes_.size()) - 1;
    }
    if (depth >= cfg_.maxDepth)
      return -1;

    Split best;
    for (std::size_t f = 0; f < d_.num_attrs(); ++f)
      evaluate_feature(items, f, best);
    if (!best.valid)
      return -1;

    std::vector<std::size_t> left, right;
    for (std::size_t k : items)
      (d_.at(s_.pairs[k].row, best.feature) < best.threshold ? left : right).push_back(k);

    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const int l = grow_node(left, depth + 1);
    if (l < 0)
      return -1;
    const int r = grow_node(right, depth + 1);
    if (r < 0)
      return -1;
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(best.feature);
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  const Dataset& d_;
  const ConstraintSample& s_;
  const LearnerConfig& cfg_;
  std::size_t K_;
  std::vector<TreeNode> nodes_;
};

} // namespace

LearnResult ConstrainedTreeLearner::learn(const Dataset& d, const ConstraintSample& s) const {
  if (cfg_.maxDepth < 1 || cfg_.minLeafSize < 1)
    throw Error(ErrorCode::InvalidArgument, "constrained tree needs maxDepth >= 1 and minLeafSize >= 1");
  check_rows(d, s);
  if (has_conflicting_duplicates(d, s))
    return {LearnStatus::ConflictingDuplicate, std::nullopt};
  if (s.pairs.empty())
    return success(TreeModel::constant(0, static_cast<int>(d.num_attrs()), d.num_classes(), cfg_.maxDepth), d, s);
  ConstrainedGrower grower(d, s, cfg_);
  auto tree = grower.grow();
  if (!tree)
    return {LearnStatus::Fail, std::nullopt};
  return success(std::move(*tree), d, s);
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration

namespace {

struct Candidate {
  std::size_t feature;
  double threshold;
};

class Enumerator {
public:
  Enumerator(const Dataset& d, const ConstraintSample& s) : d_(d), s_(s) {
    IndexList rows;
    for (const auto& p : s.pairs)
      rows.push_back(p.row);
    for (std::size_t f = 0; f < d.num_attrs(); ++f)
      for (double t : midpoint_thresholds(d, rows, f))
        candidates_.push_back({f, t});
  }

  const std::vector<Candidate>& candidates() const { return candidates_; }

  LabelSet inter(const std::vector<std::size_t>& items) const {
    LabelSet acc = LabelSet::full(d_.num_classes());
    for (std::size_t k : items)
      acc &= s_.pairs[k].allowed;
    return acc;
  }

  void partition(const std::vector<std::size_t>& items, const Candidate& c, std::vector<std::size_t>& left,
                 std::vector<std::size_t>& right) const {
    left.clear();
    right.clear();
    for (std::size_t k : items)
      (d_.at(s_.pairs[k].row, c.feature) < c.threshold ? left : right).push_back(k);
  }

  /// First consistent stump over `items`: (candidate index, left label, right label).
  std::optional<std::tuple<std::size_t, ClassId, ClassId>> first_stump(const std::vector<std::size_t>& items) const {
    std::vector<std::size_t> left, right;
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
      partition(items, candidates_[i], left, right);
      const LabelSet l = inter(left), r = inter(right);
      if (!l.empty() && !r.empty())
        return std::tuple{i, l.lowest(), r.lowest()};
    }
    return std::nullopt;
  }

private:
  const Dataset& d_;
  const ConstraintSample& s_;
  std::vector<Candidate> candidates_;
};

TreeNode leaf_node(ClassId c) {
  TreeNode n;
  n.label = c;
  return n;
}

TreeNode split_node(const Candidate& c, int left, int right) {
  TreeNode n;
  n.feature = static_cast<int>(c.feature);
  n.threshold = c.threshold;
  n.left = left;
  n.right = right;
  return n;
}

} // namespace

std::size_t ExhaustiveLearner::candidate_count(const Dataset& d, const ConstraintSample& s) const {
  Enumerator e(d, s);
  const std::size_t K = static_cast<std::size_t>(d.num_classes());
  const std::size_t T = e.candidates().size();
  std::size_t total = 0;
  if (spec_.constants)
    total += K;
  if (spec_.stumps)
    total += T * K * K;
  if (spec_.depth2) {
    const std::size_t side = K + T * K * K;
    total += T * side * side;
  }
  return total;
}

LearnResult ExhaustiveLearner::learn(const Dataset& d, const ConstraintSample& s) const {
  check_rows(d, s);
  const std::size_t count = candidate_count(d, s);
  if (count > spec_.budget)
    throw Error(ErrorCode::EnumerationBudgetExceeded,
                std::to_string(count) + " candidates exceed the budget of " + std::to_string(spec_.budget));
  const int attrs = static_cast<int>(d.num_attrs());
  const int K = d.num_classes();
  const int maxDepth = spec_.depth2 ? 2 : 1;

  Enumerator e(d, s);
  std::vector<std::size_t> all(s.pairs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  if (spec_.constants) {
    const LabelSet i = e.inter(all);
    if (!i.empty())
      return success(TreeModel::constant(i.lowest(), attrs, K, maxDepth), d, s);
  }
  if (spec_.stumps) {
    if (auto hit = e.first_stump(all)) {
      auto [ci, l, r] = *hit;
      return success(TreeModel({split_node(e.candidates()[ci], 1, 2), leaf_node(l), leaf_node(r)}, attrs, K, maxDepth),
                     d, s);
    }
  }
  if (spec_.depth2) {
    // Children of the root are independent; the first consistent subtree on
    // each side (leaf before stumps) yields the first consistent tree in
    // enumeration order.
    std::vector<std::size_t> left, right;
    for (const auto& root : e.candidates()) {
      e.partition(all, root, left, right);
      auto solve = [&](const std::vector<std::size_t>& items) -> std::optional<std::vector<TreeNode>> {
        const LabelSet i = e.inter(items);
        if (!i.empty())
          return std::vector<TreeNode>{leaf_node(i.lowest())};
        if (auto hit = e.first_stump(items)) {
          auto [ci, l, r] = *hit;
          return std::vector<TreeNode>{split_node(e.candidates()[ci], 0, 0), leaf_node(l), leaf_node(r)};
        }
        return std::nullopt;
      };
      auto ls = solve(left);
      if (!ls)
        continue;
      auto rs = solve(right);
      if (!rs)
        continue;
      std::vector<TreeNode> nodes{split_node(root, 1, 1 + static_cast<int>(ls->size()))};
      auto append = [&](std::vector<TreeNode>& sub) {
        const int base = static_cast<int>(nodes.size());
        if (!sub[0].is_leaf()) {
          sub[0].left = base + 1;
          sub[0].right = base + 2;
        }
        nodes.insert(nodes.end(), sub.begin(), sub.end());
      };
      append(*ls);
      append(*rs);
      return success(TreeModel(std::move(nodes), attrs, K, maxDepth), d, s);
    }
  }
  return {LearnStatus::Fail, std::nullopt};
}

} // namespace crembo
